"""Text formats: field-spec files, ball digits and construction trees.

Every writer is deterministic: identical inputs give byte-identical text.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .errors import FieldSpecError
from .field import Ball, Element, FieldSpec, make_field_spec


def load_field_spec(text: str) -> FieldSpec:
    """Parse ``key = value`` lines (``#`` comments allowed).

    Keys: ``characteristic`` (``zero`` or ``finite``), ``p``, ``f``, ``e``,
    ``N``, ``residue_poly`` (F_p coefficients, low degree first, JSON list)
    and ``eisenstein_coeffs`` (JSON list of ``e`` coefficient vectors with
    ``f`` signed integer coordinates each, low degree first).
    """
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FieldSpecError(f"bad field-spec line {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    known = {"characteristic", "p", "f", "e", "N", "residue_poly", "eisenstein_coeffs"}
    unknown = set(values) - known
    if unknown:
        raise FieldSpecError(f"unknown field-spec keys {sorted(unknown)}")
    try:
        kwargs = {
            "characteristic": values.get("characteristic", "zero"),
            "p": int(values["p"]),
            "f": int(values.get("f", 1)),
            "e": int(values.get("e", 1)),
            "N": int(values.get("N", 8)),
        }
        if "residue_poly" in values:
            kwargs["residue_poly"] = tuple(json.loads(values["residue_poly"]))
        if "eisenstein_coeffs" in values:
            kwargs["eisenstein_coeffs"] = tuple(tuple(a) for a in json.loads(values["eisenstein_coeffs"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise FieldSpecError(f"malformed field spec: {exc}") from exc
    return make_field_spec(**kwargs)


def dump_field_spec(spec: FieldSpec) -> str:
    lines = [
        f"characteristic = {spec.characteristic}",
        f"p = {spec.p}",
        f"f = {spec.f}",
        f"e = {spec.e}",
        f"N = {spec.N}",
        f"residue_poly = {json.dumps(list(spec.residue_poly))}",
    ]
    if spec.eisenstein_coeffs:
        lines.append(f"eisenstein_coeffs = {json.dumps([list(a) for a in spec.eisenstein_coeffs])}")
    return "\n".join(lines) + "\n"


def element_digits(x: Element, lam: int | None = None) -> str:
    """Base-p digits of each basis coordinate (low first), ``|``-separated,
    keeping only uniformizer positions below ``lam``."""
    s = x.spec
    chunks = []
    for idx, c in enumerate(x.coords):
        k2 = idx % s.e
        digits = []
        for j in range(s.N):
            if lam is not None and j * s.e + k2 >= lam:
                break
            digits.append((c // s.p**j) % s.p)
        sep = "" if s.p <= 10 else ","
        chunks.append(sep.join(map(str, digits)) or "-")
    return "|".join(chunks)


def ball_text(B: Ball) -> str:
    return ";".join(element_digits(c, B.lam) for c in B.center) + f"@{B.lam}"


def _frac(x) -> str:
    return str(Fraction(x)) if isinstance(x, Fraction) else str(x)


def dump_tree(tree) -> str:
    """One record per ball (stage, parent, radius exponent, center digits),
    followed by the stage schedule and the certificate table."""
    from .cantor import ConstructionTree  # noqa: F401  (type reference only)

    leaf_ids = set(tree.leaves.values())
    out = ["# construction tree", f"field {tree.spec.name()}", f"n {tree.n} lam0 {tree.lam0}"]
    out.append(f"chain {' '.join(map(str, tree.lam_chain))}")
    for node in tree.nodes:
        out.append(
            f"ball {node.id} stage={node.stage} parent={node.parent} lam={node.ball.lam} "
            f"leaf={int(node.id in leaf_ids)} center={ball_text(node.ball)}"
        )
    for rec in tree.stages:
        out.append(
            f"stage {rec.j} item={rec.item.label()} case={rec.case} mu={rec.mu} nu={rec.nu} "
            f"lam={rec.lam} L={rec.L} A={rec.A} eps={_frac(rec.eps)} eps_ok={rec.eps_ok}"
        )
    for i, cert in enumerate(tree.certificates):
        sigma = " ".join(ball_text(B) for B in cert.sigma_balls)
        out.append(f"cert {i} stage={cert.stage} item={cert.item.label()} kind={cert.kind} L={cert.L} sigma={sigma}")
    return "\n".join(out) + "\n"


def dump_verification(results) -> str:
    """One line per re-verified certificate with the largest observed
    valuation (the smallest observed ``|value|`` exponent)."""
    out = ["# certificate re-verification"]
    for r in results:
        out.append(
            f"item={r.item.label()} bound=q^-{r.L} max_valuation={r.max_valuation} "
            f"checked={r.checked} nonvanishing={r.nonvanishing} ok={r.ok}"
        )
    return "\n".join(out) + "\n"
