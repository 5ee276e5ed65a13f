"""Command-line front end.

Exit status: 0 success, 1 a requested verification failed (the first
violating tuple is printed), 2 configuration or feasibility error,
3 precision exhausted.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

from . import cantor, linear, poly, serialize, smooth
from .errors import FieldSpecError, IndeterminateAtPrecision, InfeasibleParameters, PrecisionExhausted
from .field import Ball, FieldSpec, ball_of, make_field_spec

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_PRECISION = 0, 1, 2, 3

NAMED_FIELDS = {
    "Z2": dict(characteristic="zero", p=2),
    "Z3": dict(characteristic="zero", p=3),
    "Z5": dict(characteristic="zero", p=5),
    "Z7": dict(characteristic="zero", p=7),
    "F2t": dict(characteristic="finite", p=2),
    "F3t": dict(characteristic="finite", p=3),
    "F9t": dict(characteristic="finite", p=3, f=2, residue_poly=(1, 0, 1)),
    "Q2sqrt2": dict(characteristic="zero", p=2, e=2, eisenstein_coeffs=((-2,), (0,))),
}


def load_field(arg: str, N: int | None) -> FieldSpec:
    if arg in NAMED_FIELDS:
        return make_field_spec(N=N or 8, **NAMED_FIELDS[arg])
    with open(arg, encoding="utf-8") as fh:
        spec = serialize.load_field_spec(fh.read())
    if N is not None and N != spec.N:
        spec = make_field_spec(spec.characteristic, spec.p, spec.f, spec.e, spec.residue_poly, spec.eisenstein_coeffs, N)
    return spec


def load_poly(spec: FieldSpec, args) -> poly.IntPolynomial:
    if getattr(args, "poly", None):
        with open(args.poly, encoding="utf-8") as fh:
            return poly.parse_poly(spec, fh.read())
    return poly.builtin_poly(spec, args.fn)


def load_smooth(spec: FieldSpec, args) -> smooth.SmoothFunctionSpec:
    if getattr(args, "table", None):
        with open(args.table, encoding="utf-8") as fh:
            return smooth.load_tabulated(spec, fh.read())
    return smooth.smooth_builtin(spec, args.fn)


def _ints(text: str) -> list:
    return [int(t) for t in text.split(",") if t.strip()]


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _families(spec: FieldSpec, centers, mu: int):
    return [[ball_of(spec.from_int(c), mu)] for c in centers]


# --- subcommands -----------------------------------------------------------------


def cmd_poly_avoid(args) -> int:
    spec = load_field(args.field, args.N)
    P = load_poly(spec, args)
    if len(args.centers) != P.v:
        raise InfeasibleParameters(f"need {P.v} centers, got {len(args.centers)}")
    fams = _families(spec, args.centers, args.mu)
    var = P.nvars - 1 if args.var is None else args.var
    A = poly.derivative_lower_bound(P, var, fams)
    S, cert = poly.avoid_single_scale(fams, P, A, args.mu, args.nu, var)
    ok, best, witness, checked = poly.verify_certificate(P, S, cert.lower_bound_exp)
    lines = [
        "# polynomial avoidance certificate",
        f"field {spec.name()}",
        f"bound {cert.bound_text()}",
    ]
    lines += [f"param {k} {v}" for k, v in sorted(cert.params.items())]
    for i, fam in enumerate(S):
        lines.append(f"S{i + 1} {' '.join(serialize.ball_text(B) for B in fam)}")
    lines.append(f"verify checked={checked} max_valuation={best} ok={ok}")
    _emit(args, "\n".join(lines) + "\n")
    if args.verify and not ok:
        print(f"violation: {[serialize.ball_text(B) for B in witness]}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_smooth_avoid(args) -> int:
    spec = load_field(args.field, args.N)
    f = load_smooth(spec, args)
    if len(args.centers) != f.v:
        raise InfeasibleParameters(f"need {f.v} centers, got {len(args.centers)}")
    fams = _families(spec, args.centers, args.mu)
    S, cert = smooth.avoid_single_scale_smooth(fams, f, args.mu, args.nu, args.lam)
    ok, best, witness, checked = smooth.verify_smooth(f, S, cert.lower_bound_exp)
    lines = ["# smooth avoidance certificate", f"field {spec.name()}", f"bound {cert.bound_text()}"]
    lines += [f"param {k} {v}" for k, v in sorted(cert.params.items())]
    for i, r in enumerate(cert.projections):
        lines.append(f"projection {i + 1} a={r.a_ok} b={r.b_ok} c={r.c_ok} B'={r.b_prime} bound={r.b_bound}")
    lines += [f"S{i + 1} count={len(fam)}" for i, fam in enumerate(S)]
    lines.append(f"verify checked={checked} max_valuation={best} ok={ok}")
    _emit(args, "\n".join(lines) + "\n")
    bad = not ok or not all(r.ok for r in cert.projections)
    if args.verify and bad:
        print(f"violation: {[serialize.ball_text(B) for B in witness] if witness else 'projection'}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _registry(spec: FieldSpec, args) -> cantor.Registry:
    reg = cantor.Registry()
    for path in args.poly or []:
        with open(path, encoding="utf-8") as fh:
            reg.add(poly.parse_poly(spec, fh.read()))
    for name in args.fn or []:
        reg.add(poly.builtin_poly(spec, name))
    for name in args.smooth or []:
        reg.add(smooth.smooth_builtin(spec, name))
    if not len(reg):
        raise InfeasibleParameters("no functions given (use --poly, --fn or --smooth)")
    return reg


def _build_cantor(args):
    spec = load_field(args.field, args.N)
    reg = _registry(spec, args)
    tree, queue, halted = cantor.run(spec, reg, args.depth, args.lam0, gap=args.gap)
    return spec, reg, tree, queue, halted


def _cantor_report(tree, results, halted) -> str:
    text = serialize.dump_tree(tree) + serialize.dump_verification(results)
    if halted:
        text += f"halted precision: {halted}\n"
    return text


def _first_failure(results):
    for r in results:
        if not r.ok:
            return r
    return None


def cmd_cantor(args) -> int:
    _, _, tree, _, halted = _build_cantor(args)
    results = cantor.verify_certificates(tree) if args.verify else []
    _emit(args, _cantor_report(tree, results, halted))
    bad = _first_failure(results)
    if bad is not None:
        print(f"violation: item {bad.item.label()} witness {[serialize.ball_text(B) for B in bad.witness]}", file=sys.stderr)
        return EXIT_VERIFY
    if args.verify and not cantor.check_nesting(tree):
        print("violation: nesting", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_PRECISION if halted and args.strict else EXIT_OK


def cmd_verify(args) -> int:
    _, _, tree, _, halted = _build_cantor(args)
    results = cantor.verify_certificates(tree)
    text = _cantor_report(tree, results, halted)
    status = EXIT_OK
    bad = _first_failure(results)
    if bad is not None:
        print(f"violation: item {bad.item.label()} witness {[serialize.ball_text(B) for B in bad.witness]}", file=sys.stderr)
        status = EXIT_VERIFY
    if args.against:
        with open(args.against, encoding="utf-8") as fh:
            if fh.read() != text:
                print(f"violation: output differs from {args.against}", file=sys.stderr)
                status = EXIT_VERIFY
    _emit(args, text)
    return status


def cmd_audit(args) -> int:
    _, reg, tree, _, halted = _build_cantor(args)
    D = reg.dimension(1, tree.n)
    s = float(args.s if args.s is not None else Fraction(1, 2) * D)
    lines = ["# dimension audit", f"target D={D} s={s}"]
    top = max(tree.lam_chain)
    status = EXIT_OK
    for mu in range(tree.lam0, top + 1):
        a, b = cantor.minkowski_count(tree, mu), cantor.minkowski_count_trie(tree, mu)
        c = cantor.minkowski_count_enumerate(tree, mu)
        lines.append(f"minkowski mu={mu} branching={a} trie={b} enumerated={c} agree={a == b == c}")
        if not a == b == c:
            status = EXIT_VERIFY
    audits = cantor.audit_coverings(tree, s, args.coverings, args.seed)
    for i, a in enumerate(audits):
        lines.append(
            f"covering {i} V={serialize.ball_text(a.V)} k={a.k} size={a.size} s(V)={a.s_value!r} "
            f"superadditive={a.superadditive and a.structural} majority={a.majority} part1={a.part1} "
            f"part2_count={a.part2_count} holds={a.holds} prop_bound={a.prop_bound}"
        )
        if not (a.holds and a.superadditive and a.structural):
            status = EXIT_VERIFY
    if halted:
        lines.append(f"halted precision: {halted}")
    _emit(args, "\n".join(lines) + "\n")
    return status


def cmd_linear(args) -> int:
    spec = load_field(args.field, args.N)
    form = linear.make_linear_form(spec, _ints(args.alpha), Fraction(args.C))
    lam0 = args.lam0 if args.lam0 is not None else linear.min_lambda0(form)
    tree = linear.build_simul_set(form, lam0, args.depth)
    lines = [
        f"# simultaneous avoidance alpha={list(form.alpha_int)} C={form.C}",
        f"subset_exponents {sorted(form.subset_exponents().items())}",
        f"c_star {form.c_star} lam0 {lam0}",
    ]
    lines += [f"dominance j={j} holds={linear.dominance_holds(form, lam0, j)}" for j in range(1, args.depth + 1)]
    text = "\n".join(lines) + "\n" + serialize.dump_tree(tree)
    status = EXIT_OK
    if args.verify:
        sep = linear.separation_report(tree)
        quad = linear.separation_report(tree, quadratic=True)
        text += serialize_lines(sep, quad)
        dom = all(linear.dominance_holds(form, lam0, j) for j in range(1, args.depth + 1))
        if not all(s.ok for s in sep + quad) or not dom:
            bad = next((s for s in sep + quad if not s.ok), None)
            print(f"violation: depth {bad.depth if bad else 'dominance'}", file=sys.stderr)
            status = EXIT_VERIFY
    _emit(args, text)
    return status


def serialize_lines(sep, quad) -> str:
    return linear.dump_separation(sep) + linear.dump_separation(quad).replace(
        "# separation report", "# quadratic perturbation nonvanishing"
    )


def cmd_box_count(args) -> int:
    spec = load_field(args.field, args.N)
    f = load_smooth(spec, args)
    T = Ball(tuple(spec.zero() for _ in range(f.nvars)), 0)
    if args.mu:
        T = ball_of([spec.zero()] * f.nvars, args.mu)
    boxes = smooth.zero_boxes(f, T, args.lam)
    bound = f.box_bound(args.mu, args.lam)
    slabs = smooth.slab_counts(f, boxes)
    worst = max(slabs.values(), default=0)
    lines = [
        f"count {len(boxes)}",
        f"bound C3*q^(-mu+lam(nv-m)) = {bound} (C3 = {f.C3})",
        f"grid q^(lam(nv-m)) = {spec.q ** (args.lam * (f.nvars - f.m))}",
        f"slab_max {worst} slab_bound {smooth.slab_bound(f)}",
        f"within_bound {len(boxes) <= bound}",
    ]
    _emit(args, "\n".join(lines) + "\n")
    if args.verify and (len(boxes) > bound or worst > smooth.slab_bound(f)):
        return EXIT_VERIFY
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="localavoid", description="Configuration-avoiding Cantor sets in local rings.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--field", required=True, help="field-spec file or a name: " + ", ".join(NAMED_FIELDS))
        p.add_argument("--N", type=int, default=None, help="override the digit precision")
        p.add_argument("--out", default=None)
        p.add_argument("--verify", action="store_true")

    p = sub.add_parser("poly-avoid", help="single-scale polynomial avoidance")
    common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--poly")
    g.add_argument("--fn")
    p.add_argument("--centers", type=_ints, required=True, help="one integer center per variable")
    p.add_argument("--mu", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--var", type=int, default=None)
    p.set_defaults(func=cmd_poly_avoid)

    p = sub.add_parser("smooth-avoid", help="single-scale smooth avoidance")
    common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--table")
    g.add_argument("--fn")
    p.add_argument("--centers", type=_ints, required=True)
    p.add_argument("--mu", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--lam", type=int, default=None)
    p.set_defaults(func=cmd_smooth_avoid)

    for name, func, help_ in (
        ("cantor", cmd_cantor, "queue-driven construction"),
        ("verify", cmd_verify, "rebuild and re-verify a construction"),
        ("audit", cmd_audit, "Minkowski and s-contribution audits"),
    ):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--poly", action="append")
        p.add_argument("--fn", action="append")
        p.add_argument("--smooth", action="append")
        p.add_argument("--depth", type=int, default=3)
        p.add_argument("--lam0", type=int, default=1)
        p.add_argument("--gap", type=int, default=1)
        if name == "cantor":
            p.add_argument("--strict", action="store_true", help="exit 3 when precision stops the run early")
        if name == "verify":
            p.add_argument("--against", default=None, help="compare with a saved report byte for byte")
        if name == "audit":
            p.add_argument("--coverings", type=int, default=100)
            p.add_argument("--s", type=float, default=None)
            p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)

    p = sub.add_parser("linear-simul", help="simultaneous avoidance for a linearization")
    common(p)
    p.add_argument("--alpha", required=True)
    p.add_argument("--C", default="1")
    p.add_argument("--lam0", type=int, default=None)
    p.add_argument("--depth", type=int, default=4)
    p.set_defaults(func=cmd_linear)

    p = sub.add_parser("box-count", help="zero-set box count against the counting bound")
    common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--table")
    g.add_argument("--fn")
    p.add_argument("--mu", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    p.set_defaults(func=cmd_box_count)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (InfeasibleParameters, FieldSpecError, IndeterminateAtPrecision, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
