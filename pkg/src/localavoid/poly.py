"""Polynomials with finite-height coefficients and the single-scale
polynomial avoidance step.

Coefficients are stored as ``(sign, magnitude)`` pairs with a finite-height
magnitude, so that ``x1 - 2*x2 + x3`` keeps the bounded height of ``2`` even
though ``-2`` itself has infinite height in characteristic zero.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

from . import kernels
from .errors import DerivativeVanishes, InfeasibleParameters, PrecisionExhausted
from .field import Ball, Element, FieldSpec, ball_of, subdivide, valuation
from .height import height, height_profile


@dataclass(frozen=True)
class IntPolynomial:
    """Polynomial in ``v`` points of ``R**n`` (``n*v`` variables, variable-major)."""

    spec: FieldSpec
    n: int
    v: int
    terms: tuple  # ((exps, sign, magnitude), ...) sorted by exps

    @classmethod
    def from_terms(cls, spec: FieldSpec, n: int, v: int, terms) -> "IntPolynomial":
        """Build from ``{exps: coefficient}`` where a coefficient is an int
        (sign taken from it) or a ``(sign, Element)`` pair."""
        items = terms.items() if isinstance(terms, dict) else terms
        out = {}
        for exps, coef in items:
            exps = tuple(exps)
            if len(exps) != n * v:
                raise ValueError(f"exponent tuple {exps} should have {n * v} entries")
            if isinstance(coef, int):
                sign = -1 if coef < 0 else 1
                mag = spec.from_int(abs(coef))
            else:
                sign, mag = coef
            if not any(mag.coords):
                continue
            if exps in out:
                raise ValueError(f"duplicate monomial {exps}")
            out[exps] = (sign, mag)
        return cls(spec, n, v, tuple((e, s, m) for e, (s, m) in sorted(out.items())))

    @property
    def nvars(self) -> int:
        return self.n * self.v

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _, _ in self.terms), default=0)

    @property
    def coeff_height_bound(self) -> int:
        """``b``: the largest height among coefficient magnitudes."""
        return max((height(m) for _, _, m in self.terms), default=0)

    @property
    def monomial_count_bound(self) -> int:
        """``s = binom(d + nv, nv)``."""
        return math.comb(self.degree + self.nvars, self.nvars)

    def coefficient(self, exps) -> Element:
        for e, s, m in self.terms:
            if e == tuple(exps):
                return m if s > 0 else -m
        return self.spec.zero()

    def is_constant(self) -> bool:
        return all(not any(e) for e, _, _ in self.terms)

    def constant_value(self) -> Element:
        return self.coefficient((0,) * self.nvars)

    def __call__(self, *points):
        return eval_poly(self, points)


def eval_poly(P: IntPolynomial, x) -> Element:
    """Exact value at a ``v``-tuple of ``n``-tuples (or bare Elements when n = 1)."""
    flat = _flatten(P, x)
    acc = P.spec.zero()
    for exps, sign, mag in P.terms:
        term = mag
        for xi, k in zip(flat, exps):
            if k:
                term = term * xi**k
        acc = acc + term if sign > 0 else acc - term
    return acc


def _flatten(P: IntPolynomial, x) -> list:
    flat = []
    for pt in x:
        if isinstance(pt, Element):
            flat.append(pt)
        else:
            flat.extend(pt)
    if len(flat) != P.nvars:
        raise ValueError(f"expected {P.nvars} coordinates, got {len(flat)}")
    return flat


def partial_derivative(P: IntPolynomial, var: int) -> IntPolynomial:
    """Formal derivative in flattened variable ``var`` (0-based)."""
    out = []
    for exps, sign, mag in P.terms:
        k = exps[var]
        if not k:
            continue
        new_mag = mag * k
        if not any(new_mag.coords):
            continue
        new_exps = exps[:var] + (k - 1,) + exps[var + 1:]
        out.append((new_exps, sign, new_mag))
    return IntPolynomial(P.spec, P.n, P.v, tuple(sorted(out, key=lambda t: t[0])))


def derivative_chain(P: IntPolynomial) -> list[int]:
    """Variables ``[c_1, ..., c_r]`` such that differentiating in that order
    ends at a nonzero constant.  Monomials are tried from the highest total
    degree down; in characteristic ``p`` a monomial whose factorial weight
    vanishes is skipped."""
    if P.is_constant():
        return []
    for exps, _, _ in sorted(P.terms, key=lambda t: (-sum(t[0]), t[0])):
        chain = [var for var, k in enumerate(exps) for _ in range(k)]
        Q = P
        for var in chain:
            Q = partial_derivative(Q, var)
        if Q.is_constant() and any(Q.constant_value().coords):
            return chain
    raise InfeasibleParameters("no partial derivative of this polynomial is a nonzero constant")


# --- evaluation over ball products -----------------------------------------


def _kernel_terms(P: IntPolynomial):
    M = P.spec.modulus
    return [((m.coords[0] if s > 0 else -m.coords[0]) % M, e) for e, s, m in P.terms]


def max_valuation_over(P: IntPolynomial, columns, groups=None, stop_at=None):
    """Largest valuation of ``P`` over the product of point lists.

    ``columns[i]`` lists the candidate points (n-tuples of Elements) of
    variable ``i``.  Returns ``(max_valuation, index_tuple, checked)``, with
    ``cap`` standing for "zero at precision" and ``-1`` when nothing was checked.
    """
    spec = P.spec
    if spec.is_Zp:
        cols = [[tuple(c.coords[0] for c in pt) for pt in col] for col in columns]
        return kernels.product_max_valuation(
            _kernel_terms(P), cols, spec.modulus, spec.p, spec.cap, groups, stop_at
        )
    best, arg, checked = -1, None, 0
    for idx in itertools.product(*[range(len(c)) for c in columns]):
        if groups is not None and all(groups[i][j] == groups[0][idx[0]] for i, j in enumerate(idx)):
            continue
        val = valuation(eval_poly(P, [columns[i][j] for i, j in enumerate(idx)]))
        val = spec.cap if val is None else val
        checked += 1
        if val > best:
            best, arg = val, idx
            if stop_at is not None and best >= stop_at:
                break
    return best, arg, checked


def centers(family) -> list:
    return [B.center for B in family]


def derivative_lower_bound(P: IntPolynomial, var: int, families) -> int:
    """Certified ``A`` with ``|dP/dx_var| >= q**-A`` on the product of the
    ball families.

    A ball product on which the derivative's center value has valuation
    below the coarsest radius exponent carries that valuation throughout
    (polynomials over R are 1-Lipschitz); other products are subdivided.
    """
    g = partial_derivative(P, var)
    spec = P.spec
    if g.is_constant():
        val = valuation(g.constant_value())
        if val is None:
            raise DerivativeVanishes(f"derivative in variable {var} is zero")
        return val
    coarsest = min(B.lam for fam in families for B in fam)
    best, _, _ = max_valuation_over(g, [centers(f) for f in families])
    if best < coarsest:
        return best
    A = -1
    work = list(itertools.product(*families))
    while work:
        tup = work.pop()
        rho = min(B.lam for B in tup)
        val = valuation(eval_poly(g, [B.center for B in tup]))
        if val is not None and val < rho:
            A = max(A, val)
            continue
        if rho >= spec.cap:
            raise DerivativeVanishes(f"derivative in variable {var} vanishes at precision on {tup}")
        parts = [subdivide(B, rho + 1) if B.lam == rho else [B] for B in tup]
        work.extend(itertools.product(*parts))
    return A


# --- avoidance certificate and the single-scale step ------------------------


@dataclass
class AvoidanceCertificate:
    """``|f| >= q**-lower_bound_exp`` on ``S_1 x ... x S_v``."""

    covered_tuple: tuple
    lower_bound_exp: int
    function: str
    params: dict = field(default_factory=dict)

    def bound_text(self) -> str:
        return f"|f| >= q^-{self.lower_bound_exp}"


def _per_var(value, v, name):
    if isinstance(value, int):
        return [value] * v
    value = list(value)
    if len(value) != v:
        raise ValueError(f"{name} needs {v} entries")
    return value


def single_scale_exponents(P: IntPolynomial, A: int, nu_max: int, profile=None) -> dict:
    """The radius exponents of the avoidance step.

    With grid points of height ``h`` (canonical centers of ``q**-nu`` balls,
    ``h = nu/e - 1``), ``P`` at grid points is a difference of two elements of
    height at most ``hp = b + d*h + d*C_mul + s*C_add``, hence zero or of
    valuation below ``K0 = e*(hp + 1)``.  A shift ``delta`` of valuation
    ``A + K0`` in the variable with derivative bound ``q**-A`` moves the value
    by exactly ``q**-(2A + K0)``, so ``|P| >= q**-L`` with ``L = 2A + K0`` on
    balls of exponent ``L + 1``.
    """
    spec = P.spec
    profile = profile or height_profile(spec)
    if profile.C_mul is None:
        raise InfeasibleParameters(f"multiplicative height slack is unbounded in {spec.name()}")
    e = spec.e
    d = P.degree
    b = P.coeff_height_bound
    s = P.monomial_count_bound
    h = nu_max // e - 1
    hp = b + d * h + d * profile.C_mul + s * profile.C_add
    K0 = e * (hp + 1)
    delta_val = A + K0
    L = A + delta_val
    return {
        "h": h, "b": b, "d": d, "s": s, "C_add": profile.C_add, "C_mul": profile.C_mul,
        "hp": hp, "K0": K0, "A": A, "delta_val": delta_val, "L": L, "lam": L + 1,
    }


def avoid_single_scale(
    families, P: IntPolynomial, A: int, mu, nu, var: int | None = None, profile=None, lam_min: int = 0
):
    """Select ``S_i`` inside ``T_i`` with ``P`` bounded away from zero.

    ``families[i]`` is the list of balls making up ``T_i`` (each of exponent
    at most ``mu``).  ``mu`` and ``nu`` may be per-variable lists.  Every
    ``q**-nu`` ball ``U`` of ``T_i`` receives exactly one ball of ``S_i``:
    the ``q**-lam`` ball at the canonical center of ``U``, shifted by
    ``delta = pi**delta_val`` in variable ``var`` for the perturbed point.
    ``lam_min`` forces finer selected balls (the bound is unaffected).
    Returns ``(S, certificate)``.
    """
    spec = P.spec
    v, n = P.v, P.n
    if len(families) != v:
        raise ValueError(f"need {v} ball families")
    var = P.nvars - 1 if var is None else var
    point, coord = divmod(var, n)
    mus = _per_var(mu, v, "mu")
    nus = _per_var(nu, v, "nu")
    for i in range(v):
        if nus[i] <= mus[i]:
            raise InfeasibleParameters(f"nu = {nus[i]} must exceed mu = {mus[i]}")
        if spec.is_zero_char and nus[i] % spec.e:
            raise InfeasibleParameters(f"nu = {nus[i]} must be divisible by e = {spec.e}")
        if any(B.lam > mus[i] for B in families[i]):
            raise InfeasibleParameters(f"T_{i + 1} has balls finer than q^-{mus[i]}")
    ex = single_scale_exponents(P, A, max(nus), profile)
    lam = ex["lam"] = max(ex["lam"], lam_min)
    if lam > spec.cap:
        raise PrecisionExhausted(f"selection needs radius q^-{lam}, precision cap is {spec.cap}")
    if ex["delta_val"] < nus[point]:
        raise InfeasibleParameters("perturbation would leave its q^-nu ball")
    delta = spec.uniformizer_power(ex["delta_val"])
    S = []
    for i in range(v):
        chosen = []
        for B in families[i]:
            for U in subdivide(B, nus[i]):
                c = list(U.center)
                if i == point:
                    c[coord] = c[coord] + delta
                chosen.append(ball_of(c, lam))
        S.append(chosen)
    cert = AvoidanceCertificate(
        covered_tuple=tuple(tuple(B.key() for B in fam) for fam in families),
        lower_bound_exp=ex["L"],
        function="",
        params=dict(ex, mu=mus, nu=nus, var=var),
    )
    return S, cert


def verify_certificate(P: IntPolynomial, S, L: int):
    """Exhaustive center check: returns ``(ok, max_valuation, witness, checked)``."""
    best, arg, checked = max_valuation_over(P, [centers(f) for f in S])
    witness = None if arg is None else [S[i][j] for i, j in enumerate(arg)]
    return best <= L, best, witness, checked


# --- text format ------------------------------------------------------------


def _parse_coeff(spec: FieldSpec, text: str):
    text = text.strip()
    sign = 1
    if text.startswith("-"):
        sign, text = -1, text[1:].strip()
    chunks = text.split("|")
    if len(chunks) != spec.dim:
        raise ValueError(f"coefficient {text!r} needs {spec.dim} '|'-separated digit lists")
    coords = []
    for chunk in chunks:
        digits = [int(d) for d in chunk.replace("[", "").replace("]", "").split(",") if d.strip()]
        if any(not 0 <= d < spec.p for d in digits):
            raise ValueError(f"digit out of range in {chunk!r}")
        coords.append(sum(d * spec.p**j for j, d in enumerate(digits)))
    return sign, spec.from_coords(coords)


def parse_poly(spec: FieldSpec, text: str) -> IntPolynomial:
    """Parse ``exponent-tuple : coefficient-digit-list`` lines.

    Optional header lines ``n=<int>`` and ``v=<int>``; ``#`` starts a comment.
    A coefficient is an optional ``-`` then base-p digits (low first,
    comma-separated), with ``|`` between basis coordinates in extensions.
    """
    n = v = None
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"([nv])\s*=\s*(\d+)", line)
        if m:
            if m.group(1) == "n":
                n = int(m.group(2))
            else:
                v = int(m.group(2))
            continue
        if ":" not in line:
            raise ValueError(f"bad polynomial line {raw!r}")
        lhs, rhs = line.split(":", 1)
        exps = tuple(int(t) for t in lhs.replace("(", "").replace(")", "").split(",") if t.strip())
        rows.append((exps, _parse_coeff(spec, rhs)))
    if not rows:
        raise ValueError("polynomial has no terms")
    nvars = len(rows[0][0])
    n = n or 1
    v = v or nvars // n
    return IntPolynomial.from_terms(spec, n, v, rows)


def format_poly(P: IntPolynomial) -> str:
    spec = P.spec
    lines = [f"n={P.n}", f"v={P.v}"]
    for exps, sign, mag in P.terms:
        chunks = []
        for c in mag.coords:
            digits = []
            while c:
                c, r = divmod(c, spec.p)
                digits.append(r)
            chunks.append(",".join(str(d) for d in digits) or "0")
        lines.append(f"{','.join(map(str, exps))} : {'-' if sign < 0 else ''}{'|'.join(chunks)}")
    return "\n".join(lines) + "\n"


def builtin_poly(spec: FieldSpec, name: str) -> IntPolynomial:
    """Named polynomials used by the command line and the tests."""
    table = {
        "ap3": (1, 3, {(1, 0, 0): 1, (0, 1, 0): -2, (0, 0, 1): 1}),
        "ap3-rev": (1, 3, {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): -2}),
        "sum3": (1, 3, {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): 1}),
        "x-minus-y": (1, 2, {(1, 0): 1, (0, 1): -1}),
        "x2-minus-y": (1, 2, {(2, 0): 1, (0, 1): -1}),
        "ap3-quad": (1, 3, {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): -2, (2, 0, 0): 1, (1, 1, 0): -2, (0, 2, 0): 1}),
    }
    if name not in table:
        raise KeyError(f"unknown polynomial {name!r}; known: {sorted(table)}")
    n, v, terms = table[name]
    return IntPolynomial.from_terms(spec, n, v, terms)


def int_evaluator(P: IntPolynomial):
    """Fast evaluator on ``Z_p`` residues: maps a flat int tuple to an int mod p**N."""
    if not P.spec.is_Zp:
        raise ValueError("integer evaluation needs R = Z_p")
    M = P.spec.modulus
    terms = _kernel_terms(P)

    def f(xs):
        acc = 0
        for c, exps in terms:
            t = c
            for x, k in zip(xs, exps):
                if k:
                    t = t * pow(x, k, M) % M
            acc += t
        return acc % M

    return f
