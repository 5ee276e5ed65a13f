"""Zero-set box counting, the projection selection and the single-scale
avoidance step for smooth (vector-valued) functions.

Derivative bounds are absolute values kept as exact fractions: ``C0`` bounds
a distinguished ``m``-by-``m`` minor from below, ``C1`` bounds derivative
entries from above and ``C2`` bounds the second-order Taylor remainder
(``|f(x + h) - f(x) - Df(x) h| <= C2 |h|**2``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .errors import InfeasibleParameters, PrecisionExhausted
from .field import Ball, Element, FieldSpec, ball_of, subdivide, valuation
from .poly import (
    IntPolynomial,
    _parse_coeff,
    builtin_poly,
    derivative_lower_bound,
    eval_poly,
    int_evaluator,
)


@dataclass(frozen=True)
class SmoothFunctionSpec:
    """An ``m``-valued function of ``v`` points of ``R**n`` with certified
    derivative bounds."""

    spec: FieldSpec
    m: int
    n: int
    v: int
    eval: Callable = field(compare=False)
    C0: Fraction = Fraction(1)
    C1: Fraction = Fraction(1)
    C2: Fraction = Fraction(0)
    minor_columns: tuple = ()
    name: str = "f"
    polys: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not 0 < self.C0 <= self.C1 <= 1:
            raise InfeasibleParameters("derivative bounds need 0 < C0 <= C1 <= 1")
        if self.C2 < 0:
            raise InfeasibleParameters("C2 must be nonnegative")
        if self.m > self.n * (self.v - 1):
            raise InfeasibleParameters(f"m = {self.m} exceeds n(v-1) = {self.n * (self.v - 1)}")
        if len(self.minor_columns) != self.m:
            raise InfeasibleParameters("minor_columns must name m columns")

    @property
    def nvars(self) -> int:
        return self.n * self.v

    @property
    def k0(self) -> Fraction:
        return self.C0 / self.C1 ** (self.m - 1)

    @property
    def C3(self) -> Fraction:
        return (2 * self.C1 / self.k0) ** self.m * Fraction(self.spec.q) ** self.nvars

    @property
    def dimension(self) -> Fraction:
        """``D = m / (n (v - 1))``."""
        return Fraction(self.m, self.n * (self.v - 1))

    def box_bound(self, mu: int, lam: int) -> Fraction:
        """``C3 * q**(-mu + lam (nv - m))``."""
        return self.C3 * Fraction(self.spec.q) ** (-mu + lam * (self.nvars - self.m))

    def values(self, flat) -> tuple:
        """Component values at a flat coordinate list of Elements."""
        return tuple(self.eval(flat))

    def norm_valuation(self, flat):
        """Valuation of the sup norm (``None`` when zero at precision)."""
        vals = [valuation(y) for y in self.values(flat)]
        finite = [x for x in vals if x is not None]
        return min(finite) if finite else None


def exponent_of(C: Fraction, q: int):
    """Smallest integer ``k`` with ``q**-k <= C`` (``None`` for ``C == 0``)."""
    if C <= 0:
        return None
    k = 0
    while Fraction(q) ** (-k) > C:
        k += 1
    while Fraction(q) ** (-(k - 1)) <= C:
        k -= 1
    return k


def zero_threshold(f: SmoothFunctionSpec, lam: int) -> int:
    """``tau(lam)``: a ``q**-lam`` ball meets the zero set only if every
    component has valuation at least ``tau`` at the ball's center."""
    q = f.spec.q
    tau = lam + exponent_of(f.C1, q)
    c2 = exponent_of(f.C2, q)
    if c2 is not None:
        tau = min(tau, 2 * lam + c2)
    return tau


# --- polynomial-backed smooth functions ------------------------------------


def from_polys(polys, minor_columns=None, C0=None, C1=Fraction(1), C2=None, name="f") -> SmoothFunctionSpec:
    """Smooth spec of polynomial components over R.

    Integer-coefficient polynomials have derivative entries of absolute value
    at most 1 and second-order remainder at most ``|h|**2`` (zero when all
    components are affine).  For one component the minor defaults to the last
    variable and ``C0`` is certified on the unit ball.
    """
    polys = tuple(polys)
    P = polys[0]
    spec = P.spec
    m = len(polys)
    if minor_columns is None:
        minor_columns = tuple(range(P.nvars - m, P.nvars))
    if C2 is None:
        C2 = Fraction(0) if max(Q.degree for Q in polys) <= 1 else Fraction(1)
    if C0 is None:
        if m != 1:
            raise InfeasibleParameters("C0 must be supplied for vector-valued functions")
        unit = [[Ball(tuple(spec.zero() for _ in range(P.n)), 0)] for _ in range(P.v)]
        A = derivative_lower_bound(P, minor_columns[0], unit)
        C0 = Fraction(1, spec.q**A)
    Zp = spec.is_Zp
    fast = [int_evaluator(Q) for Q in polys] if Zp else None

    def ev(flat):
        if fast is not None:
            xs = [x.coords[0] for x in flat]
            return tuple(spec.from_int(g(xs)) for g in fast)
        return tuple(eval_poly(Q, flat) for Q in polys)

    return SmoothFunctionSpec(
        spec=spec, m=m, n=P.n, v=P.v, eval=ev, C0=Fraction(C0), C1=Fraction(C1), C2=Fraction(C2),
        minor_columns=tuple(minor_columns), name=name, polys=polys,
    )


def smooth_builtin(spec: FieldSpec, name: str) -> SmoothFunctionSpec:
    """Named smooth functions: linear forms and their quadratic perturbations."""
    return from_polys([builtin_poly(spec, name)], name=name)


def load_tabulated(spec: FieldSpec, text: str) -> SmoothFunctionSpec:
    """Smooth function read from a tabulated grid.

    Header lines ``key=value`` set ``m n v lam C0 C1 C2 minor``; every other
    line is ``x_1; ...; x_nv : y_1; ...; y_m`` with each entry a base-p digit
    list (low first, ``|`` between basis coordinates).  A point is looked up
    through its truncation to ``q**-lam``.
    """
    header = {}
    table = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line and "=" in line:
            key, value = (s.strip() for s in line.split("=", 1))
            header[key] = value
            continue
        lhs, rhs = line.split(":", 1)
        xs = tuple(_parse_coeff(spec, t)[1].key() for t in lhs.split(";"))
        ys = tuple(_parse_coeff(spec, t)[1] for t in rhs.split(";"))
        table[xs] = ys
    m, n, v = (int(header.get(k, 1)) for k in ("m", "n", "v"))
    lam = int(header["lam"])
    minor = tuple(int(c) for c in header.get("minor", str(n * v - 1)).split(","))

    def ev(flat):
        key = tuple(x.truncate(lam).key() for x in flat)
        if key not in table:
            raise ValueError(f"tabulated function has no entry for {key}")
        return table[key]

    return SmoothFunctionSpec(
        spec=spec, m=m, n=n, v=v, eval=ev,
        C0=Fraction(header.get("C0", "1")), C1=Fraction(header.get("C1", "1")),
        C2=Fraction(header.get("C2", "0")), minor_columns=minor, name=header.get("name", "tabulated"),
    )


# --- zero-set box counting --------------------------------------------------


def _zero_boxes_zp(f: SmoothFunctionSpec, T: Ball, lam: int) -> list[tuple]:
    spec = f.spec
    p, M = spec.p, spec.modulus
    evals = [int_evaluator(Q) for Q in f.polys]
    nv = f.nvars
    level = [tuple(c.coords[0] for c in T.center)]
    rho = T.lam
    while True:
        tau = zero_threshold(f, rho)
        kept = []
        for xs in level:
            if all(_vp(g(xs), p, spec.cap) >= tau for g in evals):
                kept.append(xs)
        if rho == lam:
            return kept
        step = p**rho
        shifts = list(itertools.product(range(p), repeat=nv))
        level = [tuple(x + d * step for x, d in zip(xs, ds)) for xs in kept for ds in shifts]
        rho += 1


def _vp(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    k = 0
    while x % p == 0:
        x //= p
        k += 1
    return k


def zero_boxes(f: SmoothFunctionSpec, T: Ball, lam: int) -> list[Ball]:
    """The ``q**-lam`` balls inside the ``nv``-dimensional ball ``T`` whose
    center value passes the zero threshold, found by pruned refinement."""
    spec = f.spec
    if lam <= T.lam:
        raise InfeasibleParameters(f"lam = {lam} must exceed the ball exponent {T.lam}")
    if lam > spec.cap:
        raise PrecisionExhausted(f"box radius q^-{lam} exceeds precision cap {spec.cap}")
    if T.n != f.nvars:
        raise ValueError(f"T must be {f.nvars}-dimensional")
    if spec.is_Zp and f.polys:
        boxes = [ball_of([spec.from_int(x) for x in xs], lam) for xs in _zero_boxes_zp(f, T, lam)]
        return sorted(boxes, key=Ball.key)
    level = [T]
    rho = T.lam
    while True:
        tau = zero_threshold(f, rho)
        kept = []
        for B in level:
            vals = [valuation(y) for y in f.values(list(B.center))]
            if all(x is None or x >= tau for x in vals):
                kept.append(B)
        if rho == lam:
            return sorted(kept, key=Ball.key)
        level = [C for B in kept for C in subdivide(B, rho + 1)]
        rho += 1


def count_zero_boxes(f: SmoothFunctionSpec, T: Ball, lam: int) -> int:
    return len(zero_boxes(f, T, lam))


def slab_counts(f: SmoothFunctionSpec, boxes) -> dict:
    """Zero boxes per slab: boxes sharing every coordinate outside the minor
    columns lie in one slab parallel to the minor directions."""
    out = {}
    for B in boxes:
        key = tuple(B.center[i].key() for i in range(f.nvars) if i not in f.minor_columns)
        out[key] = out.get(key, 0) + 1
    return out


def slab_bound(f: SmoothFunctionSpec) -> Fraction:
    return (2 * f.C1 / f.k0) ** f.m


# --- projection selection ---------------------------------------------------


@dataclass
class ProjectionReport:
    nu_balls: int
    selected: int
    a_ok: bool
    b_ok: bool
    c_ok: bool
    b_bound: Fraction
    b_prime: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.a_ok and self.b_ok and self.c_ok


def _split(beta: Ball, n: int):
    return Ball(beta.center[:n], beta.lam), Ball(beta.center[n:], beta.lam)


def _at_exponent(family, lam: int) -> list[Ball]:
    out = []
    for B in family:
        out.extend(subdivide(B, lam) if B.lam < lam else [B])
    return out


MAX_CANDIDATES = 200_000


def project_select(T, B, mu: int, nu: int, lam: int, n: int, Tprime=None):
    """Pick one ``q**-lam`` ball of ``T`` in every ``q**-nu`` ball of ``T``
    and project the balls of ``B`` lying over the choices.

    ``T`` is a family of ``n``-dimensional balls; ``B`` lists
    ``n*r``-dimensional ``q**-lam`` balls over ``T x T'``.  Inside each
    ``nu``-ball the candidate with the fewest ``B``-balls above it wins, ties
    going to the smallest digit order.  Returns ``(S, B', report)`` and
    raises :class:`InfeasibleParameters` when a postcondition fails.
    """
    if not mu < nu < lam:
        raise InfeasibleParameters(f"need mu < nu < lam, got {mu}, {nu}, {lam}")
    if any(U.lam > mu for U in T):
        raise InfeasibleParameters(f"T has balls finer than q^-{mu}")
    spec = T[0].spec
    q = spec.q
    above = {}
    for beta in B:
        head, _ = _split(beta, n)
        above[head] = above.get(head, 0) + 1
    S = []
    for U in _at_exponent(T, nu):
        total = q ** (n * (lam - nu))
        if total > MAX_CANDIDATES:
            raise PrecisionExhausted(f"{total} candidate balls per q^-{nu} ball is too many to scan")
        best = min(subdivide(U, lam), key=lambda W: above.get(W, 0))
        S.append(best)
    chosen = set(S)
    Bprime = sorted({_split(beta, n)[1] for beta in B if _split(beta, n)[0] in chosen}, key=Ball.key)
    report = check_projection(T, B, S, Bprime, mu, nu, lam, n)
    if not report.ok:
        raise InfeasibleParameters(f"projection postconditions failed: {report.violations[:1]}")
    return S, Bprime, report


def check_projection(T, B, S, Bprime, mu, nu, lam, n) -> ProjectionReport:
    """Verify postconditions (a) one ball per selected ``nu``-ball, (b) the
    cardinality bound, (c) ``(S x T') cap B`` inside ``S x B'``."""
    q = T[0].spec.q
    violations = []
    nu_balls = _at_exponent(T, nu)
    per = {U: 0 for U in nu_balls}
    for W in S:
        if W.lam != lam:
            violations.append(("radius", W))
            continue
        parent = Ball(tuple(c.truncate(nu) for c in W.center), nu)
        if parent not in per:
            violations.append(("outside T", W))
            continue
        per[parent] += 1
    hit = [U for U, c in per.items() if c == 1]
    a_ok = not violations and all(c <= 1 for c in per.values())
    a_ok = a_ok and len(hit) >= Fraction(q) ** ((nu - 2 * mu) * n)
    bound = Fraction(q) ** (mu * (n + 1) + nu * n - lam * n) * len(B)
    b_ok = len(Bprime) <= bound
    if not b_ok:
        violations.append(("cardinality", len(Bprime), bound))
    chosen, bset = set(S), set(Bprime)
    c_ok = True
    for beta in B:
        head, tail = _split(beta, n)
        if head in chosen and tail not in bset:
            c_ok = False
            violations.append(("containment", beta))
            break
    return ProjectionReport(len(nu_balls), len(hit), a_ok, b_ok, c_ok, bound, len(Bprime), violations)


# --- single-scale smooth avoidance -------------------------------------------


@dataclass
class SmoothCertificate:
    """``|f| >= q**-lower_bound_exp`` on ``S_1 x ... x S_v``."""

    covered_tuple: tuple
    lower_bound_exp: int
    function: str
    params: dict = field(default_factory=dict)
    projections: list = field(default_factory=list)

    def bound_text(self) -> str:
        return f"|f| >= q^-{self.lower_bound_exp}"


def default_lambda(f: SmoothFunctionSpec, mu: int, nu: int) -> int:
    """Smallest exponent whose ``q**-lam`` grid outnumbers the projected
    zero set in the last variable: ``lam - mu > (nu - mu) / D``."""
    D = f.dimension
    gap = Fraction(nu - mu) / D
    return mu + int(gap) + 1


def avoid_single_scale_smooth(families, f: SmoothFunctionSpec, mu: int, nu: int, lam: int | None = None):
    """Sets ``S_i`` inside ``T_i`` on which ``f`` has no zero.

    The ``q**-lam`` neighbourhood of the zero set is covered by zero boxes,
    and ``v - 1`` projection selections peel off one variable at a time;
    ``S_v`` is the part of ``T_v`` outside the last projected family.
    Returns ``(S, certificate)``.
    """
    spec = f.spec
    v, n = f.v, f.n
    if len(families) != v:
        raise ValueError(f"need {v} ball families")
    if not mu < nu:
        raise InfeasibleParameters(f"need mu < nu, got {mu}, {nu}")
    if f.C2 * Fraction(1, spec.q**mu) >= f.k0:
        raise InfeasibleParameters(f"mu = {mu} is below the Taylor threshold (C2 q^-mu >= k0)")
    lam = default_lambda(f, mu, nu) if lam is None else lam
    if lam <= nu:
        raise InfeasibleParameters(f"lam = {lam} must exceed nu = {nu}")
    if lam > spec.cap:
        raise PrecisionExhausted(f"selection needs radius q^-{lam}, precision cap is {spec.cap}")
    fams = [_at_exponent(fam, mu) for fam in families]
    if any(not fam for fam in fams):
        raise InfeasibleParameters("empty ball family")
    boxes = []
    for combo in itertools.product(*fams):
        T = Ball(tuple(c for U in combo for c in U.center), mu)
        boxes.extend(zero_boxes(f, T, lam))
    current = boxes
    S = []
    reports = []
    for i in range(v - 1):
        Si, current, report = project_select(fams[i], current, mu, nu, lam, n)
        S.append(Si)
        reports.append(report)
    blocked = set(current)
    last = [W for W in _at_exponent(fams[v - 1], lam) if W not in blocked]
    if not last:
        raise InfeasibleParameters("the projected zero set covers all of T_v")
    S.append(last)
    touched = {Ball(tuple(c.truncate(nu) for c in W.center), nu) for W in blocked}
    L = zero_threshold(f, lam) - 1
    cert = SmoothCertificate(
        covered_tuple=tuple(tuple(B.key() for B in fam) for fam in families),
        lower_bound_exp=L,
        function=f.name,
        params={
            "mu": mu, "nu": nu, "lam": lam, "tau": L + 1, "zero_boxes": len(boxes),
            "last_blocked": len(blocked), "touched_fraction": Fraction(len(touched), len(_at_exponent(fams[v - 1], nu))),
        },
        projections=reports,
    )
    return S, cert


def verify_smooth(f: SmoothFunctionSpec, S, L: int):
    """Exhaustive center check: ``(ok, max_norm_valuation, witness, checked)``."""
    spec = f.spec
    best, witness, checked = -1, None, 0
    for combo in itertools.product(*S):
        flat = [c for W in combo for c in W.center]
        val = f.norm_valuation(flat)
        val = spec.cap if val is None else val
        checked += 1
        if val > best:
            best, witness = val, combo
    return best <= L, best, witness, checked
