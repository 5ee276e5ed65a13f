"""Simultaneous avoidance for every function with a given nondegenerate
linearization ``alpha`` along the diagonal: the two-ball refinement, its
iteration over all proper index subsets and the binary Cantor tree.

All radii are tracked as integer exponents: a ball of exponent ``lam`` has
radius ``q**-lam``, and a constant ``C_1 = q**-c`` is stored as ``c``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import IndeterminateAtPrecision, InfeasibleParameters, PrecisionExhausted
from .field import Ball, Element, FieldSpec, ball_of, subdivide, valuation, vp
from .poly import IntPolynomial, max_valuation_over


def _subsets(v: int):
    """Nonempty proper subsets of ``range(v)`` in binary-counter order."""
    for mask in range(1, 2**v - 1):
        yield tuple(j for j in range(v) if mask >> j & 1)


def alpha_violation(alpha, spec: FieldSpec | None = None) -> str | None:
    """Why ``alpha`` fails the hypotheses, or ``None`` when it passes.

    Integer entries are decided exactly; a nonzero partial sum beyond the
    working precision raises :class:`IndeterminateAtPrecision`.
    """
    alpha = list(alpha)
    v = len(alpha)
    if v < 3:
        return f"need at least 3 coefficients, got {v}"
    ints = all(isinstance(a, int) for a in alpha)
    total = sum(alpha) if ints else _esum(alpha)
    if not _is_zero(total, ints, spec):
        return "coefficients must sum to zero"
    for A in _subsets(v):
        part = sum(alpha[j] for j in A) if ints else _esum([alpha[j] for j in A])
        if _is_zero(part, ints, spec):
            u = tuple(int(j in A) for j in range(v))
            return f"alpha . u = 0 for u = {u}; every partial sum over a proper subset must be nonzero"
    return None


def _esum(xs):
    acc = xs[0]
    for x in xs[1:]:
        acc = acc + x
    return acc


def _is_zero(x, ints: bool, spec) -> bool:
    if ints:
        if x == 0:
            return True
        if spec is not None and vp(x, spec.p, spec.cap + 1) >= spec.cap:
            raise IndeterminateAtPrecision(f"partial sum {x} vanishes to all {spec.cap} digits")
        return False
    if valuation(x) is None:
        raise IndeterminateAtPrecision("partial sum vanishes at the working precision")
    return False


def check_alpha(alpha, spec: FieldSpec | None = None) -> bool:
    return alpha_violation(alpha, spec) is None


@dataclass
class LinearFormSpec:
    """Normalized ``alpha`` (entries in R, one a unit) and the quadratic
    error constant ``C``."""

    spec: FieldSpec
    alpha: tuple  # Elements
    alpha_int: tuple | None
    C: Fraction

    @property
    def v(self) -> int:
        return len(self.alpha)

    def subset_exponent(self, A) -> int:
        """``c(A)`` with ``C_1(A) = q**-c(A) = q**-1 |sum_{j not in A} alpha_j|``."""
        part = _esum([self.alpha[j] for j in range(self.v) if j not in A])
        val = valuation(part)
        if val is None:
            raise IndeterminateAtPrecision(f"complement sum for {A} vanishes at precision")
        return 1 + val

    def subset_exponents(self) -> dict:
        return {A: self.subset_exponent(A) for A in _subsets(self.v)}

    @property
    def c_star(self) -> int:
        """``C* = q**-c_star`` relative to a parent ball: one step to the
        children, then one factor per subset."""
        return 1 + sum(self.subset_exponents().values())

    def C_star(self) -> Fraction:
        return Fraction(1, self.spec.q**self.c_star)

    def dot(self, xs) -> Element:
        return _esum([a * x for a, x in zip(self.alpha, xs)])


def make_linear_form(spec: FieldSpec, alpha, C=1) -> LinearFormSpec:
    """Validate and normalize ``alpha``.

    Integer ``alpha`` is divided by the largest power of ``p`` dividing all
    entries (this is division by a uniformizer power when ``e = 1``).
    Element entries must already include a unit.
    """
    problem = alpha_violation(alpha, spec)
    if problem:
        raise InfeasibleParameters(problem)
    alpha = list(alpha)
    alpha_int = None
    if all(isinstance(a, int) for a in alpha):
        m = min(vp(a, spec.p, 10**6) for a in alpha if a)
        alpha_int = tuple(a // spec.p**m for a in alpha)
        if spec.e > 1 and m:
            raise InfeasibleParameters("normalize alpha to include a unit when e > 1")
        elems = tuple(spec.from_int(a) for a in alpha_int)
    else:
        elems = tuple(alpha)
        if min(valuation(a) if valuation(a) is not None else spec.cap for a in elems) != 0:
            raise InfeasibleParameters("alpha must have a unit component")
    return LinearFormSpec(spec, elems, alpha_int, Fraction(C))


@dataclass
class PairStep:
    subset: tuple
    c: int
    lam_before: int
    lam_after: int
    translated: bool
    image_valuation: int


def refine_pair(B1: Ball, B2: Ball, A, form: LinearFormSpec):
    """One refinement for the pattern ``x_j in B1`` (``j in A``), ``x_j in B2``
    (otherwise).  Returns ``(B1', B2', step)``.

    Both balls shrink to exponent ``lam + c(A)`` around their canonical
    centers.  When the image ball ``alpha . B'`` contains 0, ``B2'`` is moved
    by ``b = pi**lam``; then ``|b * sum_{j not in A} alpha_j|`` exceeds the
    image radius and the moved image misses 0.
    """
    lam = B1.lam
    if B2.lam != lam:
        raise InfeasibleParameters("refine_pair needs balls of equal radius")
    if B1.contains_ball(B2) or B2.contains_ball(B1):
        raise InfeasibleParameters("refine_pair needs disjoint balls")
    spec = form.spec
    c = form.subset_exponent(A)
    lam2 = lam + c
    if lam2 > spec.cap:
        raise PrecisionExhausted(f"refinement to q^-{lam2} exceeds precision cap {spec.cap}")
    P1 = ball_of(B1.center, lam2)
    P2, translated, val = separate_image(form, P1, ball_of(B2.center, lam2), A, lam)
    if not B2.contains_ball(P2):
        raise AssertionError("translated ball left B2")
    return P1, P2, PairStep(tuple(A), c, lam, lam2, translated, val)


def separate_image(form: LinearFormSpec, P1: Ball, P2: Ball, A, lam: int):
    """Move ``P2`` by ``pi**lam`` when the image ball of the pattern contains 0.

    Returns ``(P2', translated, image_valuation)``; the image ball has the
    exponent of ``P1`` and misses 0 exactly when the center valuation is
    below it.  For disjoint input balls the image center is
    ``sum_{j not in A} alpha_j (c2 - c1)``, which already misses 0, so the
    move only happens for inputs built by hand.
    """
    lam2 = P1.lam
    image = _image_center(form, P1, P2, A)
    val = valuation(image)
    if val is not None and val < lam2:
        return P2, False, val
    b = form.spec.uniformizer_power(lam)
    P2 = ball_of(tuple(x + b for x in P2.center), lam2)
    val = valuation(_image_center(form, P1, P2, A))
    if val is None or val >= lam2:
        raise AssertionError("translated image ball still contains 0")
    return P2, True, val


def _image_center(form: LinearFormSpec, P1: Ball, P2: Ball, A) -> Element:
    n = P1.n
    if n != 1:
        raise NotImplementedError("linear refinement acts on points of R")
    xs = [P1.center[0] if j in A else P2.center[0] for j in range(form.v)]
    return form.dot(xs)


def refine_all_subsets(B1: Ball, B2: Ball, form: LinearFormSpec):
    """Apply :func:`refine_pair` for every nonempty proper subset in
    binary-counter order.  Returns ``(B1*, B2*, steps, separation_exponent)``
    where every mixed pattern satisfies ``|alpha . x| >= q**-separation``."""
    steps = []
    for A in _subsets(form.v):
        B1, B2, step = refine_pair(B1, B2, A, form)
        steps.append(step)
    return B1, B2, steps, B1.lam


@dataclass
class SimulTree:
    """Binary tree of the simultaneous construction; shares the node layout
    of the general construction tree so it serializes the same way."""

    spec: FieldSpec
    form: LinearFormSpec
    lam0: int
    n: int = 1
    nodes: list = field(default_factory=list)
    leaves: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    certificates: list = field(default_factory=list)

    @property
    def lam_chain(self) -> list:
        return [lam for lam, _ in self.snapshots]

    def level(self, j: int) -> list:
        return self.snapshots[j][1]


def lambda0_ok(form: LinearFormSpec, lam0: int) -> bool:
    """``C q**-lam0 v < (C*)**3`` as an exact comparison."""
    q = form.spec.q
    return form.C * Fraction(1, q**lam0) * form.v < form.C_star() ** 3


def min_lambda0(form: LinearFormSpec) -> int:
    lam0 = 0
    while not lambda0_ok(form, lam0):
        lam0 += 1
    return lam0


def dominance_holds(form: LinearFormSpec, lam0: int, j: int) -> bool:
    """``C v (C*)**(2j-2) q**(-2 lam0) < (C*)**j q**-lam0`` exactly."""
    q = Fraction(form.spec.q)
    Cs = form.C_star()
    return form.C * form.v * Cs ** (2 * j - 2) * q ** (-2 * lam0) < Cs**j * q ** (-lam0)


def build_simul_set(form: LinearFormSpec, lam0: int, depth: int) -> SimulTree:
    """``E_0`` is the ball of exponent ``lam0`` at 0; each ball of ``E_j``
    is replaced by the refined pair grown from its first two children."""
    from .cantor import Node

    spec = form.spec
    if not lambda0_ok(form, lam0):
        raise InfeasibleParameters(f"lam0 = {lam0} is too small; need at least {min_lambda0(form)}")
    need = lam0 + depth * form.c_star
    if need > spec.cap:
        raise PrecisionExhausted(f"depth {depth} needs exponent {need}, precision cap is {spec.cap}")
    tree = SimulTree(spec, form, lam0)
    root = Ball((spec.zero(),), lam0)
    tree.nodes.append(Node(0, root, -1, 0))
    tree.leaves[root] = 0
    tree.snapshots.append((lam0, [root]))
    for j in range(1, depth + 1):
        new = []
        for B in tree.snapshots[-1][1]:
            pid = tree.leaves.pop(B)
            C1, C2 = subdivide(B, B.lam + 1)[:2]
            S1, S2, steps, _ = refine_all_subsets(C1, C2, form)
            tree.steps.append((j, B, steps))
            for S in (S1, S2):
                node = Node(len(tree.nodes), S, pid, j)
                tree.nodes.append(node)
                tree.nodes[pid].children.append(node.id)
                tree.leaves[S] = node.id
                new.append(S)
        tree.snapshots.append((lam0 + j * form.c_star, sorted(new, key=Ball.key)))
    return tree


# --- verification ---------------------------------------------------------------


def alpha_poly(form: LinearFormSpec, quadratic: bool = False) -> IntPolynomial:
    """``alpha . x`` (plus ``(x_2 - x_1)**2`` when ``quadratic``) as a polynomial."""
    if form.alpha_int is None:
        raise ValueError("polynomial form needs integer alpha")
    v = form.v
    terms = {}
    for j, a in enumerate(form.alpha_int):
        e = [0] * v
        e[j] = 1
        terms[tuple(e)] = a
    if quadratic:
        for exps, c in (((2, 0), 1), ((1, 1), -2), ((0, 2), 1)):
            e = list(exps) + [0] * (v - 2)
            terms[tuple(e)] = terms.get(tuple(e), 0) + c
    return IntPolynomial.from_terms(form.spec, 1, v, terms)


@dataclass
class SeparationLine:
    depth: int
    radius_exp: int
    separation_exp: int
    checked: int
    max_valuation: int
    ok: bool


def separation_report(tree: SimulTree, quadratic: bool = False) -> list:
    """For every depth ``j``: all ``v``-tuples of depth-``j`` ball centers
    not lying in one ball must satisfy ``|value| >= (C*)**j q**-lam0``
    (with ``quadratic`` the perturbed function need only be nonzero)."""
    form = tree.form
    P = alpha_poly(form, quadratic)
    out = []
    cap = form.spec.cap
    for j, (lam, balls) in enumerate(tree.snapshots):
        sep = tree.lam0 + j * form.c_star
        if len(balls) < 2:
            out.append(SeparationLine(j, lam, sep, 0, -1, True))
            continue
        centers = [B.center for B in balls]
        groups = [list(range(len(balls)))] * form.v
        best, _, checked = max_valuation_over(P, [centers] * form.v, groups=groups)
        ok = best < cap if quadratic else best <= sep
        out.append(SeparationLine(j, lam, sep, checked, best, ok))
    return out


def dump_separation(lines) -> str:
    out = ["# separation report: depth radius_exp separation_exp checked max_valuation ok"]
    for s in lines:
        out.append(f"depth={s.depth} radius=q^-{s.radius_exp} bound=q^-{s.separation_exp} "
                   f"checked={s.checked} max_valuation={s.max_valuation} ok={s.ok}")
    return "\n".join(out) + "\n"
