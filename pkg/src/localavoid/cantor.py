"""Queue-driven construction of nested ball families avoiding the zeros of a
family of functions, with certificate re-verification.

The set ``E_j`` is stored as its leaf balls, which may have mixed radii: a
ball untouched by recent stages stays coarse instead of being split into
``q**-lam_j`` pieces.  The equal-radius list of stage ``j`` (used to index
queue injections) is materialized only when the queue reaches it.
"""

from __future__ import annotations

import itertools
import math
import random
import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InfeasibleParameters, PrecisionExhausted
from .field import Ball, FieldSpec, subdivide
from .poly import (
    IntPolynomial,
    avoid_single_scale,
    derivative_chain,
    derivative_lower_bound,
    max_valuation_over,
    partial_derivative,
)
from .smooth import SmoothFunctionSpec, avoid_single_scale_smooth, verify_smooth

log = logging.getLogger(__name__)

SPLIT_CAP = 100_000
MATERIALIZE_CAP = 1_000_000


@dataclass(frozen=True)
class QueueItem:
    ell: int
    k: int
    sigma: tuple
    j: int

    def label(self) -> str:
        return f"({self.ell},{self.k},{list(self.sigma)},{self.j})"


@dataclass
class DerivativeChain:
    """Privileged derivatives ``D_0 f = f, D_1 f, ..., D_r f`` with ``D_r f``
    a nonzero constant; ``D_k`` differentiates in ``variables[:k]``."""

    variables: list
    targets: list

    @property
    def r(self) -> int:
        return len(self.variables)

    @classmethod
    def of(cls, P: IntPolynomial) -> "DerivativeChain":
        chain = derivative_chain(P)
        targets = [P]
        for var in chain:
            targets.append(partial_derivative(targets[-1], var))
        return cls(chain, targets)

    def check(self) -> bool:
        top = self.targets[-1]
        return top.is_constant() and bool(any(top.constant_value().coords))


@dataclass
class Registry:
    """The function family: polynomials (``r`` queue items per tuple) and
    smooth functions (one item per tuple)."""

    functions: list = field(default_factory=list)
    chains: list = field(default_factory=list)

    def add(self, fn) -> "Registry":
        if isinstance(fn, IntPolynomial):
            chain = DerivativeChain.of(fn)
            if not chain.check():
                raise InfeasibleParameters("derivative chain does not end at a nonzero constant")
            if chain.r == 0:
                raise InfeasibleParameters("a nonzero constant has no zeros to avoid")
            self.chains.append(chain)
        elif isinstance(fn, SmoothFunctionSpec):
            self.chains.append(None)
        else:
            raise TypeError(f"unsupported function {fn!r}")
        self.functions.append(fn)
        return self

    def __len__(self):
        return len(self.functions)

    def v(self, ell: int) -> int:
        return self.functions[ell - 1].v

    def r(self, ell: int) -> int:
        chain = self.chains[ell - 1]
        return 1 if chain is None else chain.r

    def dimension(self, ell: int, n: int) -> Fraction:
        fn = self.functions[ell - 1]
        if isinstance(fn, IntPolynomial):
            return Fraction(n, max(fn.degree, 1))
        return fn.dimension


@dataclass
class Node:
    id: int
    ball: Ball
    parent: int
    stage: int
    children: list = field(default_factory=list)
    split_nu: int | None = None  # nu of the avoidance step that refined this node


@dataclass
class StageRecord:
    j: int
    item: QueueItem
    case: str
    mu: list
    nu: list
    lam: int
    L: int | None
    A: int | None
    eps: Fraction
    eps_ok: bool | None
    vacuous: bool = False


@dataclass
class CertificateRecord:
    stage: int
    item: QueueItem
    kind: str  # "poly" or "smooth"
    L: int
    sigma_balls: list
    target: object = field(repr=False)
    params: dict = field(default_factory=dict)


@dataclass
class ConstructionTree:
    spec: FieldSpec
    n: int
    lam0: int
    nodes: list = field(default_factory=list)
    leaves: dict = field(default_factory=dict)  # Ball -> node id
    stages: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # per stage: (lam_j, sorted leaf balls)
    _materialized: dict = field(default_factory=dict, repr=False)

    def new_node(self, ball: Ball, parent: int, stage: int) -> Node:
        node = Node(len(self.nodes), ball, parent, stage)
        self.nodes.append(node)
        if parent >= 0:
            self.nodes[parent].children.append(node.id)
        return node

    @property
    def depth(self) -> int:
        return len(self.stages)

    @property
    def lam_chain(self) -> list:
        """Radius exponents of the stage lists ``E_0, E_1, ...``."""
        return [lam for lam, _ in self.snapshots]

    def leaf_balls(self) -> list:
        return sorted(self.leaves, key=Ball.key)

    def leaves_in(self, B: Ball) -> list:
        return sorted((L for L in self.leaves if B.contains_ball(L)), key=Ball.key)

    def stage_list(self, j: int) -> list:
        """The equal-radius list of stage ``j``, materialized on demand."""
        if j not in self._materialized:
            lam, balls = self.snapshots[j]
            total = sum(self.spec.q ** (self.n * (lam - B.lam)) for B in balls)
            if total > MATERIALIZE_CAP:
                raise InfeasibleParameters(f"stage {j} list would hold {total} balls")
            out = []
            for B in balls:
                out.extend(subdivide(B, lam) if B.lam < lam else [B])
            self._materialized[j] = sorted(out, key=Ball.key)
        return self._materialized[j]

    def stage_count(self, j: int) -> int:
        lam, balls = self.snapshots[j]
        return sum(self.spec.q ** (self.n * (lam - B.lam)) for B in balls)


class Queue:
    """Lazily generated queue: segments ``Q'_0, Q'_1, ...`` in order, each
    ordered by function index, then injection (lexicographic), then
    decreasing derivative order."""

    def __init__(self, tree: ConstructionTree, registry: Registry):
        self.tree = tree
        self.registry = registry
        self.segment = 0
        self._it = None
        self.processed: list = []

    def segment_items(self, j: int):
        M = self.tree.stage_count(j)
        for ell in range(1, min(j + 1, len(self.registry)) + 1):
            for sigma in itertools.permutations(range(M), self.registry.v(ell)):
                for k in reversed(range(self.registry.r(ell))):
                    yield QueueItem(ell, k, sigma, j)

    def pop(self) -> QueueItem:
        while True:
            if self._it is None:
                if self.segment >= len(self.tree.snapshots):
                    raise InfeasibleParameters("queue exhausted")
                self._it = self.segment_items(self.segment)
            item = next(self._it, None)
            if item is not None:
                self.processed.append(item)
                return item
            self.segment += 1
            self._it = None


def init_stage0(spec: FieldSpec, registry: Registry, lam0: int, n: int = 1, root: Ball | None = None):
    """Tree with ``E_0`` = the root ball split into ``q**-lam0`` balls, and its queue."""
    if not len(registry):
        raise InfeasibleParameters("empty function registry")
    if any(fn.n != n for fn in registry.functions):
        raise InfeasibleParameters(f"every function must act on points of R^{n}")
    root = root or Ball(tuple(spec.zero() for _ in range(n)), 0)
    if lam0 < root.lam:
        raise InfeasibleParameters("lam0 must not be coarser than the root")
    M0 = spec.q ** (n * (lam0 - root.lam))
    if M0 < registry.v(1) + 1:
        raise InfeasibleParameters(f"root holds {M0} balls of radius q^-{lam0}, need at least {registry.v(1) + 1}")
    tree = ConstructionTree(spec, n, lam0)
    r = tree.new_node(root, -1, 0)
    for B in subdivide(root, lam0):
        node = tree.new_node(B, r.id, 0)
        tree.leaves[B] = node.id
    tree.snapshots.append((lam0, tree.leaf_balls()))
    return tree, Queue(tree, registry)


def _split_coarse(tree: ConstructionTree, B: Ball, stage: int):
    """Make ``B`` a union of leaves by splitting a coarser leaf containing it."""
    for L in list(tree.leaves):
        if L.lam < B.lam and L.contains_ball(B):
            count = tree.spec.q ** (tree.n * (B.lam - L.lam))
            if count > SPLIT_CAP:
                raise InfeasibleParameters(f"splitting a q^-{L.lam} leaf to q^-{B.lam} makes {count} balls")
            pid = tree.leaves.pop(L)
            for C in subdivide(L, B.lam):
                tree.leaves[C] = tree.new_node(C, pid, stage).id
            return


def _round_up(x: int, e: int) -> int:
    return -(-x // e) * e


def _splice(tree: ConstructionTree, T: list, S: list, stage: int, nu):
    """Replace the leaves of ``T`` by the selected balls ``S`` (children of
    the leaf containing them); leaves receiving nothing are deleted."""
    by_lam = {}
    for L in T:
        by_lam.setdefault(L.lam, {})[L] = tree.leaves[L]
    got = set()
    for W in S:
        pid = None
        for lam, table in by_lam.items():
            anc = Ball(tuple(c.truncate(lam) for c in W.center), lam)
            if anc in table:
                pid = table[anc]
                break
        if pid is None:
            raise AssertionError(f"selected ball {W} lies outside T")
        tree.leaves[W] = tree.new_node(W, pid, stage).id
        tree.nodes[pid].split_nu = nu
        got.add(pid)
    for L in T:
        tree.leaves.pop(L)


def _eps_check(lam: int, nu: int, mu: int, n: int, D: Fraction, eps: Fraction):
    """``q**-lam > q**(-nu (n/D + eps) + n mu)``, i.e. ``lam < nu (n/D + eps) - n mu``."""
    return lam < nu * (Fraction(n) / D + eps) - n * mu


def process_next(tree: ConstructionTree, queue: Queue, gap: int = 1, profile=None) -> StageRecord:
    """Run one stage: pop the next queue item and thin its balls."""
    j = tree.depth + 1
    item = queue.pop()
    registry = queue.registry
    fn = registry.functions[item.ell - 1]
    lam_prev = tree.snapshots[-1][0]
    sigma_balls = [tree.stage_list(item.j)[s] for s in item.sigma]
    for B in sigma_balls:
        _split_coarse(tree, B, j)
    T = [tree.leaves_in(B) for B in sigma_balls]
    eps = Fraction(1, j + 1)
    if any(not t for t in T):
        rec = StageRecord(j, item, "vacuous", [], [], lam_prev + 1, None, None, eps, None, vacuous=True)
        tree.stages.append(rec)
        tree.snapshots.append((lam_prev + 1, tree.leaf_balls()))
        return rec
    mus = [max(B.lam for B in t) for t in T]
    e = tree.spec.e if tree.spec.is_zero_char else 1
    D = registry.dimension(item.ell, tree.n)
    if isinstance(fn, IntPolynomial):
        chain = registry.chains[item.ell - 1]
        target = chain.targets[item.k]
        var = chain.variables[item.k]
        nus = [_round_up(mu + gap, e) for mu in mus]
        if item.k == chain.r - 1:
            case = "1"
            A = derivative_lower_bound(target, var, T)
        else:
            case = "2"
            prev = tree.certificates[-1] if tree.certificates else None
            want = QueueItem(item.ell, item.k + 1, item.sigma, item.j)
            if prev is None or prev.item != want:
                raise InfeasibleParameters(f"item {item.label()} does not follow {want.label()}")
            A = prev.L
        S, cert = avoid_single_scale(T, target, A, mus, nus, var, profile, lam_min=lam_prev + 1)
        lam, L, kind = cert.params["lam"], cert.lower_bound_exp, "poly"
        params = {k: v for k, v in cert.params.items() if k not in ("mu", "nu")}
    else:
        case = "3"
        target = fn
        mu = max(mus)
        nu = mu + gap
        from .smooth import default_lambda

        lam = max(default_lambda(fn, mu, nu), lam_prev + 1)
        S, cert = avoid_single_scale_smooth(T, fn, mu, nu, lam)
        mus, nus, A = [mu] * len(T), [nu] * len(T), None
        L, kind = cert.lower_bound_exp, "smooth"
        params = dict(cert.params)
        params["projections"] = cert.projections
    eps_ok = _eps_check(lam, max(nus), max(mus), tree.n, D, eps)
    log.info("stage %d item %s case %s lam=%d eps-check=%s", j, item.label(), case, lam, eps_ok)
    for t, s, nu in zip(T, S, nus):
        _splice(tree, t, s, j, nu)
    if not tree.leaves:
        raise InfeasibleParameters("construction deleted every ball")
    tree.certificates.append(CertificateRecord(j, item, kind, L, sigma_balls, target, params))
    rec = StageRecord(j, item, case, mus, nus, lam, L, A, eps, eps_ok)
    tree.stages.append(rec)
    tree.snapshots.append((lam, tree.leaf_balls()))
    return rec


def run(spec: FieldSpec, registry: Registry, depth: int, lam0: int, n: int = 1, gap: int = 1, profile=None):
    """Build the tree through ``depth`` stages.

    Running out of precision stops the construction early; the finite tree
    built so far keeps all of its certificates.  Returns ``(tree, queue, halted)``
    where ``halted`` is ``None`` or the message of the exhaustion.
    """
    tree, queue = init_stage0(spec, registry, lam0, n)
    halted = None
    for _ in range(depth):
        try:
            process_next(tree, queue, gap, profile)
        except PrecisionExhausted as exc:
            queue.processed.pop()
            halted = str(exc)
            break
    return tree, queue, halted


# --- certificate re-verification --------------------------------------------


@dataclass
class VerifyResult:
    item: QueueItem
    L: int
    max_valuation: int
    checked: int
    nonvanishing: bool
    ok: bool
    witness: list | None = None


def verify_certificates(tree: ConstructionTree) -> list:
    """Re-evaluate every certificate over the current leaf centers of its
    ball tuple; the recorded bound must still hold (refinement only shrinks)."""
    out = []
    cap = tree.spec.cap
    for cert in tree.certificates:
        cols = [tree.leaves_in(B) for B in cert.sigma_balls]
        if cert.kind == "poly":
            best, arg, checked = max_valuation_over(cert.target, [[L.center for L in c] for c in cols])
            witness = None if arg is None else [cols[i][k] for i, k in enumerate(arg)]
        else:
            _, best, witness, checked = verify_smooth(cert.target, cols, cert.L)
            witness = list(witness) if witness else None
        ok = 0 <= best <= cert.L
        out.append(VerifyResult(cert.item, cert.L, best, checked, best < cap, ok, None if ok else witness))
    return out


def check_nesting(tree: ConstructionTree) -> bool:
    """Every node lies inside its parent and is strictly finer."""
    for node in tree.nodes[1:]:
        parent = tree.nodes[node.parent].ball
        if not (parent.contains_ball(node.ball) and node.ball.lam >= parent.lam):
            return False
    return True


# --- Minkowski counts ----------------------------------------------------------


def _live(tree: ConstructionTree) -> set:
    live = set()
    for nid in tree.leaves.values():
        while nid >= 0 and nid not in live:
            live.add(nid)
            nid = tree.nodes[nid].parent
    return live


def _trunc(B: Ball, mu: int) -> Ball:
    return Ball(tuple(c.truncate(mu) for c in B.center), mu)


def minkowski_count(tree: ConstructionTree, mu: int) -> int:
    """``N_mu``: the number of ``q**-mu`` balls meeting ``E``, by branching
    over the tree (a subtree finer than ``mu`` contributes its distinct
    ``mu``-ancestors, a leaf coarser than ``mu`` all of its sub-balls)."""
    live = _live(tree)
    q, n = tree.spec.q, tree.n
    leaf_ids = set(tree.leaves.values())

    def count(nid: int) -> int:
        node = tree.nodes[nid]
        if nid in leaf_ids:
            return q ** (n * (mu - node.ball.lam))
        kids = [c for c in node.children if c in live]
        if not kids:
            return 0
        if all(tree.nodes[c].ball.lam <= mu for c in kids):
            return sum(count(c) for c in kids)
        return len({_trunc(tree.nodes[c].ball, mu) for c in kids})

    root = tree.nodes[0]
    if mu < root.ball.lam:
        raise ValueError("mu is coarser than the root ball")
    return count(0)


def minkowski_count_trie(tree: ConstructionTree, mu: int) -> int:
    """``N_mu`` from a digit trie over truncated leaf centers."""
    q, n = tree.spec.q, tree.n
    trie: dict = {}
    total = 0
    for B in tree.leaves:
        if B.lam <= mu:
            total += q ** (n * (mu - B.lam))
            continue
        node = trie
        for pos in range(mu):
            digit = tuple(_digit_at(c, pos) for c in B.center)
            node = node.setdefault(digit, {})
        node.setdefault("end", True)

    def paths(node, depth):
        if depth == mu:
            return 1
        return sum(paths(child, depth + 1) for key, child in node.items() if key != "end")

    return total + (paths(trie, 0) if trie else 0)


def _digit_at(x, pos: int) -> tuple:
    """Uniformizer digit of ``x`` at position ``pos``: one base-p digit per
    inertia coordinate."""
    s = x.spec
    j, k2 = divmod(pos, s.e)
    return tuple((x.coords[k1 * s.e + k2] // s.p**j) % s.p for k1 in range(s.f))


def minkowski_count_enumerate(tree: ConstructionTree, mu: int) -> int:
    """``N_mu`` by explicit ball-by-ball descent from the root.

    Every sub-ball is tested against the leaf list; only balls meeting a leaf
    are expanded, and a ball lying inside a leaf contributes all of its
    ``q**-mu`` sub-balls.
    """
    q, n = tree.spec.q, tree.n
    root = tree.nodes[0].ball
    if mu < root.lam:
        raise ValueError("mu is coarser than the root ball")
    leaves = list(tree.leaves)
    hits = 0
    frontier = [(root, leaves)]
    while frontier:
        W, near = frontier.pop()
        if any(L.contains_ball(W) for L in near):
            hits += q ** (n * (mu - W.lam))
            continue
        near = [L for L in near if W.contains_ball(L)]
        if not near:
            continue
        if W.lam == mu:
            hits += 1
            continue
        frontier.extend((C, near) for C in subdivide(W, W.lam + 1))
    return hits


# --- s-contribution audit ------------------------------------------------------


def validate_covering(tree: ConstructionTree, covering, V: Ball) -> None:
    """Raise ``ValueError`` unless ``covering`` is a disjoint family of balls
    inside ``V`` covering ``E cap V``."""
    cov = sorted(covering, key=lambda B: (B.lam, B.key()))
    for U in cov:
        if not V.contains_ball(U):
            raise ValueError(f"covering ball {U} is not inside V")
    for a, b in itertools.combinations(cov, 2):
        if a.contains_ball(b) or b.contains_ball(a):
            raise ValueError(f"covering balls {a} and {b} overlap")
    q, n = tree.spec.q, tree.n
    for L in tree.leaves:
        if L.contains_ball(V):
            parts = cov
            target = V
        elif V.contains_ball(L):
            if any(U.contains_ball(L) for U in cov):
                continue
            parts = [U for U in cov if L.contains_ball(U)]
            target = L
        else:
            continue
        volume = sum(Fraction(1, q ** (n * U.lam)) for U in parts)
        if volume != Fraction(1, q ** (n * target.lam)):
            raise ValueError(f"E inside {target} is not covered")


def s_contribution(tree: ConstructionTree, covering, V: Ball, s: float, validate: bool = True) -> float:
    """``s(V)``: the sum of ``r(U)**s`` over covering balls inside ``V``."""
    if validate:
        validate_covering(tree, covering, V)
    q = tree.spec.q
    return math.fsum(q ** (-U.lam * s) for U in covering if V.contains_ball(U))


def random_covering(tree: ConstructionTree, nid: int, rng, p_stop: float) -> list:
    """Seeded random covering of ``E`` inside node ``nid`` by tree balls:
    each live node is kept whole with probability ``p_stop``, otherwise
    replaced by coverings of its live children."""
    live = _live(tree)
    leaf_ids = set(tree.leaves.values())
    out = []
    stack = [nid]
    while stack:
        cur = stack.pop()
        node = tree.nodes[cur]
        kids = [c for c in node.children if c in live]
        # the top ball is kept whole less often so most coverings are mixed-scale
        stop = p_stop if cur != nid else p_stop / 4
        if cur in leaf_ids or not kids or rng.random() < stop:
            out.append(node.ball)
        else:
            stack.extend(reversed(kids))
    return sorted(out, key=Ball.key)


@dataclass
class CoveringAudit:
    V: Ball
    k: int
    size: int
    s_value: float
    superadditive: bool
    structural: bool
    majority: str
    part1: bool
    part2_count: int
    part2_bound: float
    part2: bool
    holds: bool
    prop_bound: bool


def dichotomy(tree: ConstructionTree, covering, V: Ball, s: float, chain=None) -> CoveringAudit:
    """Check superadditivity and the majority-volume dichotomy for one covering.

    ``V`` has radius ``q**-mu_k`` on the scale chain (``mu_{-1} = 0``).
    Coarse balls are those of radius strictly larger than ``q**-mu_{k+1}``.
    Part 1 asks ``s(V) >= q**(-mu_k s) / 4``; part 2 asks for at least
    ``q**((mu_{k-1} - mu_k) s)`` balls of radius ``q**-mu_{k+1}`` inside ``V``
    containing a covering ball.
    """
    chain = chain or sorted(set(tree.lam_chain))
    if V.lam not in chain:
        raise ValueError(f"V radius q^-{V.lam} is not on the scale chain {chain}")
    k = chain.index(V.lam)
    mu_prev = chain[k - 1] if k > 0 else 0
    mu_next = chain[k + 1] if k + 1 < len(chain) else None
    q, n = tree.spec.q, tree.n
    inside = [U for U in covering if V.contains_ball(U)]
    sV = s_contribution(tree, covering, V, s)
    coarse = sum(Fraction(1, q ** (n * U.lam)) for U in inside if mu_next is None or U.lam < mu_next)
    fine = sum(Fraction(1, q ** (n * U.lam)) for U in inside if mu_next is not None and U.lam >= mu_next)
    part1 = sV >= 0.25 * q ** (-V.lam * s)
    if mu_next is None:
        count = 0
    else:
        count = len({_trunc(U, mu_next) for U in inside if U.lam >= mu_next})
    bound = q ** ((mu_prev - V.lam) * s)
    part2 = count >= bound
    if coarse > fine:
        majority, holds = "coarse", part1
    elif fine > coarse:
        majority, holds = "fine", part2
    else:
        majority, holds = "tie", part1 or part2
    # superadditivity over the disjoint sub-balls one scale down
    subs = sorted({_trunc(U, mu_next) for U in inside if mu_next is not None and U.lam >= mu_next}, key=Ball.key)
    parts = [[U for U in inside if W.contains_ball(U)] for W in subs]
    structural = sum(len(p) for p in parts) <= len(inside) and all(
        set(p) <= set(inside) for p in parts
    )
    sub_sum = math.fsum(math.fsum(q ** (-U.lam * s) for U in p) for p in parts)
    superadditive = sub_sum <= sV
    return CoveringAudit(
        V, k, len(inside), sV, superadditive, structural, majority, part1, count, bound, part2, holds,
        prop_bound=part1,
    )


def audit_coverings(tree: ConstructionTree, s: float, count: int = 100, seed: int = 0) -> list:
    """Generate ``count`` mixed-scale coverings and audit each."""
    rng = random.Random(seed)
    chain = sorted(set(tree.lam_chain))
    live = _live(tree)
    candidates = [
        node.id for node in tree.nodes if node.id in live and node.ball.lam in chain and node.children
    ]
    if not candidates:
        raise InfeasibleParameters("no refined tree balls to audit")
    out = []
    for i in range(count):
        nid = candidates[i % len(candidates)]
        p_stop = rng.choice([0.0, 0.2, 0.5, 0.8])
        cov = random_covering(tree, nid, rng, p_stop)
        out.append(dichotomy(tree, cov, tree.nodes[nid].ball, s, chain))
    return out
