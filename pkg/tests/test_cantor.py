import itertools
import random

import pytest

from localavoid import cantor, poly, serialize, smooth
from localavoid.errors import InfeasibleParameters
from localavoid.field import Ball, make_field_spec, valuation

Z5 = make_field_spec("zero", 5, N=24)

# Frozen schedule of the depth-3 run for x1 - 2 x2 + x3 from lam0 = 1.
AP3_ITEMS = ["(1,0,[0, 1, 2],0)", "(1,0,[0, 1, 3],0)", "(1,0,[0, 1, 4],0)"]
AP3_CHAIN = [1, 8, 15, 22]
AP3_LEAVES = 265
# x**2 - y needs both derivative-chain cases.
QUAD_STAGES = [("(1,1,[0, 1],0)", "1", 7, 6, 0), ("(1,0,[0, 1],0)", "2", 36, 35, 6)]


@pytest.fixture(scope="module")
def ap3_tree():
    reg = cantor.Registry().add(poly.builtin_poly(Z5, "ap3"))
    tree, queue, halted = cantor.run(Z5, reg, 3, 1)
    assert halted is None
    return reg, tree, queue


def test_schedule_frozen(ap3_tree):
    _, tree, queue = ap3_tree
    assert [s.item.label() for s in tree.stages] == AP3_ITEMS
    assert [it.label() for it in queue.processed] == AP3_ITEMS
    assert tree.lam_chain == AP3_CHAIN
    assert len(tree.leaves) == AP3_LEAVES
    assert all(s.case == "1" for s in tree.stages)


def test_chain_increases_and_nests(ap3_tree):
    _, tree, _ = ap3_tree
    chain = tree.lam_chain
    assert all(a < b for a, b in zip(chain, chain[1:]))
    assert cantor.check_nesting(tree)


def test_certificates_reverify(ap3_tree):
    _, tree, _ = ap3_tree
    results = cantor.verify_certificates(tree)
    assert [r.ok for r in results] == [True] * 3
    assert [r.max_valuation for r in results] == [7, 0, 0]


def test_tampered_certificate_fails(ap3_tree):
    _, tree, _ = ap3_tree
    cert = tree.certificates[0]
    saved = cert.L
    try:
        cert.L = 6
        assert not cantor.verify_certificates(tree)[0].ok
    finally:
        cert.L = saved


def test_derivative_chain_cases():
    Z = make_field_spec("zero", 5, N=40)
    reg = cantor.Registry().add(poly.builtin_poly(Z, "x2-minus-y"))
    tree, queue, halted = cantor.run(Z, reg, 2, 1)
    assert halted is None
    got = [(s.item.label(), s.case, s.lam, s.L, s.A) for s in tree.stages]
    assert got == QUAD_STAGES
    P = reg.functions[0]
    balls = [tree.stage_list(0)[i] for i in (0, 1)]
    for x, y in itertools.product(tree.leaves_in(balls[0]), tree.leaves_in(balls[1])):
        assert valuation(poly.eval_poly(P, [x.center, y.center])) <= 35


def test_precision_halts_cleanly():
    Z = make_field_spec("zero", 5, N=12)
    reg = cantor.Registry().add(poly.builtin_poly(Z, "ap3"))
    tree, queue, halted = cantor.run(Z, reg, 3, 1)
    assert halted is not None and "precision" in halted
    assert tree.depth == 1 and len(queue.processed) == 1


def test_stage0_needs_enough_balls():
    Z3 = make_field_spec("zero", 3, N=8)
    reg = cantor.Registry().add(poly.builtin_poly(Z3, "ap3"))
    with pytest.raises(InfeasibleParameters):
        cantor.init_stage0(Z3, reg, 1)
    tree, _ = cantor.init_stage0(Z3, reg, 2)
    assert len(tree.leaves) == 9


def test_registry_rejects_constants():
    P = poly.IntPolynomial.from_terms(Z5, 1, 2, {(0, 0): 3})
    with pytest.raises(InfeasibleParameters):
        cantor.Registry().add(P)
    with pytest.raises(TypeError):
        cantor.Registry().add("x - y")


def test_queue_order_mixed_registry():
    reg = cantor.Registry().add(poly.builtin_poly(Z5, "x-minus-y")).add(poly.builtin_poly(Z5, "ap3"))
    tree, queue = cantor.init_stage0(Z5, reg, 1)
    items = list(itertools.islice(queue.segment_items(0), 30))
    assert all(it.ell == 1 for it in items[:20])  # segment 0 admits only ell <= 1
    assert items[0].sigma == (0, 1) and items[1].sigma == (0, 2)
    assert len(list(queue.segment_items(0))) == 20


def test_smooth_stage():
    Z3 = make_field_spec("zero", 3, N=8)
    reg = cantor.Registry().add(smooth.smooth_builtin(Z3, "ap3-quad"))
    tree, _, halted = cantor.run(Z3, reg, 2, 2)
    assert halted is None
    assert [s.case for s in tree.stages] == ["3", "3"]
    assert all(r.ok for r in cantor.verify_certificates(tree))


def test_minkowski_three_ways(ap3_tree):
    _, tree, _ = ap3_tree
    for mu in range(1, 12):
        a = cantor.minkowski_count(tree, mu)
        assert a == cantor.minkowski_count_trie(tree, mu) == cantor.minkowski_count_enumerate(tree, mu)
    assert cantor.minkowski_count(tree, 1) == 5


def test_validate_covering(ap3_tree):
    _, tree, _ = ap3_tree
    V = tree.stage_list(0)[0]
    cantor.validate_covering(tree, [V], V)
    with pytest.raises(ValueError):
        cantor.validate_covering(tree, [V, V], V)
    with pytest.raises(ValueError):
        cantor.validate_covering(tree, [Ball(V.center, V.lam + 1)], V)  # misses part of E


def test_whole_ball_covering_is_coarse(ap3_tree):
    _, tree, _ = ap3_tree
    V = tree.stage_list(0)[0]
    audit = cantor.dichotomy(tree, [V], V, 0.5)
    assert audit.majority == "coarse" and audit.part1 and audit.holds


def test_random_coverings_are_valid(ap3_tree):
    _, tree, _ = ap3_tree
    rng = random.Random(3)
    node = tree.nodes[1]
    for _ in range(10):
        cov = cantor.random_covering(tree, node.id, rng, 0.3)
        cantor.validate_covering(tree, cov, node.ball)


def test_audit_is_seeded(ap3_tree):
    _, tree, _ = ap3_tree
    a = cantor.audit_coverings(tree, 0.5, 20, seed=5)
    b = cantor.audit_coverings(tree, 0.5, 20, seed=5)
    assert [x.s_value for x in a] == [x.s_value for x in b]
    assert all(x.holds and x.superadditive for x in a)


def test_tree_dump_deterministic(ap3_tree):
    _, tree, _ = ap3_tree
    text = serialize.dump_tree(tree)
    assert text == serialize.dump_tree(tree)
    assert text.startswith("# construction tree\nfield Z_5/p^24\n")
    assert text.count("\ncert ") == 3
