import itertools

import pytest

from localavoid import poly
from localavoid.errors import DerivativeVanishes, InfeasibleParameters, PrecisionExhausted
from localavoid.field import Ball, ball_of, enumerate_balls, make_field_spec, subdivide, valuation

# Frozen step parameters for x1 - 2 x2 + x3 over Z_5 at nu = 2 with A = 0.
AP3_Z5_STEP = {"h": 1, "b": 0, "d": 1, "s": 4, "C_mul": 1, "hp": 6, "K0": 7, "delta_val": 7, "L": 7, "lam": 8}


@pytest.fixture
def Z5(fields):
    return fields["Z5"]


def test_shape(Z5):
    P = poly.builtin_poly(Z5, "ap3")
    assert (P.nvars, P.degree, P.coeff_height_bound, P.monomial_count_bound) == (3, 1, 0, 4)
    Q = poly.builtin_poly(Z5, "ap3-quad")
    assert Q.degree == 2
    assert Q.monomial_count_bound == 10


def test_eval_matches_integers(Z5):
    P = poly.builtin_poly(Z5, "ap3-quad")
    f = poly.int_evaluator(P)
    for xs in itertools.product(range(0, 40, 7), repeat=3):
        x1, x2, x3 = xs
        want = (x1 + x2 - 2 * x3 + (x1 - x2) ** 2) % 5**8
        assert f(xs) == want
        assert poly.eval_poly(P, [Z5.from_int(x) for x in xs]).to_int() == want


def test_partial_derivatives_and_chain(Z5):
    Q = poly.builtin_poly(Z5, "x2-minus-y")
    d = poly.partial_derivative(Q, 0)
    assert d.degree == 1
    assert poly.partial_derivative(d, 0).constant_value() == Z5.from_int(2)
    assert poly.derivative_chain(Q) == [0, 0]
    assert poly.derivative_chain(poly.builtin_poly(Z5, "ap3")) == [2]


def test_format_parse_roundtrip(fields):
    for spec in (fields["Z5"], fields["Q2R"], fields["F9"]):
        P = poly.builtin_poly(spec, "ap3-quad")
        text = poly.format_poly(P)
        assert poly.format_poly(poly.parse_poly(spec, text)) == text


def test_parse_extension_coefficients(fields):
    spec = fields["Q9"]
    P = poly.parse_poly(spec, "n=1\nv=2\n1,0 : 1|2\n0,1 : -0|1\n")
    x = [spec.one(), spec.one()]
    assert poly.eval_poly(P, x) == spec.from_coords([1, 2]) - spec.from_coords([0, 1])


def test_parse_errors(Z5):
    with pytest.raises(ValueError):
        poly.parse_poly(Z5, "")
    with pytest.raises(ValueError):
        poly.parse_poly(Z5, "1,0 : 7\n")
    with pytest.raises(KeyError):
        poly.builtin_poly(Z5, "nope")


def test_derivative_lower_bound(fields):
    Z3 = fields["Z3"]
    R = poly.builtin_poly(Z3, "x2-minus-y")
    unit_x = [ball_of(Z3.from_int(1), 1)]
    assert poly.derivative_lower_bound(R, 0, [unit_x, [ball_of(Z3.zero(), 1)]]) == 0
    deep = [ball_of(Z3.from_int(3), 2)]
    assert poly.derivative_lower_bound(R, 0, [deep, [ball_of(Z3.zero(), 1)]]) == 1
    # the derivative 2x vanishes at x = 0, so no bound exists on the unit ball
    with pytest.raises(DerivativeVanishes):
        poly.derivative_lower_bound(R, 0, [[Ball((Z3.zero(),), 0)], [Ball((Z3.zero(),), 0)]])


def test_step_parameters(Z5):
    ex = poly.single_scale_exponents(poly.builtin_poly(Z5, "ap3"), 0, 2)
    assert {k: ex[k] for k in AP3_Z5_STEP} == AP3_Z5_STEP


def test_unbounded_slack_is_infeasible(fields):
    spec = fields["Q9"]
    P = poly.builtin_poly(spec, "ap3")
    with pytest.raises(InfeasibleParameters):
        poly.single_scale_exponents(P, 0, 2)


def test_avoidance_in_f2_series(fields):
    F2 = make_field_spec("finite", 2, N=12)
    P = poly.builtin_poly(F2, "sum3")
    fams = [[ball_of(F2.from_coords([c]), 1)] for c in (0, 1, 0)]
    S, cert = poly.avoid_single_scale(fams, P, 0, 1, 2)
    ok, best, _, checked = poly.verify_certificate(P, S, cert.lower_bound_exp)
    assert ok and checked == 8


def test_avoidance_certificate_and_structure(Z5):
    P = poly.builtin_poly(Z5, "ap3")
    fams = [[ball_of(Z5.from_int(c), 1)] for c in (0, 1, 2)]
    S, cert = poly.avoid_single_scale(fams, P, 0, 1, 2)
    assert cert.lower_bound_exp == 7
    assert [len(s) for s in S] == [5, 5, 5]
    ok, best, witness, checked = poly.verify_certificate(P, S, cert.lower_bound_exp)
    assert ok and best == 7 and checked == 125
    for fam, chosen in zip(fams, S):
        for U in subdivide(fam[0], 2):
            assert sum(U.contains_ball(W) for W in chosen) == 1
    # points off the centers, at a finer precision
    W5 = make_field_spec("zero", 5, N=12)
    Pw = poly.builtin_poly(W5, "ap3")
    for x1, x2, x3 in itertools.product(*(s[:2] for s in S)):
        for k in range(1, 4):
            pts = [W5.from_int(B.center[0].to_int() + k * 5**B.lam) for B in (x1, x2, x3)]
            v = valuation(poly.eval_poly(Pw, pts))
            assert v is not None and v <= 7


def test_lam_min_and_precision(Z5):
    P = poly.builtin_poly(Z5, "ap3")
    fams = [[ball_of(Z5.zero(), 1)]] * 3
    S, cert = poly.avoid_single_scale(fams, P, 0, 1, 2, lam_min=8)
    assert S[0][0].lam == 8
    with pytest.raises(PrecisionExhausted):
        poly.avoid_single_scale(fams, P, 0, 1, 2, lam_min=9)
    with pytest.raises(InfeasibleParameters):
        poly.avoid_single_scale(fams, P, 0, 2, 2)


def test_kernel_and_generic_paths_agree(fields):
    Z5 = fields["Z5"]
    P = poly.builtin_poly(Z5, "ap3-quad")
    cols = [[B.center for B in enumerate_balls(Z5, 1, 2)[:7]]] * 3
    fast = poly.max_valuation_over(P, cols)
    best, checked = -1, 0
    for combo in itertools.product(*cols):
        v = valuation(poly.eval_poly(P, list(combo)))
        best = max(best, Z5.cap if v is None else v)
        checked += 1
    assert fast[0] == best and fast[2] == checked
