import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localavoid.errors import FieldSpecError, HenselError
from localavoid.field import (
    Ball,
    abs_value,
    ball_of,
    enumerate_balls,
    hensel_lift,
    inverse,
    make_field_spec,
    subdivide,
    valuation,
    vp,
)

# Frozen oracle values.  Each has an independent check next to it.
SQRT_MINUS_ONE_Z5_N8 = 280182  # 280182**2 + 1 == 0 mod 5**8, lifted from 2
SQRT_MINUS_ONE_Z5_N8_FROM_3 = 110443
F2_SQUARE_OF_1011 = 0b1000101  # carry-less square


def test_oracles_are_consistent():
    assert (SQRT_MINUS_ONE_Z5_N8**2 + 1) % 5**8 == 0
    assert (SQRT_MINUS_ONE_Z5_N8_FROM_3**2 + 1) % 5**8 == 0
    assert SQRT_MINUS_ONE_Z5_N8 % 5 == 2
    assert SQRT_MINUS_ONE_Z5_N8 + SQRT_MINUS_ONE_Z5_N8_FROM_3 == 5**8


def test_hensel_root_of_x2_plus_1(fields):
    Z5 = fields["Z5"]
    assert hensel_lift([1, 0, 1], Z5.from_int(2)).to_int() == SQRT_MINUS_ONE_Z5_N8
    assert hensel_lift([1, 0, 1], Z5.from_int(3)).to_int() == SQRT_MINUS_ONE_Z5_N8_FROM_3


def test_hensel_rejects_bad_start(fields):
    with pytest.raises(HenselError):
        hensel_lift([1, 0, 1], fields["Z5"].from_int(1))


def test_hensel_sqrt7_in_z3():
    Z3 = make_field_spec("zero", 3, N=8)
    r = hensel_lift([-7, 0, 1], Z3.from_int(1))
    assert (r.to_int() ** 2 - 7) % 3**8 == 0


@given(st.integers(0, 5**8 - 1), st.integers(0, 5**8 - 1))
def test_zp_matches_integers(a, b):
    Z5 = make_field_spec("zero", 5, N=8)
    x, y = Z5.from_int(a), Z5.from_int(b)
    M = 5**8
    assert (x + y).to_int() == (a + b) % M
    assert (x - y).to_int() == (a - b) % M
    assert (x * y).to_int() == (a * b) % M
    v = valuation(x)
    assert v == (None if a == 0 else vp(a, 5, 8))


def _clmul(a, b):
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def test_f2_series_multiplication(fields):
    F2 = fields["F2"]
    a = F2.from_coords([0b1011])
    assert (a * a).coords == (F2_SQUARE_OF_1011,)
    for u, w in itertools.product(range(0, 256, 7), range(0, 256, 11)):
        got = (F2.from_coords([u]) * F2.from_coords([w])).coords[0]
        assert got == _clmul(u, w) & 0xFF


def test_unramified_generator_squares_to_minus_one(fields):
    for name in ("Q9", "F9"):
        spec = fields[name]
        t1 = spec.basis_element(1, 0)
        assert t1 * t1 == spec.from_int(-1)


def test_eisenstein_uniformizer(fields):
    Q2R = fields["Q2R"]
    t2 = Q2R.uniformizer_power(1)
    assert t2 * t2 == Q2R.from_int(2)
    assert valuation(Q2R.from_int(2)) == 2
    assert valuation(Q2R.from_int(6)) == 2
    assert valuation(Q2R.uniformizer_power(3)) == 3
    assert valuation(Q2R.zero()) is None


def test_abs_value_and_inverse(fields):
    Z5 = fields["Z5"]
    assert abs_value(Z5.from_int(50)) == Fraction(1, 25)
    assert abs_value(Z5.zero()) == 0
    two = Z5.from_int(2)
    assert (inverse(two) * two) == Z5.one()
    for spec in (fields["Q9"], fields["F9"], fields["Q2R"]):
        x = spec.one() + spec.basis_element(spec.f - 1, 0) * spec.uniformizer_power(spec.e)
        assert inverse(x) * x == spec.one()


def test_subdivide_counts_and_order(fields):
    for spec in fields.values():
        B = Ball((spec.zero(),), 1)
        kids = subdivide(B, 3)
        assert len(kids) == spec.q**2
        assert [K.key() for K in kids] == sorted(K.key() for K in kids)
        assert all(B.contains_ball(K) for K in kids)
        assert len(set(kids)) == len(kids)


def test_enumerate_balls_partition(fields):
    spec = fields["Q2R"]
    balls = enumerate_balls(spec, 1, 3)
    assert len(balls) == 8
    x = spec.from_coords([5, 3])
    assert sum(B.contains(x) for B in balls) == 1


def test_ball_of_is_canonical(fields):
    Z5 = fields["Z5"]
    assert ball_of(Z5.from_int(128), 2) == ball_of(Z5.from_int(3), 2)
    assert ball_of(Z5.from_int(128), 2).center[0].to_int() == 3


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(characteristic="zero", p=4),
        dict(characteristic="zero", p=3, f=2, residue_poly=(2, 0, 1)),  # x^2 + 2 = (x-1)(x+1) mod 3
        dict(characteristic="zero", p=2, e=2, eisenstein_coeffs=((-4,), (0,))),
        dict(characteristic="odd", p=3),
        dict(characteristic="zero", p=3, N=0),
    ],
)
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(FieldSpecError):
        make_field_spec(**kwargs)


@settings(max_examples=60)
@given(st.lists(st.integers(0, 7), min_size=2, max_size=2), st.lists(st.integers(0, 7), min_size=2, max_size=2))
def test_ramified_ring_axioms(a, b):
    spec = make_field_spec("zero", 2, e=2, eisenstein_coeffs=((-2,), (0,)), N=8)
    x, y = spec.from_coords(a), spec.from_coords(b)
    z = spec.from_coords([3, 1])
    assert x * y == y * x
    assert (x + y) * z == x * z + y * z
    assert x - x == spec.zero()
    vx, vy = valuation(x), valuation(y)
    if vx is not None and vy is not None and vx + vy < spec.cap:
        assert valuation(x * y) == vx + vy
