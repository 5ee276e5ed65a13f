import dataclasses
import itertools
from fractions import Fraction

import pytest

from localavoid import smooth
from localavoid.errors import InfeasibleParameters
from localavoid.field import Ball, ball_of, make_field_spec, subdivide

Z3 = make_field_spec("zero", 3, N=6)

# Exact zero-box counts over the unit box, lam = 1, 2, 3 (frozen).
BOX_COUNTS_Z3 = {"x-minus-y": [3, 9, 27], "x2-minus-y": [3, 9, 27], "ap3": [9, 81, 729]}
# Single-scale smooth step for (x1 + x2 - 2 x3) + (x1 - x2)**2 at centers 0, 0, 0.
AP3Q_ORIGIN = {"lam": 4, "tau": 4, "zero_boxes": 729, "last_blocked": 5, "sizes": [3, 3, 22]}


def unit(f):
    return Ball(tuple(f.spec.zero() for _ in range(f.nvars)), 0)


def test_exponent_of():
    assert smooth.exponent_of(Fraction(1), 3) == 0
    assert smooth.exponent_of(Fraction(1, 9), 3) == 2
    assert smooth.exponent_of(Fraction(1, 10), 3) == 3
    assert smooth.exponent_of(Fraction(0), 3) is None


def test_zero_threshold():
    lin = smooth.smooth_builtin(Z3, "x-minus-y")
    quad = smooth.smooth_builtin(Z3, "x2-minus-y")
    assert smooth.zero_threshold(lin, 3) == 3
    assert smooth.zero_threshold(quad, 3) == 3  # min(3 + 0, 6 + 0)
    assert smooth.zero_threshold(quad, 0) == 0


@pytest.mark.parametrize("name", sorted(BOX_COUNTS_Z3))
def test_box_counts_frozen(name):
    f = smooth.smooth_builtin(Z3, name)
    got = [smooth.count_zero_boxes(f, unit(f), lam) for lam in (1, 2, 3)]
    assert got == BOX_COUNTS_Z3[name]
    assert all(c <= f.box_bound(0, lam) for c, lam in zip(got, (1, 2, 3)))


def test_fast_and_generic_paths_agree():
    f = smooth.smooth_builtin(Z3, "ap3-quad")
    g = dataclasses.replace(f, polys=())
    T = ball_of([Z3.zero(), Z3.from_int(1), Z3.from_int(1)], 1)
    assert smooth.zero_boxes(f, T, 3) == smooth.zero_boxes(g, T, 3)


def test_tabulated_matches_polynomial():
    lam = 2
    lines = ["m=1", "n=1", "v=2", f"lam={lam}", "C0=1", "C1=1", "C2=0", "minor=1"]
    for x, y in itertools.product(range(9), repeat=2):
        d = (x - y) % 3**6
        digits = ",".join(str((d // 3**j) % 3) for j in range(6))
        lines.append(f"{x % 3},{x // 3} ; {y % 3},{y // 3} : {digits}")
    tab = smooth.load_tabulated(Z3, "\n".join(lines))
    f = smooth.smooth_builtin(Z3, "x-minus-y")
    for k in (1, 2):
        assert smooth.count_zero_boxes(tab, unit(tab), k) == smooth.count_zero_boxes(f, unit(f), k)


def test_slab_counts_within_bound():
    f = smooth.smooth_builtin(Z3, "ap3")
    boxes = smooth.zero_boxes(f, unit(f), 2)
    slabs = smooth.slab_counts(f, boxes)
    assert max(slabs.values()) <= smooth.slab_bound(f)
    assert sum(slabs.values()) == len(boxes)


def test_spec_validation():
    f = smooth.smooth_builtin(Z3, "x-minus-y")
    with pytest.raises(InfeasibleParameters):
        dataclasses.replace(f, m=2, minor_columns=(0, 1))
    with pytest.raises(InfeasibleParameters):
        dataclasses.replace(f, C0=Fraction(2))


def test_project_select_tie_break_and_postconditions():
    T = [Ball((Z3.zero(),), 0)]
    # the zero-set boxes sit over heads 0 and 1 at radius q**-2
    B = [ball_of([Z3.from_int(h), Z3.from_int(t)], 2) for h in (0, 1) for t in (0, 4)]
    S, Bp, report = smooth.project_select(T, B, 0, 1, 2, 1)
    assert report.ok
    # in the nu-ball of 0, candidate 0 carries two boxes and 3 carries none
    assert S[0] == ball_of(Z3.from_int(3), 2)
    assert S[1] == ball_of(Z3.from_int(4), 2)
    assert Bp == []


def test_project_select_rejects_bad_scales():
    T = [Ball((Z3.zero(),), 0)]
    with pytest.raises(InfeasibleParameters):
        smooth.project_select(T, [], 1, 1, 2, 1)


def test_single_scale_step_frozen():
    f = smooth.smooth_builtin(Z3, "ap3-quad")
    fams = [[ball_of(Z3.zero(), 1)] for _ in range(3)]
    S, cert = smooth.avoid_single_scale_smooth(fams, f, 1, 2)
    got = {k: cert.params[k] for k in ("lam", "tau", "zero_boxes", "last_blocked")}
    got["sizes"] = [len(s) for s in S]
    assert got == AP3Q_ORIGIN
    ok, best, _, checked = smooth.verify_smooth(f, S, cert.lower_bound_exp)
    assert ok and checked == 3 * 3 * 22
    assert all(r.ok for r in cert.projections)
    for fam, chosen in zip(fams[:2], S[:2]):
        for U in subdivide(fam[0], 2):
            assert sum(U.contains_ball(W) for W in chosen) == 1


def test_taylor_precondition():
    f = smooth.smooth_builtin(Z3, "x2-minus-y")
    fams = [[Ball((Z3.zero(),), 0)]] * 2
    with pytest.raises(InfeasibleParameters):
        smooth.avoid_single_scale_smooth(fams, f, 0, 1)
    S, cert = smooth.avoid_single_scale_smooth([[ball_of(Z3.zero(), 1)]] * 2, f, 1, 2)
    assert smooth.verify_smooth(f, S, cert.lower_bound_exp)[0]


def test_default_lambda():
    f = smooth.smooth_builtin(Z3, "ap3")
    assert f.dimension == Fraction(1, 2)
    assert smooth.default_lambda(f, 1, 2) == 4
