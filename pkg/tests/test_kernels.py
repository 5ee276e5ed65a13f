import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localavoid import _kernels_py, kernels

needs_compiled = pytest.mark.skipif(not kernels.HAVE_COMPILED, reason="extension not built")

AP3 = [(1, (1, 0, 0)), (5**8 - 2, (0, 1, 0)), (1, (0, 0, 1))]


def brute(terms, columns, modulus, p, cap, groups=None):
    import itertools

    best, arg, checked = -1, None, 0
    for idx in itertools.product(*[range(len(c)) for c in columns]):
        if groups is not None and len({groups[i][j] for i, j in enumerate(idx)}) == 1:
            continue
        pts = [columns[i][j] for i, j in enumerate(idx)]
        flat = [x for pt in pts for x in pt]
        total = sum(c * eval_mono(flat, e) for c, e in terms) % modulus
        v = _kernels_py._val(total, p, cap)
        checked += 1
        if v > best:
            best, arg = v, idx
    return best, arg, checked


def eval_mono(xs, exps):
    out = 1
    for x, k in zip(xs, exps):
        out *= x**k
    return out


def test_python_kernel_against_brute_force():
    rng = random.Random(7)
    M = 5**8
    cols = [[(rng.randrange(M),) for _ in range(6)] for _ in range(3)]
    assert _kernels_py.product_max_valuation(AP3, cols, M, 5, 8) == brute(AP3, cols, M, 5, 8)


def test_exact_zero_reports_cap():
    M = 3**6
    cols = [[(1,)], [(2,)], [(3,)]]
    best, arg, checked = kernels.product_max_valuation([(1, (1, 0, 0)), (M - 2, (0, 1, 0)), (1, (0, 0, 1))], cols, M, 3, 6)
    assert (best, arg, checked) == (6, (0, 0, 0), 1)


def test_groups_skip_same_ball_tuples():
    M = 5**8
    cols = [[(0,), (1,)]] * 3
    groups = [[0, 1]] * 3
    best, arg, checked = kernels.product_max_valuation(AP3, cols, M, 5, 8, groups=groups)
    assert checked == 6
    assert best == 0


def test_empty_column():
    assert kernels.product_max_valuation(AP3, [[(1,)], [], [(2,)]], 5**8, 5, 8) == (-1, None, 0)


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(0, 5**20 - 1), min_size=1, max_size=5),
    st.lists(st.integers(0, 5**20 - 1), min_size=1, max_size=5),
    st.lists(st.integers(0, 5**20 - 1), min_size=1, max_size=5),
    st.integers(0, 3),
)
def test_backend_parity(a, b, c, quad):
    M = 5**20
    terms = list(AP3)
    terms = [(coef if coef != 5**8 - 2 else M - 2, e) for coef, e in terms]
    if quad:
        terms += [(quad, (2, 0, 0)), (M - 2 * quad, (1, 1, 0)), (quad, (0, 2, 0))]
    cols = [[(x,) for x in a], [(x,) for x in b], [(x,) for x in c]]
    groups = [list(range(len(a))), list(range(len(b))), list(range(len(c)))]
    for g in (None, groups):
        py = kernels.product_max_valuation(terms, cols, M, 5, 20, g, backend="python")
        cc = kernels.product_max_valuation(terms, cols, M, 5, 20, g, backend="compiled")
        assert py == cc


@needs_compiled
def test_stop_at_parity():
    M = 5**8
    cols = [[(x,) for x in range(25)]] * 3
    py = kernels.product_max_valuation(AP3, cols, M, 5, 8, stop_at=2, backend="python")
    cc = kernels.product_max_valuation(AP3, cols, M, 5, 8, stop_at=2, backend="compiled")
    assert py == cc
    assert py[0] >= 2


def test_large_modulus_falls_back():
    M = 5**40
    terms = [(1, (1, 0, 0)), (M - 2, (0, 1, 0)), (1, (0, 0, 1))]
    cols = [[(5**30,)], [(0,)], [(0,)]]
    assert kernels.product_max_valuation(terms, cols, M, 5, 40) == (30, (0, 0, 0), 1)


def test_env_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, LOCALAVOID_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from localavoid import kernels; print(kernels.HAVE_COMPILED)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "False"
