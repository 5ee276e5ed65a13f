"""Compiled vs pure-Python enumeration kernel.

    python3 benchmarks/bench_kernels.py [--points 40] [--repeat 3]

Times ``product_max_valuation`` for the quadratically perturbed
three-term progression form over Z_5 / 5**20 on a random point grid and
checks that both backends return the same triple.
"""

import argparse
import random
import time

from localavoid import kernels


def workload(points: int, seed: int = 0):
    M = 5**20
    terms = [
        (1, (1, 0, 0)), (1, (0, 1, 0)), (M - 2, (0, 0, 1)),
        (1, (2, 0, 0)), (M - 2, (1, 1, 0)), (1, (0, 2, 0)),
    ]
    rng = random.Random(seed)
    cols = [[(rng.randrange(M),) for _ in range(points)] for _ in range(3)]
    return terms, cols, M


def best_time(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    terms, cols, M = workload(args.points)
    n = args.points**3
    print(f"tuples per call: {n}")
    py, t_py = best_time(lambda: kernels.product_max_valuation(terms, cols, M, 5, 20, backend="python"), args.repeat)
    print(f"python    {t_py:8.4f} s  {n / t_py:12.0f} tuples/s  result={py}")
    if not kernels.HAVE_COMPILED:
        print("compiled  not built (run: pip install --no-build-isolation -e .)")
        return
    cc, t_cc = best_time(lambda: kernels.product_max_valuation(terms, cols, M, 5, 20, backend="compiled"), args.repeat)
    print(f"compiled  {t_cc:8.4f} s  {n / t_cc:12.0f} tuples/s  result={cc}")
    print(f"speedup   {t_py / t_cc:8.1f}x  agree={py == cc}")


if __name__ == "__main__":
    main()
