"""Time the compiled and pure-numpy variants of the inner loops side by side.

Run ``python3 benchmarks/bench_kernels.py``.  Each kernel is warmed up once so
compilation is excluded; the table reports the best of ``--repeat`` runs.
"""
import argparse
import timeit

import numpy as np

from kcontract import _kernels
from kcontract.space import IndexBasis


def cases(d: int, N: int, p: int, points: int, rng: np.random.Generator):
    basis = IndexBasis(d, N)
    idx = basis.indices
    parent, direction = basis.parents
    t_star = (rng.normal(size=(d, p, p)) + 1j * rng.normal(size=(d, p, p))) / (2 * p)
    pts = 0.5 * (rng.normal(size=(points, d)) + 1j * rng.normal(size=(points, d))) / np.sqrt(d)
    a = 1.0 / np.arange(1, 4 * N + 2)
    return {
        "reciprocal_series": ((a,), "reciprocal_series"),
        "shift_targets": ((idx,), "shift_targets"),
        "monomials": ((pts, idx), "monomials"),
        "adjoint_powers": ((t_star, parent, direction), "adjoint_powers"),
    }


def best_of(fn, args, repeat: int, number: int) -> float:
    fn(*args)
    return min(timeit.repeat(lambda: fn(*args), repeat=repeat, number=number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--d", type=int, default=3)
    parser.add_argument("--N", type=int, default=12)
    parser.add_argument("--p", type=int, default=4)
    parser.add_argument("--points", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=3)
    args = parser.parse_args(argv)

    if not _kernels.USE_JIT:
        print("numba path disabled (KCONTRACT_DISABLE_JIT set or numba missing); nothing to compare")
        return 0
    rng = np.random.default_rng(0)
    print(f"d={args.d} N={args.N} basis={len(IndexBasis(args.d, args.N))} p={args.p} points={args.points}")
    print(f"{'kernel':<20}{'numpy [ms]':>14}{'numba [ms]':>14}{'speedup':>10}")
    for name, (call_args, attr) in cases(args.d, args.N, args.p, args.points, rng).items():
        py = getattr(_kernels, f"{attr}_py")
        jit = getattr(_kernels, attr)
        np.testing.assert_allclose(jit(*call_args), py(*call_args), rtol=1e-10, atol=1e-12)
        t_py = best_of(py, call_args, args.repeat, args.number)
        t_jit = best_of(jit, call_args, args.repeat, args.number)
        print(f"{name:<20}{1e3 * t_py:>14.3f}{1e3 * t_jit:>14.3f}{t_py / t_jit:>10.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
