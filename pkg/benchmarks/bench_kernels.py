"""Time the compiled kernels against the pure-Python fallback.

Run from the repository root after building the extension::

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from cubesat_battery.kernels import _pykernels

try:
    from cubesat_battery.kernels import _ckernels
except ImportError:
    _ckernels = None
from cubesat_battery.regpath.poly import PolySpec


def _cases(rng):
    n = 200_000
    t = np.cumsum(rng.uniform(5.0, 15.0, n))
    i = rng.uniform(0.0, 500.0, n)
    spec = PolySpec(3, 8)
    X = rng.random((5000, 3))
    A = rng.normal(size=(400, 60))
    A -= A.mean(axis=0)
    A /= np.linalg.norm(A, axis=0)
    y = A[:, :8] @ rng.normal(size=8) + 0.1 * rng.normal(size=400)
    G, q, yy = A.T @ A, A.T @ y, float(y @ y)
    alpha = 0.05 * np.abs(q).max()
    beta0 = np.zeros(A.shape[1])
    return {
        "cumulative_dod (200k samples)": lambda k: k.cumulative_dod(t, i),
        "poly_columns (5000 x 165)": lambda k: k.poly_columns(X, spec._parents, spec._features),
        "lasso_cd_gram (p = 60)": lambda k: k.lasso_cd_gram(G, q, yy, alpha, beta0, 10_000, 1e-10, 1e-14),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':<32}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, call in cases.items():
        py = min(timeit.repeat(lambda: call(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:<32}{py:>12.3f}{'n/a':>12}{'':>10}")
            continue
        cy = min(timeit.repeat(lambda: call(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<32}{py:>12.3f}{cy:>12.3f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
