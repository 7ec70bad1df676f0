"""Time the compiled decision kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from optagg import _kernels_py as py

try:
    from optagg import _ckernels as cy
except ImportError:  # extension not built
    cy = None


def _qam16():
    lv = np.array([-3, -1, 1, 3], dtype=float)
    pts = (lv[:, None] + 1j * lv[None, :]).ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def cases(n, rng):
    pts = _qam16()
    sym = rng.choice(pts, n) + 0.05 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    phases = np.linspace(-np.pi / 4, np.pi / 4, 64, endpoint=False)
    vals = rng.standard_normal(n)
    tidx = rng.integers(0, 48, n)
    return {
        "nearest_points": lambda m: m.nearest_points(sym, pts),
        "phase_search_mse": lambda m: m.phase_search_mse(sym[: n // 10], pts, phases),
        "eye_histogram": lambda m: m.eye_histogram(vals, tidx, 48, -4.0, 4.0, 256),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-12)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18} {'python ms':>10} {'cython ms':>10} {'speedup':>8}  agree")
    for name, fn in cases(args.n, rng).items():
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:<18} {tp:10.2f} {'n/a':>10} {'n/a':>8}  -")
            continue
        tc = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        ok = _same(fn(py), fn(cy))
        print(f"{name:<18} {tp:10.2f} {tc:10.2f} {tp / tc:7.1f}x  {'yes' if ok else 'NO'}")


if __name__ == "__main__":
    main()
