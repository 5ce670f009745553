"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--n N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from weylscope import _kernels


def inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, 3, 3))
    a = a + a.transpose(0, 2, 1)
    b = rng.standard_normal((n, 4, 4))
    g = b @ b.transpose(0, 2, 1) + 4.0 * np.eye(4)
    gamma = rng.standard_normal((n, 4, 4, 4))
    gamma = gamma + gamma.transpose(0, 1, 3, 2)
    dgamma = rng.standard_normal((n, 4, 4, 4, 4))
    dgamma = dgamma + dgamma.transpose(0, 1, 2, 4, 3)
    return a, (g, gamma, dgamma)


def run(n=2000, repeat=5):
    """Return ``{kernel: {backend: best seconds}}`` and the max backend disagreement."""
    a, rargs = inputs(n)
    cases = {
        "jacobi_eigh3": lambda b: _kernels.jacobi_eigh3(a, backend=b),
        "riemann_lower": lambda b: _kernels.riemann_lower(*rargs, backend=b),
    }
    timings, diff = {}, 0.0
    for kernel, fn in cases.items():
        timings[kernel] = {}
        results = {}
        for backend in sorted(_kernels.BACKENDS):
            results[backend] = fn(backend)
            timings[kernel][backend] = min(timeit.repeat(lambda: fn(backend), number=1, repeat=repeat))
        if len(results) == 2:
            x, y = (np.asarray(r[0] if isinstance(r, tuple) else r) for r in results.values())
            diff = max(diff, float(np.abs(x - y).max()))
    return timings, diff


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    timings, diff = run(args.n, args.repeat)
    print(f"batch size {args.n}, best of {args.repeat}; active backend: {_kernels.BACKEND}")
    for kernel, row in timings.items():
        cells = "  ".join(f"{b}: {t * 1e3:8.2f} ms" for b, t in row.items())
        speed = row["python"] / row["compiled"] if "compiled" in row else float("nan")
        print(f"{kernel:14s} {cells}  speedup x{speed:.1f}")
    print(f"max backend disagreement {diff:.2e}")


if __name__ == "__main__":
    main()
