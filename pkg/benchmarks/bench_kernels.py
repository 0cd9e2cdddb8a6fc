"""Time the compiled kernels against the NumPy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from pxlap import _pykernels

try:
    from pxlap import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(rng):
    u1 = rng.standard_normal((4097, 1))
    u2 = rng.standard_normal((257, 257, 2))
    g2 = rng.standard_normal((256, 256, 2, 2))
    gsq = rng.random(256 * 256)
    p = 2.0 + rng.random(256 * 256)
    m = 4095
    lo, up = -np.ones(m - 1), -np.ones(m - 1)
    diag, rhs = 4.0 + rng.random(m), rng.standard_normal(m)
    return {
        "grad_1d (4096 cells)": lambda k: k.grad_1d(u1, 1.0 / 4096),
        "grad_2d (256^2 cells, N=2)": lambda k: k.grad_2d(u2, 1.0 / 256, 1.0 / 256),
        "grad_t_2d (256^2 cells, N=2)": lambda k: k.grad_t_2d(g2, 1.0 / 256, 1.0 / 256),
        "coefficients (65536)": lambda k: k.coefficients(gsq, p, 0.1),
        "thomas (4095)": lambda k: k.thomas(lo, diag, up, rhs),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = [("numpy", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'kernel':32s}" + "".join(f"{name:>12s}" for name, _ in backends) + "    speedup")
    for label, fn in cases(rng).items():
        times = []
        for _, mod in backends:
            fn(mod)
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        row = f"{label:32s}" + "".join(f"{1e3 * t:10.3f}ms" for t in times)
        if len(times) == 2:
            row += f"   {times[0] / times[1]:7.2f}x"
        print(row)


if __name__ == "__main__":
    main()
