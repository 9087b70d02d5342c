"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from ulch import _pykernels

try:
    from ulch import _ckernels
except ImportError:
    _ckernels = None


def cases():
    rng = np.random.default_rng(0)
    win = np.clip(8.5 - np.abs(np.arange(-9, 10)), 0.0, 1.0)
    yield "window_sum 256x256, 19 taps", "periodic_window_sum", (rng.standard_normal((256, 256)), win)
    yield "window_sum 2304x48, 7 taps", "periodic_window_sum", (rng.standard_normal((2304, 48)), win[6:13])
    u = rng.uniform(-2, 2, 48**3)
    yield "poly f/f' 48^3, cubic", "poly_f_fprime", (u, (0.0, -1.0, 0.0, 1.0))
    yield "poly f/f' 48^3, degree 7", "poly_f_fprime", (u, (0.0, -1.0, 0.0, 0.2, 0.0, 0.1, 0.0, 0.05))
    yield "singular f/f' 48^3", "singular_f_fprime", (rng.uniform(-0.99, 0.99, 48**3), 2.0, 2.0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the fallback is available")
    print(f"{'case':34s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speed-up':>9s} {'max |diff|':>11s}")
    for label, name, a in cases():
        py = getattr(_pykernels, name)
        t_py = min(timeit.repeat(lambda: py(*a), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{label:34s} {t_py:11.3f}")
            continue
        cy = getattr(_ckernels, name)
        t_cy = min(timeit.repeat(lambda: cy(*a), number=1, repeat=args.repeat)) * 1e3
        r_py, r_cy = py(*a), cy(*a)
        r_py = r_py if isinstance(r_py, tuple) else (r_py,)
        r_cy = r_cy if isinstance(r_cy, tuple) else (r_cy,)
        diff = max(float(np.max(np.abs(x - y))) for x, y in zip(r_py, r_cy))
        print(f"{label:34s} {t_py:11.3f} {t_cy:12.3f} {t_py / t_cy:8.1f}x {diff:11.2e}")


if __name__ == "__main__":
    main()
