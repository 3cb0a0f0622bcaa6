"""Benchmark the numba kernels against the pure-numpy fallback.

Run as ``python -m ringleap.bench [n]``.  Times the three hot kernels
(field interpolation, stream-derived velocity, full RK2 back-trace) on
an ``n x n`` synthetic field with both implementations and prints the
speedups.  The active implementation for library calls follows the
``RINGLEAP_NUMBA`` environment variable.
"""

import sys
import time

import numpy as np

from . import kernels


def _time(fn, *args, repeat=5):
    fn(*args)  # warm-up / JIT
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run(n=512):
    rng = np.random.default_rng(7)
    F = rng.random((n, n))
    xi = rng.random(n * n) * (n - 1)
    yi = rng.random(n * n) * (n - 1)
    out = np.empty(n * n)
    ur = np.empty(n * n)
    uz = np.empty(n * n)
    axis_uz = rng.random(n)
    hr = hz = 1.0 / n
    args_interp = (F, xi, yi, out)
    args_vel = (F, axis_uz, xi, yi, hr, hz, 3.0, ur, uz)
    xi_o = np.empty(n * n)
    yi_o = np.empty(n * n)
    args_bt = (F, axis_uz, xi, yi, hr, hz, 3.0, 1e-3, 4, xi_o, yi_o, ur, uz)

    impls = [("numpy", kernels.numpy_impl)]
    if kernels.HAVE_NUMBA:
        impls.append(("numba", kernels.numba_impl))
    else:
        print("numba unavailable; timing the numpy path only")

    rows = []
    for label, impl in impls:
        t_bil = _time(impl["bilinear"], *args_interp)
        t_cub = _time(impl["bicubic_clamped"], *args_interp)
        t_vel = _time(impl["stream_velocity"], *args_vel)
        t_bt = _time(impl["backtrace"], *args_bt)
        rows.append((label, t_bil, t_cub, t_vel, t_bt))
        print(f"{label:>6}: bilinear {t_bil * 1e3:8.2f} ms | "
              f"bicubic {t_cub * 1e3:8.2f} ms | "
              f"velocity {t_vel * 1e3:8.2f} ms | "
              f"backtrace {t_bt * 1e3:8.2f} ms")
    if len(rows) == 2:
        base, fast = rows[0], rows[1]
        ratios = [b / f for b, f in zip(base[1:], fast[1:])]
        print(f"speedup (numpy/numba): bilinear {ratios[0]:.1f}x | "
              f"bicubic {ratios[1]:.1f}x | velocity {ratios[2]:.1f}x | "
              f"backtrace {ratios[3]:.1f}x")
    print(f"active implementation for library calls: "
          f"{kernels.active_impl_name()}")
    return rows


if __name__ == "__main__":
    run(int(sys.argv[1]) if len(sys.argv) > 1 else 512)
