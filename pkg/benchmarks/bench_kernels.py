#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against the pure-Python/numpy path.

Runs each hot kernel both ways on production-sized inputs and prints a
timing table.  The compiled path is also what SOLITONLAB_DISABLE_NUMBA=1
falls back FROM, so the speedup column is the cost of running without numba.
"""

import time

import numpy as np

from solitonlab import _kernels as K
from solitonlab.radial import assemble_channel_operator, make_grid
from solitonlab.solitons import aubin_values


def timeit(fn, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    if not K.USING_NUMBA:
        print("numba path inactive (SOLITONLAB_DISABLE_NUMBA set or import "
              "failed); timing the fallback against itself is meaningless.")
        return

    g = make_grid(50.0, 4000)
    op = assemble_channel_operator(g, 0, aubin_values(1.0, g)["potential"])
    h2 = g.h ** 2
    n = g.n
    rows = []

    d = op.diagonal
    e = op.off_diagonal
    K.sturm_count(d, e, -1.0)  # compile
    t_jit = timeit(lambda: [K.sturm_count(d, e, x)
                            for x in np.linspace(-5, 5, 200)])
    t_py = timeit(lambda: [K.sturm_count_py(d, e, x)
                           for x in np.linspace(-5, 5, 200)], repeat=1)
    rows.append(("sturm_count x200 (n=4000)", t_jit, t_py))

    hd = d[:-1] * h2
    K.shoot_count(hd, 0.0)
    t_jit = timeit(lambda: [K.shoot_count(hd, x * h2)
                            for x in np.linspace(-5, 5, 200)])
    t_py = timeit(lambda: [K.shoot_count_py(hd, x * h2)
                           for x in np.linspace(-5, 5, 200)], repeat=1)
    rows.append(("shoot_count x200 (n=4000)", t_jit, t_py))

    phi = np.empty(3000)
    K.rk4_shoot(4.3, 1.0, 1.0, 3.0, 40.0 / 3000, 3000, phi)
    t_jit = timeit(lambda: [K.rk4_shoot(b, 1.0, 1.0, 3.0, 40.0 / 3000, 3000, phi)
                            for b in np.linspace(4.0, 4.6, 50)])
    t_py = timeit(lambda: [K.rk4_shoot_py(b, 1.0, 1.0, 3.0, 40.0 / 3000, 3000, phi)
                           for b in np.linspace(4.0, 4.6, 50)], repeat=1)
    rows.append(("rk4_shoot x50 (n=3000)", t_jit, t_py))

    r = g.nodes
    w_bg = r * aubin_values(1.0, g)["phi"]
    w0 = 0.01 * r * np.exp(-(r - 3.0) ** 2)
    v0 = np.zeros(n)
    dt = 0.9 * g.h
    steps = int(round(20.0 / dt))
    stride = max(1, int(round(0.25 / dt)))

    def run(fn):
        w_snap = np.zeros((steps // stride + 1, n))
        v_snap = np.zeros_like(w_snap)
        w_snap[0] = w0
        wf = np.empty(n)
        vf = np.empty(n)
        fn(w0.copy(), v0.copy(), 1.0 / r, 1.0 / r ** 4, w_bg, 1.0 / h2, dt,
           steps, stride, 1, 1e3, w_snap, v_snap, wf, vf)

    run(K.leapfrog)  # compile
    t_jit = timeit(lambda: run(K.leapfrog), repeat=3)
    t_py = timeit(lambda: run(K.leapfrog_py), repeat=3)
    rows.append((f"leapfrog t=20 ({steps} steps, n=4000)", t_jit, t_py))

    print(f"{'kernel':<38} {'numba':>10} {'fallback':>10} {'speedup':>8}")
    for name, tj, tp in rows:
        print(f"{name:<38} {tj * 1e3:>8.1f}ms {tp * 1e3:>8.1f}ms {tp / tj:>7.1f}x")


if __name__ == "__main__":
    main()
