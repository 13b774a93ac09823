"""Time the numba and numpy backends of the hot kernels on Example 1 sizes.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from heatctl import _jit, _ref
from heatctl.coeffs import derive, preset
from heatctl.kernels import DEFAULT_H, solve_goursat_K


def _best(fn, repeat):
    fn()  # warm-up (compiles the numba twin)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    d = derive(preset("example1"))
    K = solve_goursat_K(d.r_samples, d.Lambda_max)
    h = DEFAULT_H
    n = K.N + 1
    rt = K.rt
    u0 = K.U[:, 0].copy()
    xs = np.linspace(0.0, 20.0, 2001)
    nodes = np.linspace(0.0, 21.0, 526)
    vals = np.exp(-nodes / 2)
    tn = np.linspace(0.0, 1.0, 401)
    un = -0.5 * np.exp(tn / 4)
    breaks = np.linspace(0.0, 0.5, 9)
    amps = np.linspace(-1.0, 1.0, 8)
    return {
        f"goursat_sweep n={n}": lambda m: m.goursat_sweep(K.U, rt, u0, h),
        f"solve_l_offsets n={n}": lambda m: m.solve_l_offsets(K.U, 2 * h),
        "gauss_conv_even 2001x526": lambda m: m.gauss_conv_even(xs, nodes, vals, 0.5),
        "heat_control_linear 2001x401": lambda m: m.heat_control_linear(xs, tn, un, 1.0),
        "heat_control_pc 2001x8": lambda m: m.heat_control_pc(xs, breaks, amps, 0.5),
    }


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    print(f"{'kernel':32s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, call in cases().items():
        tj = _best(lambda: call(_jit), args.repeat)
        tr = _best(lambda: call(_ref), args.repeat)
        print(f"{name:32s} {tj:10.4f} {tr:10.4f} {tr / tj:8.1f}")


if __name__ == "__main__":
    main()
