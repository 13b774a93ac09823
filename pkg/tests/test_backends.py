import os
import subprocess
import sys

import numpy as np
import pytest

from heatctl import _jit, _ref
from heatctl.kernels import solve_goursat_K


@pytest.fixture(scope="module")
def K():
    return solve_goursat_K(lambda s: 0.25 * np.exp(-s), 6.0, h=0.05)


def test_goursat_sweep_agrees(K):
    u0 = K.U[:, 0].copy()
    assert np.allclose(_jit.goursat_sweep(K.U, K.rt, u0, K.h),
                       _ref.goursat_sweep(K.U, K.rt, u0, K.h), rtol=0, atol=1e-14)


def test_L_solve_agrees(K):
    assert np.allclose(_jit.solve_l_offsets(K.U, 2 * K.h), _ref.solve_l_offsets(K.U, 2 * K.h),
                       rtol=0, atol=1e-14)


def test_heat_kernels_agree():
    xs = np.linspace(0.0, 8.0, 81)
    nodes = np.linspace(0.0, 12.0, 241)
    vals = np.exp(-nodes / 2)
    tn = np.linspace(0.0, 0.7, 36)
    un = np.cos(3 * tn)
    breaks = np.linspace(0.0, 0.5, 6)
    amps = np.array([1.0, -2.0, 0.5, 3.0, -1.0])
    for t in (1e-6, 0.3, 0.7):
        assert np.allclose(_jit.gauss_conv_even(xs, nodes, vals, t),
                           _ref.gauss_conv_even(xs, nodes, vals, t), rtol=1e-12, atol=1e-14)
    assert np.allclose(_jit.heat_control_linear(xs, tn, un, 0.7),
                       _ref.heat_control_linear(xs, tn, un, 0.7), rtol=1e-12, atol=1e-14)
    assert np.allclose(_jit.heat_control_pc(xs, breaks, amps, 0.5),
                       _ref.heat_control_pc(xs, breaks, amps, 0.5), rtol=1e-12, atol=1e-14)


def _backend_of(value):
    env = dict(os.environ, HEATCTL_BACKEND=value)
    return subprocess.run([sys.executable, "-c", "import heatctl; print(heatctl.BACKEND)"],
                          capture_output=True, text=True, env=env)


def test_env_selects_backend():
    assert _backend_of("numpy").stdout.strip() == "numpy"
    assert _backend_of("numba").stdout.strip() == "numba"


def test_env_rejects_unknown_backend():
    r = _backend_of("fortran")
    assert r.returncode != 0 and "HEATCTL_BACKEND" in r.stderr
