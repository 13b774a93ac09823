import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatctl.errors import DomainError
from heatctl.heat import (ControlSignal, HeatState, boundary_trace, heat_profile,
                          solve_heat_fourier, solve_heat_line)
from heatctl.numerics import GridSpec, SampledFunction
from heatctl.transforms import apply_That, norm_H1
from oracles import w_ex1

FINE = GridSpec.uniform(0.0, 40.0, 8001)


def _gauss():
    return SampledFunction(FINE, np.exp(-FINE.nodes ** 2 / 4))


def test_gaussian_closed_form():
    # Gaussian-Gaussian convolution
    x = FINE.nodes
    for t in (0.1, 0.5, 2.0):
        Z = heat_profile(_gauss(), ControlSignal.zero(2.0), t, x)
        assert np.max(np.abs(Z - np.exp(-x ** 2 / (4 * (1 + t))) / np.sqrt(1 + t))) <= 1e-6


def test_example1_state():
    # Z0 = e^{-|x|/2}, u = -e^{t/4}/2 gives e^{-(2|x|-t)/4}
    Z0 = SampledFunction(FINE, np.exp(-FINE.nodes / 2))
    u = ControlSignal.from_function(lambda t: -0.5 * np.exp(t / 4), np.linspace(0, 1, 401))
    xs = np.linspace(0.0, 10.0, 101)
    for s in solve_heat_line(Z0, u, [0.1, 0.5, 1.0], x=xs):
        assert np.max(np.abs(s.field.values - np.exp(-(2 * xs - s.time) / 4))) <= 1e-4


def test_zero_data_gives_zero():
    Z = heat_profile(None, ControlSignal.zero(1.0), 0.7, FINE.nodes)
    assert not np.any(Z)
    F = solve_heat_fourier(None, ControlSignal.zero(1.0), 0.7, b=10.0, n=64)
    assert not np.any(F.coeffs)


def test_spectral_cross_check():
    Z0 = _gauss()
    Z = heat_profile(Z0, ControlSignal.zero(1.0), 0.5, FINE.nodes)
    F = solve_heat_fourier(Z0, ControlSignal.zero(1.0), 0.5)
    assert np.max(np.abs(Z - F(FINE.nodes))) <= 1e-6


def test_spectral_cross_check_with_control():
    g = GridSpec.uniform(0.0, 40.0, 4001)
    Z0 = SampledFunction(g, np.exp(-g.nodes ** 2 / 4))
    u = ControlSignal.from_function(lambda t: np.sin(np.pi * t) ** 2, np.linspace(0, 1, 401))
    F = solve_heat_fourier(Z0, u, 1.0)
    assert np.max(np.abs(heat_profile(Z0, u, 1.0, g.nodes) - F(g.nodes))) <= 1e-5


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 2.0))
def test_growth_bound(a, b, T):
    g = GridSpec.uniform(0.0, 30.0, 3001)
    Z0 = SampledFunction(g, np.exp(-g.nodes ** 2 / 4))
    u = ControlSignal.piecewise([0, T / 2, T], [a, b])
    bound = norm_H1(Z0) + 2 * (T + 3) / np.sqrt(np.pi) * u.sup_norm()
    for t in (T / 3, T):
        assert solve_heat_fourier(Z0, u, t).norm_H1() <= bound


def test_Z_side_trace():
    Z0 = SampledFunction(FINE, np.exp(-FINE.nodes / 2))
    u = ControlSignal.from_function(lambda t: -0.5 * np.exp(t / 4), np.linspace(0, 1, 401))
    xs = np.concatenate([np.linspace(0, 0.01, 201)[:-1], np.linspace(0.01, 10, 1000)])
    for s in solve_heat_line(Z0, u, [0.05, 0.5, 1.0], x=xs):
        assert abs(boundary_trace(s) + 0.5 * np.exp(s.time / 4)) <= 1e-2


def test_W_side_trace(ctx1):
    # D_rhok W(0+) = u_rkg: at t = 0 this is the control constant
    from oracles import CONTROL_RATIO
    x = np.concatenate([np.linspace(0, 0.01, 401)[:-1], np.linspace(0.01, 5, 2000)])
    W = HeatState("W", SampledFunction(GridSpec(x), w_ex1(x, 0.0)), 0.0)
    assert boundary_trace(W, ctx1) == pytest.approx(CONTROL_RATIO, rel=1e-3)
    with pytest.raises(DomainError):
        boundary_trace(W)


def test_semigroup():
    Z0 = _gauss()
    zero = ControlSignal.zero(1.0)
    mid = SampledFunction(Z0.grid, heat_profile(Z0, zero, 0.3, Z0.nodes))
    two = heat_profile(mid, zero, 0.4, Z0.nodes)
    assert np.max(np.abs(two - heat_profile(Z0, zero, 0.7, Z0.nodes))) <= 1e-6


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity_in_control(a, b):
    x = np.linspace(0, 5, 51)
    u1 = ControlSignal.piecewise([0, 0.5, 1.0], [1.0, 0.0])
    u2 = ControlSignal.piecewise([0, 0.5, 1.0], [0.0, 1.0])
    uc = ControlSignal.piecewise([0, 0.5, 1.0], [a, b])
    lhs = heat_profile(None, uc, 1.0, x)
    rhs = a * heat_profile(None, u1, 1.0, x) + b * heat_profile(None, u2, 1.0, x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + abs(a) + abs(b))


@given(st.floats(0.01, 5.0), st.floats(0.05, 1.0))
def test_evenness(x, t):
    u = ControlSignal.piecewise([0, 1.0], [1.0])
    assert heat_profile(_gauss(), u, t, [x])[0] == heat_profile(_gauss(), u, t, [-x])[0]


def test_t_zero_returns_initial_state():
    Z0 = _gauss()
    s = solve_heat_line(Z0, ControlSignal.zero(1.0), [0.0])[0]
    assert np.array_equal(s.field.values, Z0.values)


def test_negative_time_rejected():
    with pytest.raises(DomainError):
        heat_profile(None, ControlSignal.zero(1.0), -0.1, [0.0])


def test_control_signal_validation():
    with pytest.raises(ValueError):
        ControlSignal.piecewise([0, 1], [1.0, 2.0])
    with pytest.raises(DomainError):
        ControlSignal.sampled([0, 1], [0.0, np.inf])
