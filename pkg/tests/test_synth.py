import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatctl.errors import DegenerateGridError, DependencyError
from heatctl.heat import ControlSignal, HeatState, heat_profile
from heatctl.numerics import GridSpec, SampledFunction
from heatctl.reproduce import example2_target
from heatctl.synth import (SynthesisSpec, lift_synthesis, null_target_experiment,
                           synthesize_piecewise, terminal_residual)
from heatctl.transforms import apply_That, apply_That_inv, operator_norms

T = 0.5


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_recovers_known_amplitudes(amps):
    breaks = np.linspace(0, T, 4)
    u = ControlSignal.piecewise(breaks, amps)
    spec = SynthesisSpec(3, T, lambda x: heat_profile(None, u, T, x), level=1)
    got, _ = synthesize_piecewise(spec)
    assert np.max(np.abs(got.values - np.asarray(amps))) <= 1e-6
    assert got.meta["residual"] <= 1e-8


def test_zero_target_gives_zero_control():
    got, Z = synthesize_piecewise(SynthesisSpec(4, T, lambda x: np.zeros_like(x), level=1))
    assert not np.any(got.values) and got.meta["residual"] == 0.0


def test_residual_non_increasing_over_nested_partitions():
    res = [synthesize_piecewise(SynthesisSpec(N, T, lambda x: example2_target(x, T)))[0]
           .meta["residual"] for N in (1, 2, 4, 8)]
    assert all(b <= a for a, b in zip(res, res[1:]))
    assert res[-1] <= 0.5 * res[0]


def test_regularization_shrinks_amplitudes():
    tgt = lambda x: example2_target(x, T)
    a0, _ = synthesize_piecewise(SynthesisSpec(4, T, tgt))
    a1, _ = synthesize_piecewise(SynthesisSpec(4, T, tgt, mu=1e-2))
    assert np.linalg.norm(a1.values) < np.linalg.norm(a0.values)
    assert a1.meta["residual"] >= a0.meta["residual"]


def test_lifted_residual_bounded_by_transfer(ctx1):
    # W residual <= E0 * Z residual for the pulled-back target
    lam = ctx1.lam
    Zt = SampledFunction(ctx1.lam_grid(), np.exp(-lam / 2) * (1 + lam) * 0.3)
    Wt = apply_That(ctx1, Zt)
    E0, _ = operator_norms(ctx1)
    spec = SynthesisSpec(4, 1.0, Wt, side="W")
    u, Z_T = synthesize_piecewise(spec, ctx=ctx1)
    assert Z_T.field.nodes.size == lam.size
    _, W, res_w = lift_synthesis(ctx1, u, Z_T, W_target=Wt)
    assert res_w <= E0 * u.meta["residual"] * (1 + 1e-8)


def test_W_target_needs_context():
    with pytest.raises(DependencyError):
        synthesize_piecewise(SynthesisSpec(2, T, lambda x: x, side="W"))


def test_W_target_pullback(ctx1):
    lam = ctx1.lam
    Zt = SampledFunction(ctx1.lam_grid(), np.exp(-lam / 2))
    Wt = apply_That(ctx1, Zt)
    back = apply_That_inv(ctx1, Wt)
    assert np.max(np.abs(back.values - Zt.values)) <= 1e-4


def test_lift_scales_for_example2(ctx2):
    u, Z_T = synthesize_piecewise(SynthesisSpec(4, T, lambda x: example2_target(x, T)))
    lifted, W, _ = lift_synthesis(ctx2, u, Z_T)
    assert np.allclose(lifted.values, 0.5 * u.values, rtol=0, atol=1e-12)
    assert W.side == "W"


def test_terminal_residual_of_exponential():
    # ||e^{-|x|/2}||_1 = sqrt(2.5)
    g = GridSpec.uniform(0.0, 40.0, 40001)
    Z = HeatState("Z", SampledFunction(g, np.exp(-g.nodes / 2)), T)
    assert terminal_residual(Z, lambda x: np.zeros_like(x)) == pytest.approx(np.sqrt(2.5), rel=1e-9)


def test_terminal_residual_grid_mismatch():
    a = HeatState("Z", SampledFunction(GridSpec.uniform(0, 1, 11), np.zeros(11)), T)
    b = SampledFunction(GridSpec.uniform(0, 1, 21), np.zeros(21))
    with pytest.raises(DegenerateGridError):
        terminal_residual(a, b)
    with pytest.raises(DegenerateGridError):
        terminal_residual(a, HeatState("W", a.field, T))


def test_spec_validation():
    for bad in (dict(N=0), dict(T=0.0), dict(mu=-1.0), dict(side="Q")):
        kw = dict(N=2, T=T, target=np.zeros_like) | bad
        with pytest.raises(ValueError):
            SynthesisSpec(**kw)


def test_null_target_rows(ctx2):
    W0 = SampledFunction(ctx2.x_grid(), np.exp(-ctx2.x))
    rows = null_target_experiment(ctx2, W0, T, Ns=(1, 2), level=0)
    assert [r["N"] for r in rows] == [1, 2]
    assert all(r["residual_W"] >= 0 for r in rows)
