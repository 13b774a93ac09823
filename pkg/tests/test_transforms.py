import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import iv

from heatctl.numerics import GridSpec, SampledFunction
from heatctl.transforms import (apply_D_rhok, apply_S, apply_S_inv, apply_That, apply_That_inv,
                                apply_Tr, apply_Tr_inv, norm_H0, norm_H1, norm_HH0, norm_HH1,
                                operator_norms)
from oracles import w_ex1


def _exp_on(ctx, a=0.5):
    return SampledFunction(ctx.lam_grid(), np.exp(-a * ctx.lam))


def test_S_closed_form_example2(ctx2):
    # sigma = 3x + x^2/2, (rho k)^{1/4} = sqrt(4 + x^2)
    x = np.array([0.0, 0.5, 1.0, 2.0])
    got = apply_S(ctx2, _exp_on(ctx2, 1.0), x).values
    assert np.allclose(got, np.exp(-(3 * x + x * x / 2)) / np.sqrt(4 + x * x), atol=1e-8)


def test_S_at_origin_example1(ctx1):
    # (rho k)(0)^{1/4} = sqrt(2)
    psi = _exp_on(ctx1)
    assert apply_S(ctx1, psi, [0.0, 0.1]).values[0] == pytest.approx(1 / np.sqrt(2), rel=1e-12)


def test_S_round_trip(ctx1):
    psi = _exp_on(ctx1)
    back = apply_S_inv(ctx1, apply_S(ctx1, psi), ctx1.lam[ctx1.lam <= 10])
    assert np.max(np.abs(back.values - psi.values[ctx1.lam <= 10])) <= 1e-9


def test_Tr_round_trip(ctx1):
    g = _exp_on(ctx1)
    assert np.max(np.abs(apply_Tr_inv(ctx1, apply_Tr(ctx1, g)).values - g.values)) <= 1e-4


def test_That_round_trip(ctx1):
    g = _exp_on(ctx1)
    Z = apply_That_inv(ctx1, apply_That(ctx1, g))
    assert np.max(np.abs(Z.values - g.values)) <= 1e-4


def test_That_initial_state_closed_form(ctx1):
    # W0(x) = sqrt(2/cosh x) I1((1+2x)^{-3/2})
    W = apply_That(ctx1, _exp_on(ctx1))
    m = ctx1.lam <= 8
    assert np.max(np.abs(W.values[m] - w_ex1(W.nodes[m], 0.0))) <= 1e-4
    assert W.values[0] == pytest.approx(np.sqrt(2) * iv(1, 1.0), abs=1e-3)


def test_intertwining(ctx1):
    # (d^2 - r) Tr g = Tr g'' with g'' = g / 4
    lam = ctx1.lam
    f = apply_Tr(ctx1, _exp_on(ctx1))
    d2 = np.gradient(f.derivative(lam), lam)
    m = (lam > 0.5) & (lam < 6)
    resid = d2 - ctx1.derived.r(lam) * f.values - f.values / 4
    assert np.max(np.abs(resid[m])) <= 1e-3


def test_D_rhok_conjugation(ctx2):
    # D_rhok S psi = S psi'
    x = GridSpec.uniform(0.0, 3.0, 3001)
    lam = ctx2.derived.sigma(x.nodes)
    phi = SampledFunction(x, np.exp(-lam) / np.sqrt(4 + x.nodes ** 2))
    D = apply_D_rhok(ctx2.coeffs, phi).values
    assert np.max(np.abs(D + phi.values)) <= 1e-6


@pytest.mark.parametrize("name", ["ctx1", "ctx2"])
def test_S_is_isometry(name, request):
    ctx = request.getfixturevalue(name)
    x = GridSpec.uniform(0.0, 3.0, 3001)
    lamx = ctx.derived.sigma(x.nodes)
    phi = SampledFunction(x, np.exp(-lamx) / ctx.coeffs.rhok_quarter(x.nodes))
    lg = GridSpec.uniform(0.0, float(lamx[-1]), 20001)
    psi = SampledFunction(lg, np.exp(-lg.nodes))
    assert norm_HH0(ctx.coeffs, phi) == pytest.approx(norm_H0(psi), rel=1e-4)
    assert norm_HH1(ctx.coeffs, phi) == pytest.approx(norm_H1(psi), rel=1e-4)
    assert norm_HH1(ctx, phi) == pytest.approx(norm_H1(psi), rel=1e-4)


def test_H1_norm_of_exponential():
    # int_R (1 + 1/4) e^{-|x|} = 2.5
    g = GridSpec.uniform(0.0, 40.0, 40001)
    assert norm_H1(SampledFunction(g, np.exp(-g.nodes / 2))) == pytest.approx(np.sqrt(2.5), rel=1e-9)


def test_operator_norms(ctx1, ctx2):
    E0, E2 = operator_norms(ctx2)
    assert E0 == pytest.approx(1.0, abs=1e-10) and E2 == pytest.approx(1.0, abs=1e-10)
    E0, E2 = operator_norms(ctx1)
    assert 1.0 < E0 < 1.5 and 1.0 < E2 < 1.5
    g = _exp_on(ctx1)
    assert norm_HH1(ctx1, apply_That(ctx1, g)) <= E0 * norm_H1(g) * (1 + 1e-10)


@given(st.floats(0.3, 3.0), st.floats(-3.0, 3.0))
def test_That_linearity_and_inverse(ctx1, a, c):
    ctx = ctx1
    g = _exp_on(ctx, a)
    h = _exp_on(ctx, 1.0)
    lhs = apply_That(ctx, g.with_values(c * g.values + h.values)).values
    rhs = c * apply_That(ctx, g).values + apply_That(ctx, h).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + abs(c))
    back = apply_That_inv(ctx, apply_That(ctx, g))
    assert np.max(np.abs(back.values - g.values)) <= 1e-4
