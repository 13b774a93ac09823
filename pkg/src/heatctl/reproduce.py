"""End-to-end runs of the two worked examples with per-check verdicts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import iv

from .controlmap import (map_control_forward, map_control_inverse, verify_estimates,
                         volterra_time_grid)
from .heat import ControlSignal, boundary_trace, solve_heat_line
from .numerics import SampledFunction
from .synth import SynthesisSpec, lift_synthesis, null_target_experiment, synthesize_piecewise
from .transforms import TransformContext, apply_That, apply_Tr

# closed forms for the first example: r(l) = exp(-l)/4, Z0 = exp(-|l|/2)

def example1_control_constant() -> float:
    return float((iv(3, 1.0) - 5 * iv(1, 1.0)) / (4 * np.sqrt(2)))


def example1_kernel_boundary(x):
    """K(0, x) for r = exp(-l)/4."""
    x = np.asarray(x, float)
    z = np.sqrt(np.maximum(1 - np.exp(-x / 2), 1e-300))
    return np.exp(-x / 2) / 4 * iv(1, z) / z


def example1_transformed_initial(lam):
    """Tr applied to exp(-l/2)."""
    return 2 * iv(1, np.exp(-np.asarray(lam, float) / 2))


def example1_state(lam, t):
    return np.exp(-(2 * np.abs(lam) - t) / 4)


def example1_u110(t):
    return -0.5 * np.exp(np.asarray(t, float) / 4)


def example2_target(lam, T=0.5):
    lam = np.asarray(lam, float)
    return np.cosh(lam / np.sqrt(2 * T)) * np.exp(-lam ** 2 / (4 * T) - 0.25)


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self):
        return dict(name=self.name, value=self.value, tolerance=self.tolerance,
                    passed=self.passed, detail=self.detail)


@dataclass
class Verdict:
    example: int
    checks: list
    observations: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self):
        return {"example": self.example, "passed": self.passed, "failures": self.failures(),
                "checks": [c.to_dict() for c in self.checks], "observations": self.observations}


def _check(name, value, tol, detail=""):
    value = float(value)
    return Check(name, value, tol, bool(value <= tol), detail)


def _rel_sup(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def reproduce_example1(T: float = 1.0, h: float = 0.02, tol: float = 1e-12,
                       null_Ns=(1, 2, 4, 8)) -> Verdict:
    ctx = TransformContext.build("example1", h=h, tol=tol)
    checks = []
    obs = {}

    b = ctx.K.boundary()
    m = (b.nodes > 0) & (b.nodes <= 10)
    checks.append(_check("kernel_oracle", np.max(np.abs(b.values[m] - example1_kernel_boundary(b.nodes[m]))), 1e-4))

    lam = ctx.lam
    Z0 = SampledFunction(ctx.lam_grid(), np.exp(-lam / 2))
    TZ = apply_Tr(ctx, Z0)
    m = lam <= 6
    checks.append(_check("transform_oracle", np.max(np.abs(TZ.values[m] - example1_transformed_initial(lam[m]))), 1e-3))
    W0 = apply_That(ctx, Z0)
    checks.append(_check("initial_state_at_0", abs(W0.values[0] - np.sqrt(2) * iv(1, 1.0)), 1e-3))

    c = example1_control_constant()
    ts = volterra_time_grid(T)
    u110 = ControlSignal.from_function(example1_u110, ts)
    u_rkg = map_control_forward(ctx, u110, Z0)
    probe = np.array([0.0, T / 2, T])
    rel = np.abs(u_rkg(probe) / (c * np.exp(probe / 4)) - 1)
    checks.append(_check("control_formula", np.max(rel), 1e-3,
                         f"u_rkg(0)={u_rkg(0.0):.9f}, closed form {c:.9f}"))
    checks.append(_check("control_at_0", abs(u_rkg(0.0) - c), 5e-4))
    obs["u_rkg_over_exp"] = {f"{t:g}": float(u_rkg(t) / np.exp(t / 4)) for t in probe}

    xs = np.linspace(0.0, 20.0, 2001)
    tt = np.linspace(0.05, T, 20)
    states = solve_heat_line(Z0, u110, tt, x=xs)
    trace = max(abs(boundary_trace(s) + 0.5 * np.exp(s.time / 4)) for s in states)
    checks.append(_check("trace_identity", trace, 1e-2))
    state_err = max(np.max(np.abs(s.field.values - example1_state(xs, s.time))) for s in states)
    obs["state_error"] = float(state_err)

    u_back = map_control_inverse(ctx, u_rkg, Z0=Z0, times=ts)
    checks.append(_check("round_trip_inverse_forward", _rel_sup(u_back.values, u110(ts)), 1e-2))
    u_in = ControlSignal.from_function(example1_u110, ts)
    v = map_control_inverse(ctx, u_in, Z0=Z0, times=ts)
    u_again = map_control_forward(ctx, v, Z0, times=ts)
    checks.append(_check("round_trip_forward_inverse", _rel_sup(u_again.values, u_in.values), 1e-2))

    rep = verify_estimates(ctx, u110, u_rkg, Z0, W0, T, volterra=u_back)
    for name, item in rep.checks.items():
        checks.append(Check(f"estimate_{name}", item["lhs"], item["rhs"], item["holds"]))
    obs["constants"] = rep.constants
    obs["null_target"] = null_target_experiment(ctx, W0, T, null_Ns)
    return Verdict(1, checks, obs)


def reproduce_example2(T: float = 0.5, h: float = 0.02, tol: float = 1e-12,
                       Ns=(1, 2, 4, 8), level: int = 2) -> Verdict:
    ctx = TransformContext.build("example2", h=h, tol=tol)
    checks = []
    obs = {}
    ts = volterra_time_grid(T)

    u110 = ControlSignal.from_function(lambda t: np.ones_like(t), ts)
    fwd = map_control_forward(ctx, u110, None, times=ts)
    checks.append(_check("scaling_forward", np.max(np.abs(u110.values / fwd.values - 2)), 1e-10))
    u_rkg = ControlSignal.from_function(example1_u110, ts)
    inv = map_control_inverse(ctx, u_rkg, times=ts)
    checks.append(_check("scaling_inverse", np.max(np.abs(inv.values / u_rkg.values - 2)), 1e-10))

    WT = apply_That(ctx, SampledFunction(ctx.lam_grid(), example2_target(ctx.lam, T)))
    rz, rw = [], []
    last = None
    for N in Ns:
        spec = SynthesisSpec(N, T, lambda lam: example2_target(lam, T), level=level)
        u, ZT = synthesize_piecewise(spec)
        lifted, _, res_w = lift_synthesis(ctx, u, ZT, W_target=WT)
        rz.append(u.meta["residual"])
        rw.append(res_w)
        last = (u, lifted)
    obs["residual_Z"] = dict(zip(map(str, Ns), rz))
    obs["residual_W"] = dict(zip(map(str, Ns), rw))
    steps = np.diff(rz)
    checks.append(_check("synthesis_monotone", max(0.0, float(np.max(steps))) if steps.size else 0.0, 0.0))
    checks.append(_check("synthesis_drop", rz[-1] / rz[0], 0.5))
    steps_w = np.diff(rw)
    checks.append(_check("lifted_monotone", max(0.0, float(np.max(steps_w))) if steps_w.size else 0.0, 0.0))
    checks.append(_check("lifted_drop", rw[-1] / rw[0], 0.5))
    u, lifted = last
    checks.append(_check("lift_scaling", np.max(np.abs(lifted.values - 0.5 * u.values)), 1e-10))
    obs["amplitudes"] = [float(a) for a in u.values]

    v = map_control_inverse(ctx, lifted, times=ts)
    u_s = ControlSignal.sampled(ts, u(ts))
    rep = verify_estimates(ctx, u_s, ControlSignal.sampled(ts, lifted(ts)), None, None, T, volterra=v)
    for name, item in rep.checks.items():
        checks.append(Check(f"estimate_{name}", item["lhs"], item["rhs"], item["holds"]))
    obs["constants"] = rep.constants
    return Verdict(2, checks, obs)


def reproduce(example: int, **kw) -> Verdict:
    if example == 1:
        return reproduce_example1(**kw)
    if example == 2:
        return reproduce_example2(**kw)
    raise ValueError("example must be 1 or 2")
