"""Control maps between the constant- and variable-coefficient systems.

Forward (explicit):

    u_rkg(t) = (rho k)(0)^{-1/4} [u110(t) + int_0^inf K_{y1}(0,x) Z(x,t) dx - Z(0+,t)/2 int r]

Inverse: u110 solves v = f + int_0^t v(s) P(t-s) ds with P(s) = p(s)/sqrt(pi s),

    f(t) = (rho k)(0)^{1/4} u_rkg(t) + (int r)/2 (G_t*Z0)(0) - int K_{y1}(0,x) (G_t*Z0)(x) dx
    p(s) = int_0^inf K_{y1}(0,x) exp(-x^2/(4s)) dx - (int r)/2
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_triangular

from . import _accel
from .errors import ConvergenceError, DependencyError
from .heat import ControlSignal, heat_profile, solve_heat_line
from .numerics import GridSpec, SampledFunction, sqrt_weights
from .transforms import (TransformContext, apply_That, apply_That_inv, apply_Tr,
                         norm_H1, norm_HH1, operator_norms)

GEOM_RATIO = 1.15
FIRST_STEP = 1e-5
UNIFORM_STEPS = 200
P_TABLE_SIZE = 401


def volterra_time_grid(T: float, first: float = FIRST_STEP, ratio: float = GEOM_RATIO,
                       steps: int = UNIFORM_STEPS) -> np.ndarray:
    """Geometric steps from ``first * T`` up to T/steps, then uniform."""
    return GridSpec.geometric(0.0, T, first * T, ratio, T / steps).nodes


def _require(ctx):
    if ctx is None or ctx.K is None:
        raise DependencyError("a solved kernel context is required")


def _kernel_integral(ctx: TransformContext, Zx: np.ndarray) -> float:
    dK = ctx.dK
    return float(simpson(dK.values * Zx, x=dK.nodes))


def map_control_forward(ctx: TransformContext, u110: ControlSignal,
                        Z0: Optional[SampledFunction] = None, times=None,
                        states: Optional[list] = None) -> ControlSignal:
    """u_rkg on ``times`` (default: the control's own nodes).

    The states Z(., t) are either solved here from ``Z0`` and ``u110`` or
    passed in as ``states`` (HeatState list aligned with ``times``).
    """
    _require(ctx)
    d = ctx.derived
    if times is None:
        times = states and [s.time for s in states]
    if times is None or len(times) == 0:
        times = u110.times
    times = np.asarray(times, float)
    xk = ctx.dK.nodes
    out = np.empty(times.size)
    for n, t in enumerate(times):
        if states is not None:
            f = states[n].field
            inside = xk <= f.grid.b
            Zx = np.zeros(xk.size)
            Zx[inside] = f(xk[inside])
        else:
            Zx = heat_profile(Z0, u110, float(t), xk)
        integral = 0.0 if ctx.K.is_zero else _kernel_integral(ctx, Zx)
        out[n] = (float(u110(t)) + integral - 0.5 * Zx[0] * d.int_r) / d.rhok_0_quarter
    return ControlSignal.sampled(times, out, T=u110.T)


@dataclass
class VolterraProblem:
    """v = f + int_0^t v(s) P(t - s) ds on ``times``, P(s) = ptilde(s)/sqrt(pi s)."""

    times: np.ndarray
    f: np.ndarray
    ptilde: Callable
    N0: float
    N1: float
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @classmethod
    def from_functions(cls, f: Callable, ptilde: Callable, T: float, times=None):
        times = volterra_time_grid(T) if times is None else np.asarray(times, float)
        fv = np.asarray(f(times), float) * np.ones(times.size)
        pv = np.asarray(ptilde(times), float) * np.ones(times.size)
        return cls(times, fv, ptilde, float(np.max(np.abs(fv))), float(np.max(np.abs(pv))))

    def weights(self) -> np.ndarray:
        """Product-integration matrix: row n integrates against the
        piecewise-linear interpolant of ptilde(t_n - s) v(s)."""
        t = self.times
        n = t.size
        Wm = np.zeros((n, n))
        for i in range(1, n):
            w = sqrt_weights(t[: i + 1], t[i])
            s = t[i] - t[: i + 1]
            Wm[i, : i + 1] = w * np.asarray(self.ptilde(s), float) / np.sqrt(np.pi)
        return Wm

    def gronwall_bound(self) -> float:
        T = self.T
        return self.N0 * (1 + 2 * self.N1 * np.sqrt(T / np.pi) * np.exp(self.N1 ** 2 * T))


def _ptilde_table(ctx: TransformContext, T: float):
    d = ctx.derived
    base = -0.5 * d.int_r
    if ctx.K.is_zero:
        return lambda s: np.full(np.shape(s), base)
    dK = ctx.dK
    rs = np.linspace(0.0, np.sqrt(T), P_TABLE_SIZE)
    vals = np.empty(rs.size)
    vals[0] = base
    zero = np.zeros(1)
    for i, r in enumerate(rs[1:], start=1):
        s = r * r
        conv = _accel.gauss_conv_even(zero, dK.nodes, dK.values, s)[0]
        vals[i] = np.sqrt(np.pi * s) * conv + base
    spline = CubicSpline(rs, vals)
    return lambda s: spline(np.sqrt(np.clip(s, 0.0, T)))


def build_volterra_problem(ctx: TransformContext, u_rkg: ControlSignal,
                           Z0: Optional[SampledFunction], times=None) -> VolterraProblem:
    """Assemble f and P for the inverse map; Z0 lives on the constant side."""
    _require(ctx)
    d = ctx.derived
    T = u_rkg.T
    times = volterra_time_grid(T) if times is None else np.asarray(times, float)
    f = d.rhok_0_quarter * u_rkg(times)
    if Z0 is not None and np.any(Z0.values):
        xk = ctx.dK.nodes
        zero_control = ControlSignal.zero(T)
        for n, t in enumerate(times):
            g0 = heat_profile(Z0, zero_control, float(t), np.zeros(1))[0]
            term = 0.5 * d.int_r * g0
            if not ctx.K.is_zero:
                gx = heat_profile(Z0, zero_control, float(t), xk)
                term -= _kernel_integral(ctx, gx)
            f[n] += term
    ptilde = _ptilde_table(ctx, T)
    pv = np.asarray(ptilde(times), float) * np.ones(times.size)
    N1_bound = d.sigma0_0 + 2 * ctx.bounds.M1 * d.R
    meta = {"N1_bound": N1_bound}
    return VolterraProblem(times, f, ptilde, float(np.max(np.abs(f))),
                           float(np.max(np.abs(pv))), meta)


def solve_volterra(p: VolterraProblem, tol: float = 1e-12, max_iter: int = 500) -> ControlSignal:
    """Successive approximations v_{k+1} = f + W v_k."""
    Wm = p.weights()
    v = p.f.copy()
    history = []
    if np.any(Wm):
        for _ in range(max_iter):
            vn = p.f + Wm @ v
            change = float(np.max(np.abs(vn - v)))
            history.append(change)
            v = vn
            if change < tol * (1 + np.max(np.abs(v))):
                break
            if not np.isfinite(change) or change > 1e12 * (1 + p.N0):
                raise ConvergenceError("successive approximations diverged", change, history)
        else:
            raise ConvergenceError(f"no convergence to {tol:g} in {max_iter} sweeps",
                                   history[-1], history)
    bound = p.gronwall_bound()
    sup = float(np.max(np.abs(v)))
    return ControlSignal.sampled(p.times, v, iterations=len(history), history=history,
                                 gronwall_bound=bound, gronwall_ok=bool(sup <= bound))


def solve_volterra_marching(p: VolterraProblem) -> ControlSignal:
    """Direct forward substitution of (I - W) v = f."""
    Wm = p.weights()
    v = solve_triangular(np.eye(p.times.size) - Wm, p.f, lower=True)
    return ControlSignal.sampled(p.times, v)


def map_control_inverse(ctx: TransformContext, u_rkg: ControlSignal,
                        W0: Optional[SampledFunction] = None,
                        Z0: Optional[SampledFunction] = None, times=None,
                        tol: float = 1e-12) -> ControlSignal:
    """u110 from u_rkg; the initial state is W0 (variable side) or Z0."""
    _require(ctx)
    if Z0 is None and W0 is not None and np.any(W0.values):
        Z0 = apply_That_inv(ctx, W0)
    problem = build_volterra_problem(ctx, u_rkg, Z0, times)
    u = solve_volterra(problem, tol)
    u.meta.update(N0=problem.N0, N1=problem.N1, N1_bound=problem.meta["N1_bound"])
    return u


@dataclass
class EstimateReport:
    constants: dict
    checks: dict
    notes: list

    @property
    def all_hold(self) -> bool:
        return all(c["holds"] for c in self.checks.values())

    def to_dict(self):
        return {"constants": self.constants, "checks": self.checks, "notes": self.notes,
                "all_hold": self.all_hold}


def growth_constants(ctx: TransformContext, T: float) -> dict:
    d = ctx.derived
    s0, R, R0, M1 = d.sigma0_0, d.R, d.R0, ctx.bounds.M1
    q = d.rhok_0_quarter
    root = np.sqrt(s0 * (R0 + M1 ** 2 * R))
    G0 = (1 + (T + 3) * (2 * np.sqrt(s0) / np.sqrt(np.pi) * np.sqrt(R0 + M1 ** 2 * R)
                         + s0 / np.sqrt(2 * np.pi))) / q
    N = s0 + 2 * M1 * R
    G1 = q * np.exp(N ** 2 * T) * (1 + 2 * np.sqrt(T / np.pi) * N)
    E0, E2 = operator_norms(ctx)
    E1 = (root + s0 / (2 * np.sqrt(2))) / q
    E3 = E2 * (s0 / (2 * np.sqrt(2)) + root) / q
    return dict(G0=float(G0), G1=float(G1), E0=E0, E1=float(E1), E2=E2, E3=float(E3),
                M1=M1, sigma0_0=s0, R=R, R0=R0, rhok_0_quarter=q)


def _check(lhs, rhs):
    return {"lhs": float(lhs), "rhs": float(rhs), "holds": bool(lhs <= rhs * (1 + 1e-12)),
            "margin": float(rhs - lhs)}


def verify_estimates(ctx: TransformContext, u110: ControlSignal, u_rkg: ControlSignal,
                     Z0: Optional[SampledFunction], W0: Optional[SampledFunction],
                     T: Optional[float] = None, n_times: int = 11,
                     volterra: Optional[ControlSignal] = None) -> EstimateReport:
    """Evaluate both sides of the growth and control estimates."""
    T = u110.T if T is None else T
    C = growth_constants(ctx, T)
    lam_grid = ctx.lam_grid()
    if Z0 is None:
        Z0 = SampledFunction(lam_grid, np.zeros(lam_grid.size))
    if W0 is None:
        W0 = apply_That(ctx, Z0)
    nZ0 = norm_H1(Z0)
    nW0 = norm_HH1(ctx, W0)
    u_sup = u110.sup_norm()
    checks = {}
    ts = np.linspace(0.0, T, n_times)
    states = solve_heat_line(Z0, u110, ts, x=lam_grid.nodes)
    worst = max(norm_H1(s.field) for s in states)
    checks["state_growth"] = _check(worst, nZ0 + 2 * (T + 3) / np.sqrt(np.pi) * u_sup)
    checks["forward_control"] = _check(u_rkg.sup_norm(), C["G0"] * u_sup + C["E1"] * nZ0)
    checks["inverse_control"] = _check(u_sup, C["G1"] * (u_rkg.sup_norm() + C["E3"] * nW0))
    if volterra is not None:
        checks["volterra_gronwall"] = _check(volterra.sup_norm(), volterra.meta["gronwall_bound"])
    notes = ["E0 and E2 are discrete operator norms of That and its inverse on the "
             "context grid; E1 and E3 follow from them and the kernel constants"]
    return EstimateReport(C, checks, notes)
