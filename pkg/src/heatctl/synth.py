"""Piecewise-constant control synthesis for the constant-coefficient system,
lifting to the variable-coefficient system and terminal residuals."""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .controlmap import map_control_forward
from .errors import ConditioningWarning, DegenerateGridError, DependencyError
from .heat import SIDE_W, SIDE_Z, ControlSignal, HeatState, heat_profile
from .numerics import GridSpec, SampledFunction
from .transforms import (TransformContext, apply_That, apply_That_inv, norm_H1,
                         norm_HH1)

log = logging.getLogger(__name__)

COND_WARN = 1e12


@dataclass
class SynthesisSpec:
    """N control intervals on [0, T] steering toward ``target``.

    ``target`` is a callable of lambda (Z side) or x (W side) or a
    SampledFunction. ``level`` sets the residual grid to 32 * 2**level nodes
    per unit on [0, length].
    """

    N: int
    T: float
    target: Union[Callable, SampledFunction]
    mu: float = 0.0
    side: str = SIDE_Z
    length: float = 12.0
    level: int = 2

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.side not in (SIDE_Z, SIDE_W):
            raise ValueError(f"side must be {SIDE_Z!r} or {SIDE_W!r}")

    @property
    def breaks(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)

    def grid(self) -> GridSpec:
        return GridSpec.uniform(0.0, self.length, int(round(32 * 2 ** self.level * self.length)) + 1)


def _sample(target, grid: GridSpec) -> np.ndarray:
    if isinstance(target, SampledFunction):
        x = grid.nodes
        out = np.zeros(x.size)
        inside = x <= target.grid.b
        out[inside] = target(x[inside])
        return out
    return np.asarray(target(grid.nodes), float) * np.ones(grid.size)


def _h1_rows(grid: GridSpec, cols: np.ndarray) -> np.ndarray:
    """Rows R with |R c| = norm_H1 of the grid function c (column-wise)."""
    x = grid.nodes
    w = np.sqrt(2.0 * simpson(np.eye(x.size), x=x, axis=0))
    d = CubicSpline(x, cols, axis=0)(x, 1)
    return np.vstack([w[:, None] * cols, w[:, None] * d])


def _z_target(spec: SynthesisSpec, ctx: Optional[TransformContext]):
    if spec.side == SIDE_Z:
        grid = spec.grid()
        return grid, _sample(spec.target, grid)
    if ctx is None:
        raise DependencyError("a W-side target needs a transform context")
    xg = ctx.x_grid()
    W = SampledFunction(xg, _sample(spec.target, xg))
    Z = apply_That_inv(ctx, W)
    return Z.grid, Z.values


def synthesize_piecewise(spec: SynthesisSpec, Z0: Optional[SampledFunction] = None,
                         ctx: Optional[TransformContext] = None):
    """Least-squares amplitudes for N equal intervals.

    Minimizes ||Z^T - Z(., T)||_1^2 + mu |a|^2 over the grid; returns the
    control and the achieved terminal state.
    """
    grid, target = _z_target(spec, ctx)
    x = grid.nodes
    T = spec.T
    breaks = spec.breaks
    free = heat_profile(Z0, ControlSignal.zero(T), T, x)

    def column(p):
        amps = np.zeros(spec.N)
        amps[p] = 1.0
        return heat_profile(None, ControlSignal.piecewise(breaks, amps), T, x)

    with ThreadPoolExecutor() as pool:
        cols = np.column_stack(list(pool.map(column, range(spec.N))))
    A = _h1_rows(grid, cols)
    b = _h1_rows(grid, (target - free)[:, None])[:, 0]
    if spec.mu > 0:
        A = np.vstack([A, np.sqrt(spec.mu) * np.eye(spec.N)])
        b = np.concatenate([b, np.zeros(spec.N)])
    amps, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if cond > COND_WARN or rank < spec.N:
        warnings.warn(f"least-squares system is ill conditioned (cond {cond:.3g})",
                      ConditioningWarning, stacklevel=2)
    achieved = SampledFunction(grid, free + cols @ amps)
    residual = norm_H1(achieved.with_values(target - achieved.values))
    u = ControlSignal.piecewise(breaks, amps, residual=residual, cond=cond, level=spec.level)
    return u, HeatState(SIDE_Z, achieved, T)


def _lift_times(u: ControlSignal, per_interval: int) -> np.ndarray:
    if u.kind == "sampled":
        return u.times
    parts = []
    for a, b in zip(u.times[:-1], u.times[1:]):
        pts = np.linspace(a, b, per_interval + 1)[:-1]
        parts.append(np.append(pts, b - 1e-9 * (b - a)))
    parts.append([u.T])
    return np.concatenate(parts)


def lift_synthesis(ctx: TransformContext, u110: ControlSignal, Z_T: HeatState,
                   Z0: Optional[SampledFunction] = None, W_target=None,
                   per_interval: int = 8):
    """Variable-coefficient control and terminal state W(., T) = That Z(., T).

    Returns (u_rkg, W state, residual) with the residual measured against
    ``W_target`` (a callable of x or SampledFunction) when given.
    """
    if ctx.K.is_zero and not ctx.derived.int_r:
        u_rkg = u110.scaled(1.0 / ctx.derived.rhok_0_quarter)
    else:
        u_rkg = map_control_forward(ctx, u110, Z0, times=_lift_times(u110, per_interval))
    W = apply_That(ctx, Z_T.field)
    state = HeatState(SIDE_W, W, Z_T.time)
    residual = None
    if W_target is not None:
        target = HeatState(SIDE_W, W.with_values(_sample(W_target, W.grid)), Z_T.time)
        residual = terminal_residual(state, target, ctx)
    return u_rkg, state, residual


def terminal_residual(achieved: HeatState, target, ctx=None) -> float:
    """Norm of achieved - target: H1 on the Z side, weighted on the W side."""
    f = achieved.field
    if isinstance(target, HeatState):
        if target.side != achieved.side:
            raise DegenerateGridError("states live on different sides")
        target = target.field
    if isinstance(target, SampledFunction):
        if target.grid.size != f.grid.size or not np.allclose(target.nodes, f.nodes,
                                                                 rtol=1e-12, atol=1e-14):
            raise DegenerateGridError("residual needs both states on the same grid")
        tv = target.values
    else:
        tv = _sample(target, f.grid)
    diff = f.with_values(f.values - tv)
    if achieved.side == SIDE_Z:
        return norm_H1(diff)
    if ctx is None:
        raise DependencyError("a W-side residual needs coefficients or a context")
    return norm_HH1(ctx, diff)


def null_target_experiment(ctx: TransformContext, W0: SampledFunction, T: float,
                           Ns=(1, 2, 4, 8), level: int = 2) -> list:
    """Residuals of synthesized controls steering W0 toward 0 (observation only)."""
    Z0 = apply_That_inv(ctx, W0)
    rows = []
    for N in Ns:
        spec = SynthesisSpec(N, T, lambda lam: np.zeros_like(lam), level=level,
                             length=float(Z0.grid.b))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConditioningWarning)
            u, Z_T = synthesize_piecewise(spec, Z0)
        W = apply_That(ctx, Z_T.field)
        rows.append({"N": N, "residual_Z": u.meta["residual"],
                     "residual_W": norm_HH1(ctx, W)})
        log.info("null target N=%d residual_Z=%.6g residual_W=%.6g", N,
                 rows[-1]["residual_Z"], rows[-1]["residual_W"])
    return rows
