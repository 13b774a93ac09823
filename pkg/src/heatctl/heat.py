"""Constant-coefficient heat equation on the line with a point control.

The even solution of Z_t = Z_xx - 2 u(t) delta(x) is

    Z(x, t) = (G_t * Z0)(x) - (1/sqrt(pi)) int_0^t u(s) exp(-x^2/(4(t-s))) / sqrt(t-s) ds

with G_t the heat kernel. Both terms are integrated in closed form against
piecewise-linear data (Z0, sampled u) or piecewise-constant u.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.fft import dct

from . import _accel
from .errors import DegenerateGridError, DomainError
from .numerics import GridSpec, SampledFunction, differentiate_one_sided

SIDE_Z = "Z"
SIDE_W = "W"


@dataclass
class HeatState:
    side: str
    field: SampledFunction
    time: float

    def __post_init__(self):
        if self.side not in (SIDE_Z, SIDE_W):
            raise ValueError(f"side must be {SIDE_Z!r} or {SIDE_W!r}")


@dataclass
class ControlSignal:
    """Control on [0, T]: ``sampled`` (piecewise linear through ``times``,
    ``values``) or ``piecewise-constant`` (``values[p]`` on
    [times[p], times[p+1]))."""

    kind: str
    times: np.ndarray
    values: np.ndarray
    T: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.values = np.asarray(self.values, float)
        if self.kind == "sampled":
            if self.times.shape != self.values.shape or self.times.size < 1:
                raise ValueError("sampled control needs matching times and values")
        elif self.kind == "piecewise-constant":
            if self.times.size != self.values.size + 1:
                raise ValueError("piecewise-constant control needs len(breaks) = len(amps) + 1")
        else:
            raise ValueError(f"unknown control kind {self.kind!r}")
        if np.any(np.diff(self.times) <= 0):
            raise DegenerateGridError("control times must increase")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("control must be bounded")

    @classmethod
    def sampled(cls, times, values, T=None, **meta):
        times = np.asarray(times, float)
        return cls("sampled", times, values, float(times[-1] if T is None else T), meta)

    @classmethod
    def piecewise(cls, breaks, amps, **meta):
        breaks = np.asarray(breaks, float)
        return cls("piecewise-constant", breaks, amps, float(breaks[-1]), meta)

    @classmethod
    def from_function(cls, fn, times, **meta):
        times = np.asarray(times, float)
        return cls.sampled(times, np.asarray(fn(times), float) * np.ones(times.size), **meta)

    @classmethod
    def zero(cls, T):
        return cls.sampled([0.0, T], [0.0, 0.0])

    def __call__(self, t):
        t = np.asarray(t, float)
        if self.kind == "sampled":
            return np.interp(t, self.times, self.values)
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.values.size - 1)
        return self.values[idx]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def scaled(self, factor: float) -> "ControlSignal":
        return ControlSignal(self.kind, self.times.copy(), factor * self.values, self.T,
                             dict(self.meta))

    def is_zero(self) -> bool:
        return not np.any(self.values)


def _control_term(xs, u: ControlSignal, t: float):
    if u.is_zero() or t <= 0:
        return np.zeros(xs.size)
    if u.kind == "piecewise-constant":
        return _accel.heat_control_pc(xs, u.times, u.values, t)
    inner = u.times[(u.times > 0) & (u.times < t)]
    tn = np.concatenate(([0.0], inner, [t]))
    return _accel.heat_control_linear(xs, tn, u(tn), t)


def heat_profile(Z0: Optional[SampledFunction], u: ControlSignal, t: float, xs) -> np.ndarray:
    """Z(x, t) at ``xs`` (|x| is used; the solution is even)."""
    xs = np.abs(np.asarray(xs, float))
    if t < 0:
        raise DomainError("time must be nonnegative")
    if t == 0:
        out = np.zeros(xs.size)
        if Z0 is not None:
            inside = xs <= Z0.grid.b
            out[inside] = Z0(xs[inside])
        return out
    out = _control_term(xs, u, t)
    if Z0 is not None and np.any(Z0.values):
        if Z0.grid.a != 0.0:
            raise DomainError("initial state must be stored from x = 0")
        out = out + _accel.gauss_conv_even(xs, Z0.nodes, Z0.values, t)
    return out


def solve_heat_line(Z0: Optional[SampledFunction], u: ControlSignal, t_eval: Sequence[float],
                    x=None) -> list:
    """States Z(., t) for t in ``t_eval`` on ``x`` (default: Z0's nodes)."""
    if x is None:
        if Z0 is None:
            raise DegenerateGridError("an output grid is required when Z0 is None")
        x = Z0.nodes
    grid = GridSpec(np.asarray(x, float))
    states = []
    for t in np.atleast_1d(np.asarray(t_eval, float)):
        if t == 0 and Z0 is not None:
            vals = Z0(grid.nodes)
        else:
            vals = heat_profile(Z0, u, float(t), grid.nodes)
        states.append(HeatState(SIDE_Z, SampledFunction(grid, vals, "cubic"), float(t)))
    return states


def _exp_weights(w, t, tn):
    """int_{tn[k]}^{tn[k+1]} exp(-w (t - s)) * hat_k(s) ds, left/right hat weights."""
    a, b = tn[:-1], tn[1:]
    dt = b - a
    z = w[:, None] * dt[None, :]
    Eb = np.exp(-w[:, None] * (t - b)[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        # int_a^b E = Eb * (1 - e^{-z}) / w = Eb * dt * g0(z)
        g0 = np.where(z > 1e-8, -np.expm1(-z) / np.where(z > 0, z, 1), 1 - z / 2)
        # int_a^b (s - a) E / dt = Eb * dt * g1(z),  g1 = (z + e^{-z} - 1)/z^2
        g1 = np.where(z > 1e-4, (z + np.expm1(-z)) / np.where(z > 0, z * z, 1),
                      0.5 - z / 6 + z * z / 24)
    right = Eb * dt * g1
    total = Eb * dt * g0
    return total - right, right


@dataclass
class FourierState:
    """Cosine-series state on the period [-b, b]."""

    b: float
    coeffs: np.ndarray
    time: float

    @property
    def wavenumbers(self):
        return np.pi * np.arange(self.coeffs.size) / self.b

    def __call__(self, x):
        x = np.asarray(x, float)
        return np.cos(np.outer(x, self.wavenumbers)) @ self.coeffs

    def norm_H1(self) -> float:
        c = self.coeffs
        k = self.wavenumbers
        return float(np.sqrt(self.b * (2 * c[0] ** 2 + np.sum(c[1:] ** 2 * (1 + k[1:] ** 2)))))


def solve_heat_fourier(Z0: Optional[SampledFunction], u: ControlSignal, t: float,
                       b: Optional[float] = None, n: Optional[int] = None) -> FourierState:
    """Spectral solution of the periodic even extension (period 2b)."""
    if Z0 is not None:
        nodes = Z0.nodes
        steps = np.diff(nodes)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise DegenerateGridError("spectral solve needs a uniform grid")
        b = float(nodes[-1])
        # DCT-I of samples on [0, b] gives the cosine coefficients
        c0 = dct(Z0.values, type=1) / (Z0.values.size - 1)
        c0[0] *= 0.5
        c0[-1] *= 0.5
    else:
        if b is None or n is None:
            raise DegenerateGridError("b and n are needed when Z0 is None")
        c0 = np.zeros(n)
    k = np.pi * np.arange(c0.size) / b
    w = k * k
    c = np.exp(-w * t) * c0
    if not u.is_zero() and t > 0:
        if u.kind == "piecewise-constant":
            lo = np.minimum(u.times[:-1], t)
            hi = np.minimum(u.times[1:], t)
            with np.errstate(invalid="ignore", divide="ignore"):
                E = np.where(w[:, None] > 0,
                             (np.exp(-w[:, None] * (t - hi)) - np.exp(-w[:, None] * (t - lo)))
                             / np.where(w > 0, w, 1)[:, None],
                             (hi - lo)[None, :])
            forced = E @ u.values
        else:
            inner = u.times[(u.times > 0) & (u.times < t)]
            tn = np.concatenate(([0.0], inner, [t]))
            un = u(tn)
            wl, wr = _exp_weights(w, t, tn)
            forced = wl @ un[:-1] + wr @ un[1:]
        # -2 u delta: cosine coefficients of delta on period 2b are 1/(2b), 1/b
        scale = np.full(c.size, 2.0 / b)
        scale[0] = 1.0 / b
        c = c - scale * forced
    return FourierState(b, c, float(t))


def boundary_trace(state: HeatState, ctx=None) -> float:
    """Z_x(0+, t) on the Z side; (D_rhok W)(0+, t) on the W side."""
    f = state.field
    if state.side == SIDE_Z:
        return differentiate_one_sided(f, at_left_end=True)
    if ctx is None:
        raise DomainError("the W-side trace needs the coefficient context")
    c = ctx.coeffs if hasattr(ctx, "coeffs") else ctx
    slope = differentiate_one_sided(f, at_left_end=True)
    x0 = f.grid.a
    return float(np.sqrt(c.kappa_at(x0) / c.rho_at(x0)) * slope + c.Q1(x0) * f.values[0])
