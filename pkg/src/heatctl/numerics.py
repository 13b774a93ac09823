"""Sampled functions, quadrature and differentiation shared by every module."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import DegenerateGridError, DomainError, OutOfRangeError

NODES_PER_UNIT = 1025
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    nodes: np.ndarray
    grading: str = "uniform"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise DegenerateGridError("a grid needs at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise DegenerateGridError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return self.nodes.size

    @classmethod
    def uniform(cls, a: float, b: float, n: int | None = None) -> "GridSpec":
        if n is None:
            n = max(int(np.ceil((b - a) * (NODES_PER_UNIT - 1))) + 1, 3)
        return cls(np.linspace(a, b, n), "uniform")

    @classmethod
    def geometric(cls, a: float, b: float, first: float, ratio: float,
                  max_step: float | None = None) -> "GridSpec":
        """Steps growing by ``ratio`` from ``first`` at ``a``, capped at
        ``max_step``, ending exactly at ``b``."""
        if max_step is None:
            max_step = (b - a) / 50.0
        nodes = [a]
        step = first
        while nodes[-1] + step < b - 0.5 * min(step, max_step):
            nodes.append(nodes[-1] + step)
            step = min(step * ratio, max_step)
        nodes.append(b)
        return cls(np.array(nodes), "geometric-refined-at-a")


@dataclass(frozen=True)
class SampledFunction:
    """Function values on a grid, with linear or cubic interpolation."""

    grid: GridSpec
    values: np.ndarray
    interpolation: str = "cubic"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ValueError("values must align with grid nodes")
        if self.interpolation not in ("linear", "cubic"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, fn: Callable, grid: GridSpec, interpolation="cubic", **meta):
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float) * np.ones(grid.size),
                   interpolation, dict(meta))

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @cached_property
    def _spline(self):
        return CubicSpline(self.grid.nodes, self.values)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        span = self.grid.b - self.grid.a
        lo = self.grid.a - _EDGE_TOL * (1 + span)
        hi = self.grid.b + _EDGE_TOL * (1 + span)
        if np.any(x < lo) or np.any(x > hi):
            bad = x[(x < lo) | (x > hi)].ravel()[0]
            raise OutOfRangeError(
                f"x={bad:.6g} outside sampled range [{self.grid.a:.6g}, {self.grid.b:.6g}]")
        return np.clip(x, self.grid.a, self.grid.b)

    def __call__(self, x):
        x = self._check(x)
        if self.interpolation == "linear":
            return np.interp(x, self.grid.nodes, self.values)
        out = self._spline(x)
        # exact node hits return the sample; the spline polynomial can lose it
        # to cancellation when values span many decades
        nodes = self.grid.nodes
        j = np.clip(np.searchsorted(nodes, x), 0, nodes.size - 1)
        hit = nodes[j] == x
        if np.any(hit):
            out = np.where(hit, self.values[j], out)
        return out

    def derivative(self, x=None):
        """First derivative at ``x`` (default: at the nodes)."""
        x = self.grid.nodes if x is None else self._check(x)
        if self.interpolation == "cubic":
            return self._spline(x, 1)
        slopes = np.diff(self.values) / np.diff(self.grid.nodes)
        idx = np.clip(np.searchsorted(self.grid.nodes, x, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    def integrate(self, a=None, b=None) -> float:
        return integrate(self, self.grid.a if a is None else a, self.grid.b if b is None else b)

    def with_values(self, values, **meta) -> "SampledFunction":
        return SampledFunction(self.grid, values, self.interpolation, {**self.meta, **meta})

    def resample(self, grid: GridSpec, interpolation=None) -> "SampledFunction":
        return SampledFunction(grid, self(grid.nodes), interpolation or self.interpolation,
                               dict(self.meta))


def integrate(f: SampledFunction, a: float, b: float) -> float:
    """Composite Simpson (cubic) or trapezoid (linear) integral over [a, b]."""
    if b < a:
        return -integrate(f, b, a)
    f._check([a, b])
    nodes = f.grid.nodes
    if a == f.grid.a and b == f.grid.b:
        xs, ys = nodes, f.values
    else:
        inside = (nodes > a) & (nodes < b)
        xs = np.concatenate(([a], nodes[inside], [b]))
        if xs.size < 2 or xs[-1] == xs[0]:
            return 0.0
        ys = np.concatenate((f([a]), f.values[inside], f([b])))
    if f.interpolation == "linear" or xs.size < 3:
        return float(trapezoid(ys, xs))
    return float(simpson(ys, x=xs))


def trapezoid(y, x=None, dx=1.0, axis=-1):
    fn = getattr(np, "trapezoid", None) or np.trapz
    return fn(y, x=x, dx=dx, axis=axis)


def sqrt_weights(tn: np.ndarray, t: float) -> np.ndarray:
    """Product-integration weights for int_0^t g(xi)/sqrt(t - xi) dxi with g
    piecewise linear on ``tn`` (tn[0] = 0, tn[-1] = t)."""
    tn = np.asarray(tn, dtype=float)
    w = np.zeros(tn.size)
    if tn.size < 2:
        return w
    s = np.maximum(t - tn, 0.0)
    A = np.sqrt(s[1:])   # lower s of each cell
    B = np.sqrt(s[:-1])  # upper s of each cell
    delta = s[:-1] - s[1:]
    denom = (A + B) ** 2
    w[:-1] += (2.0 / 3.0) * delta * (B + 2 * A) / denom
    w[1:] += (2.0 / 3.0) * delta * (2 * B + A) / denom
    return w


def integrate_sqrt_singular(g, t: float) -> float:
    """int_0^t g(xi)/sqrt(t - xi) dxi with g bounded.

    ``g`` is a SampledFunction on a time grid starting at 0, or a callable
    (then sampled on 1025 nodes per unit time). The weight is integrated
    exactly against the piecewise-linear interpolant of g.
    """
    if t <= 0:
        raise DomainError(f"singular integral needs t > 0, got {t}")
    if isinstance(g, SampledFunction):
        nodes = g.grid.nodes
        inner = nodes[(nodes > 0) & (nodes < t)]
        tn = np.concatenate(([0.0], inner, [t]))
        gv = g(tn)
    else:
        tn = GridSpec.uniform(0.0, t).nodes
        gv = np.asarray(g(tn), dtype=float) * np.ones(tn.size)
    return float(sqrt_weights(tn, t) @ gv)


def differentiate_one_sided(f: SampledFunction, at_left_end: bool = True) -> float:
    """Second-order one-sided difference for f'(a+) or f'(b-)."""
    nodes, vals = f.grid.nodes, f.values
    if nodes.size < 3:
        raise DegenerateGridError("one-sided difference needs at least three nodes")
    if at_left_end:
        x0, x1, x2 = nodes[:3]
        f0, f1, f2 = vals[:3]
    else:
        x0, x1, x2 = nodes[-1], nodes[-2], nodes[-3]
        f0, f1, f2 = vals[-1], vals[-2], vals[-3]
    c0 = (2 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2))
    c1 = (x0 - x2) / ((x1 - x0) * (x1 - x2))
    c2 = (x0 - x1) / ((x2 - x0) * (x2 - x1))
    return float(c0 * f0 + c1 * f1 + c2 * f2)


def bessel_I(n: int, y):
    """Modified Bessel function of the first kind of integer order, by its
    power series sum_m (y/2)^(2m+n) / (m! (m+n)!)."""
    if n < 0:
        raise DomainError("order must be nonnegative")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("argument must be nonnegative")
    half = y / 2.0
    term = half ** n / float(np.prod(np.arange(1, n + 1), dtype=float))
    total = term.copy()
    q = half * half
    for m in range(1, 400):
        term = term * q / (m * (m + n))
        total = total + term
        if np.all(term <= 1e-17 * np.abs(total)):
            break
    return total if total.ndim else float(total)


def richardson_derivative(fn: Callable, x, rel_step: float = 1e-4):
    """First derivative with one Richardson level.

    Central differences where the stencil stays in x >= 0, forward
    differences next to the origin (coefficients may have a kink there).
    Returns the derivative and the Richardson disagreement.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = rel_step * (1.0 + np.abs(x))
    central = x >= 2 * h

    def cd(hh):
        return (fn(x + hh) - fn(x - hh)) / (2 * hh)

    def fd(hh):
        return (-3 * fn(x) + 4 * fn(x + hh) - fn(x + 2 * hh)) / (2 * hh)

    out = np.empty_like(x)
    err = np.empty_like(x)
    if np.any(central):
        d1 = cd(h)
        d2 = cd(h / 2)
        out = np.where(central, (4 * d2 - d1) / 3, out)
        err = np.where(central, np.abs(d2 - d1), err)
    if np.any(~central):
        d1 = fd(h)
        d2 = fd(h / 2)
        out = np.where(central, out, (4 * d2 - d1) / 3)
        err = np.where(central, err, np.abs(d2 - d1))
    return out, err
