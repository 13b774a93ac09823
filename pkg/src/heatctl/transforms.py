"""Transformation operators between the constant-coefficient (lambda) side and
the variable-coefficient (x) side, the weighted derivative and the discrete
Sobolev norms.

    S psi        = (psi o sigma) / (rho k)^{1/4}
    S^{-1} phi   = ((rho k)^{1/4} phi) o sigma^{-1}
    Tr g(l)      = g(l) + int_l^inf K(l, s) g(s) ds
    Tr^{-1} f(s) = f(s) + int_s^inf L(s, l) f(l) dl
    That         = S Tr,  That^{-1} = Tr^{-1} S^{-1}
    D_rhok phi   = sqrt(k/rho) phi' + Q1 phi
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .coeffs import CoefficientSet, DerivedData, derive
from .errors import DegenerateGridError, OutOfRangeError
from .kernels import (DEFAULT_H, DEFAULT_TOL, BoundReport, KernelK, KernelL,
                      boundary_derivative_K, solve_goursat_K, solve_L_from_K,
                      verify_kernel_bounds)
from .numerics import GridSpec, SampledFunction, trapezoid


def _trap_operator(kernel_rows: np.ndarray, H: float) -> np.ndarray:
    """I + H * (trapezoid over b >= a) applied with upper-triangular kernel."""
    n = kernel_rows.shape[0]
    W = np.triu(kernel_rows) * H
    idx = np.arange(n)
    W[idx, idx] *= 0.5
    W[:, -1] *= 0.5
    W[-1, -1] = 0.0  # empty integral on the last row
    return np.eye(n) + W


@dataclass
class TransformContext:
    coeffs: CoefficientSet
    derived: DerivedData
    K: KernelK
    L: KernelL
    bounds: BoundReport
    lam: np.ndarray
    x: np.ndarray
    Tr: np.ndarray = field(repr=False)
    TrInv: np.ndarray = field(repr=False)
    cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, source, h: float = DEFAULT_H, tol: float = DEFAULT_TOL,
              Y_max: Optional[float] = None) -> "TransformContext":
        """Derive data, solve K and L, and assemble the operator matrices.

        ``source`` is a preset name, a CoefficientSet or a DerivedData.
        """
        if isinstance(source, str):
            from .coeffs import preset
            source = preset(source)
        d = source if isinstance(source, DerivedData) else derive(source)
        Y = d.Lambda_max if Y_max is None else min(Y_max, d.Lambda_max)
        tail = d.sigma0.meta.get("tail_mass", 0.0)
        signed_tail = float(np.sign(d.int_r) * tail) if tail else 0.0
        K = solve_goursat_K(d.r_samples, Y, tol=tol, h=h, tail_mass=signed_tail,
                            abs_tail_mass=tail)
        L = solve_L_from_K(K)
        bounds = verify_kernel_bounds(K)
        boundary_derivative_K(K)
        M = K.N // 2
        H = K.lambda_step
        lam = np.arange(M + 1) * H
        a, b = np.indices((M + 1, M + 1))
        Tr = _trap_operator(K.on_ygrid(a, b), H)
        TrInv = _trap_operator(L.on_ygrid(a, b), H)
        x = d.sigma_inv(lam)
        return cls(d.coeffs, d, K, L, bounds, lam, x, Tr, TrInv)

    @property
    def Lambda_grid(self) -> float:
        return float(self.lam[-1])

    @property
    def H(self) -> float:
        return self.K.lambda_step

    @property
    def dK(self) -> SampledFunction:
        return boundary_derivative_K(self.K)

    def lam_grid(self) -> GridSpec:
        return GridSpec(self.lam)

    def x_grid(self) -> GridSpec:
        return GridSpec(self.x)


def _on_lam_grid(ctx: TransformContext, g: SampledFunction) -> np.ndarray:
    """g on the context lambda grid; zero past the end of g's grid."""
    lam = ctx.lam
    if g.grid.a > 1e-12:
        raise OutOfRangeError("function must be sampled from lambda = 0")
    inside = lam <= g.grid.b * (1 + 1e-12)
    vals = np.zeros(lam.size)
    vals[inside] = g(lam[inside])
    return vals


def tail_error_bound(ctx: TransformContext, g: SampledFunction) -> float:
    """Bound M0 sigma0(Lambda) ||g||_inf on the neglected part of the integrals."""
    s0_end = float(ctx.K.sigma0_xi[-1])
    return ctx.bounds.M0 * s0_end * float(np.max(np.abs(g.values)))


def apply_Tr(ctx: TransformContext, g: SampledFunction) -> SampledFunction:
    vals = ctx.Tr @ _on_lam_grid(ctx, g)
    return SampledFunction(ctx.lam_grid(), vals, "cubic",
                           {"tail_error_bound": tail_error_bound(ctx, g)})


def apply_Tr_inv(ctx: TransformContext, f: SampledFunction) -> SampledFunction:
    vals = ctx.TrInv @ _on_lam_grid(ctx, f)
    return SampledFunction(ctx.lam_grid(), vals, "cubic")


def apply_S(ctx: TransformContext, psi: SampledFunction, x=None) -> SampledFunction:
    """(S psi)(x) on ``x`` (default: the nodes sigma^{-1}(psi's lambda nodes))."""
    d = ctx.derived
    if x is None:
        lam = psi.nodes[psi.nodes <= d.Lambda_max]
        x = d.sigma_inv(lam)
    else:
        x = np.asarray(x, float)
        lam = d.sigma(x)
    vals = psi(lam) / ctx.coeffs.rhok_quarter(x)
    return SampledFunction(GridSpec(x), vals, psi.interpolation)


def apply_S_inv(ctx: TransformContext, phi: SampledFunction, lam=None) -> SampledFunction:
    """(S^{-1} phi)(lambda) on ``lam`` (default: sigma of phi's nodes)."""
    d = ctx.derived
    if lam is None:
        x = phi.nodes[phi.nodes <= d.X]
        lam = d.sigma(x)
    else:
        lam = np.asarray(lam, float)
        x = d.sigma_inv(lam)
    vals = ctx.coeffs.rhok_quarter(x) * phi(x)
    return SampledFunction(GridSpec(lam), vals, phi.interpolation)


def apply_That(ctx: TransformContext, g: SampledFunction, x=None) -> SampledFunction:
    return apply_S(ctx, apply_Tr(ctx, g), x)


def apply_That_inv(ctx: TransformContext, f: SampledFunction) -> SampledFunction:
    lam = ctx.lam[ctx.lam <= ctx.derived.sigma(f.grid.b) * (1 + 1e-12)]
    return apply_Tr_inv(ctx, apply_S_inv(ctx, f, lam))


def apply_D_rhok(coeffs, phi: SampledFunction) -> SampledFunction:
    """sqrt(k/rho) phi' + Q1 phi at phi's nodes; the x = 0 value is the
    one-sided (right) derivative."""
    c = coeffs.coeffs if isinstance(coeffs, TransformContext) else coeffs
    x = phi.nodes
    if x.size < 3:
        raise DegenerateGridError("weighted derivative needs at least three nodes")
    dphi = phi.derivative(x)
    vals = np.sqrt(c.kappa_at(x) / c.rho_at(x)) * dphi + c.Q1(x) * phi.values
    return SampledFunction(phi.grid, vals, phi.interpolation)


def _half_line_integral(x, y):
    if x.size < 3:
        return float(trapezoid(y, x))
    return float(simpson(y, x=x))


def norm_H0(f: SampledFunction) -> float:
    return float(np.sqrt(2.0 * _half_line_integral(f.nodes, f.values ** 2)))


def norm_H1(f: SampledFunction) -> float:
    """Norm over the line of the even function stored on the half-line."""
    df = f.derivative(f.nodes)
    return float(np.sqrt(2.0 * _half_line_integral(f.nodes, f.values ** 2 + df ** 2)))


def norm_HH0(coeffs, f: SampledFunction) -> float:
    c = coeffs.coeffs if isinstance(coeffs, TransformContext) else coeffs
    rho = c.rho_at(f.nodes)
    return float(np.sqrt(2.0 * _half_line_integral(f.nodes, f.values ** 2 * rho)))


def norm_HH1(coeffs, f: SampledFunction) -> float:
    """Weighted norm with weight rho and the derivative D_rhok.

    Given a TransformContext the norm is evaluated in the lambda variable,
    where rho dx = d(lambda) and D_rhok = S d/d(lambda) S^{-1}; this stays
    well conditioned when rho spans many decades. Given bare coefficients
    the x-side formula is used.
    """
    if isinstance(coeffs, TransformContext):
        d = coeffs.derived
        x = f.nodes[f.nodes <= d.X]
        same = x.size == coeffs.x.size and np.array_equal(x, coeffs.x)
        lam = coeffs.lam if same else d.sigma(x)
        psi = SampledFunction(GridSpec(lam), coeffs.coeffs.rhok_quarter(x) * f(x), f.interpolation)
        return norm_H1(psi)
    c = coeffs
    rho = c.rho_at(f.nodes)
    Df = apply_D_rhok(c, f).values
    return float(np.sqrt(2.0 * _half_line_integral(f.nodes, (f.values ** 2 + Df ** 2) * rho)))


def _norm_factor(nodes):
    """F with |F f| = norm_H1 of the grid function f on ``nodes``."""
    eye = np.eye(nodes.size)
    w = simpson(eye, x=nodes, axis=0)
    if np.any(w <= 0):
        raise DegenerateGridError("quadrature weights must be positive for the norm forms")
    D = CubicSpline(nodes, eye)(nodes, 1)
    sw = np.sqrt(2.0 * w)[:, None]
    return np.vstack([sw * eye, sw * D])


def _top_gain(F_out, M, F_in):
    """max |F_out M v| / |F_in v| through a column-scaled QR of F_in."""
    g = 1.0 / np.linalg.norm(F_in, axis=0)
    R = np.linalg.qr(F_in * g[None, :], mode="r")
    # v = g * R^{-1} y
    G = (F_out @ M) * g[None, :]
    G = np.linalg.solve(R.T, G.T).T
    return float(np.linalg.norm(G, 2))


def operator_norms(ctx: TransformContext) -> tuple:
    """(E0, E2): the largest ratios ||That psi||/||psi|| and ||That^{-1} phi||/||phi||
    over all grid functions, with the discrete norms used here.

    On the context grid the weighted norm of S psi equals the norm of psi, so
    both reduce to H1 gains of Tr and Tr^{-1} on the lambda grid.
    """
    if "operator_norms" not in ctx.cache:
        Fa = _norm_factor(ctx.lam)
        ctx.cache["operator_norms"] = (_top_gain(Fa, ctx.Tr, Fa), _top_gain(Fa, ctx.TrInv, Fa))
    return ctx.cache["operator_norms"]
