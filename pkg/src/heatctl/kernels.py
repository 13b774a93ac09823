"""Transmutation kernels K and L on the triangle 0 <= y1 <= y2.

K is computed in characteristic coordinates xi = (y1+y2)/2, eta = (y2-y1)/2,
where with u(xi, eta) = K(xi - eta, xi + eta) the Goursat problem becomes

    u(xi, eta) = 1/2 int_xi^inf r + int_0^eta dtau int_xi^Xi r(s - tau) u(s, tau) ds

and is solved by successive approximations on a uniform (xi, eta) grid of
step h. On the y-grid of step H = 2h the kernel is K(y_a, y_b) = U[a+b, b-a].
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import _accel
from .errors import ConvergenceError, OutOfRangeError
from .numerics import GridSpec, SampledFunction

DEFAULT_H = 0.02
DEFAULT_TOL = 1e-12
MAX_SWEEPS = 50


@dataclass
class KernelK:
    h: float
    Xi: float
    U: np.ndarray
    rt: np.ndarray
    sigma0_xi: np.ndarray
    residuals: list = field(default_factory=list)
    pde_residual: float = 0.0
    tol: float = DEFAULT_TOL
    _dK: Optional[SampledFunction] = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.U.shape[0] - 1

    @property
    def lambda_step(self) -> float:
        return 2.0 * self.h

    @property
    def is_zero(self) -> bool:
        return not np.any(self.U)

    @property
    def xi(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.h

    def boundary(self) -> SampledFunction:
        """K(0, x) for x in [0, 2 Xi]."""
        return SampledFunction(GridSpec(2 * self.xi), np.diag(self.U).copy(), "linear")

    def diagonal(self) -> SampledFunction:
        """K(y, y) = u(y, 0) for y in [0, Xi]."""
        return SampledFunction(GridSpec(self.xi), self.U[:, 0].copy(), "linear")

    def on_ygrid(self, a, b):
        """K(y_a, y_b) on the y-grid of step 2h; zero past the truncation."""
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        i = a + b
        ok = (i <= self.N) & (b >= a)
        return np.where(ok, self.U[np.minimum(i, self.N), np.clip(b - a, 0, self.N)], 0.0)

    def __call__(self, y1, y2):
        """Bilinear interpolation (linear on the diagonal cells)."""
        y1, y2 = np.broadcast_arrays(np.asarray(y1, float), np.asarray(y2, float))
        if np.any(y1 < -1e-12) or np.any(y2 < y1 - 1e-12):
            raise OutOfRangeError("kernel is defined on 0 <= y1 <= y2")
        xi = 0.5 * (y1 + y2) / self.h
        eta = np.maximum(0.5 * (y2 - y1), 0.0) / self.h
        out = np.zeros(xi.shape)
        inside = xi < self.N
        at_end = np.isclose(xi, self.N) & ~inside
        i = np.floor(np.where(inside, xi, 0)).astype(int)
        j = np.minimum(np.floor(eta).astype(int), i)
        fx = xi - i
        fy = eta - j
        U = self.U
        n = self.N
        i1 = np.minimum(i + 1, n)
        j1 = np.minimum(j + 1, n)
        sq = (1 - fx) * (1 - fy) * U[i, j] + fx * (1 - fy) * U[i1, j] \
            + (1 - fx) * fy * U[i, j1] + fx * fy * U[i1, j1]
        tri = U[i, j] + fx * (U[i1, j] - U[i, j]) + fy * (U[i1, j1] - U[i1, j])
        val = np.where(j == i, tri, sq)
        out = np.where(inside, val, out)
        if np.any(at_end):
            jj = np.clip(np.rint(eta).astype(int), 0, n)
            out = np.where(at_end, U[n, jj], out)
        return out if out.ndim else float(out)


@dataclass
class KernelL:
    H: float
    Ld: np.ndarray

    @property
    def M(self) -> int:
        return self.Ld.shape[0] - 1

    def on_ygrid(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        d = b - a
        ok = (d >= 0) & (a + b <= self.Ld.shape[1] - 1) & (a <= self.M)
        return np.where(ok, self.Ld[np.clip(a, 0, self.M), np.clip(d, 0, self.Ld.shape[1] - 1)], 0.0)

    def diagonal(self) -> np.ndarray:
        return self.Ld[:, 0].copy()


@dataclass
class BoundReport:
    M0: float
    M1: float
    M0_location: tuple
    M1_location: tuple
    consistent: bool
    truncation_error: float
    detail: str = ""

    def to_dict(self):
        return dict(M0=self.M0, M1=self.M1, M0_location=list(self.M0_location),
                    M1_location=list(self.M1_location), consistent=self.consistent,
                    truncation_error=self.truncation_error, detail=self.detail)


def _cell_simpson_tail(fn, h, n, tail):
    """int_{k h}^{n h} fn for k = 0..n by per-cell Simpson, plus ``tail``."""
    nodes = np.arange(n + 1) * h
    mids = nodes[:-1] + 0.5 * h
    fv, fm = fn(nodes), fn(mids)
    cell = h / 6.0 * (fv[:-1] + 4 * fm + fv[1:])
    return np.concatenate((np.cumsum(cell[::-1])[::-1], [0.0])) + tail, fv


def _as_callable(r):
    if isinstance(r, SampledFunction):
        return lambda s: r(np.minimum(s, r.grid.b))
    return r


def solve_goursat_K(r: Union[SampledFunction, Callable], Y_max: float, tol: float = DEFAULT_TOL,
                    h: float = DEFAULT_H, max_sweeps: int = MAX_SWEEPS,
                    tail_mass: float = 0.0, abs_tail_mass: Optional[float] = None) -> KernelK:
    """Kernel K on the triangle with xi in [0, Y_max].

    ``r`` is the potential on [0, Y_max] (SampledFunction or vectorized
    callable); ``tail_mass`` is int_{Y_max}^inf r, added to the diagonal data,
    and ``abs_tail_mass`` the same for |r| (used for sigma0).
    """
    N = int(round(Y_max / h))
    if N < 2:
        raise OutOfRangeError("Y_max must span at least two grid steps")
    rf = _as_callable(r)
    half_int, rt = _cell_simpson_tail(rf, h, N, tail_mass)
    s0, _ = _cell_simpson_tail(lambda s: np.abs(rf(s)), h, N,
                               abs(tail_mass) if abs_tail_mass is None else abs_tail_mass)
    u0 = 0.5 * half_int
    if not np.any(rt) and tail_mass == 0.0:
        return KernelK(h, N * h, np.zeros((N + 1, N + 1)), rt, s0, [], 0.0, tol)
    U = np.tril(np.repeat(u0[:, None], N + 1, axis=1))
    history = []
    for _ in range(max_sweeps):
        Un = _accel.goursat_sweep(U, rt, u0, h)
        change = float(np.max(np.abs(Un - U)))
        history.append(change)
        U = Un
        if change < tol:
            break
        if not np.isfinite(change):
            break
    else:
        raise ConvergenceError(
            f"successive approximations did not reach {tol:g} after {max_sweeps} sweeps "
            f"(last change {history[-1]:.3e}); sigma0(0) may be too large for this grid",
            history[-1], history)
    if not np.isfinite(history[-1]) or history[-1] >= tol:
        raise ConvergenceError("successive approximations diverged", history[-1], history)
    K = KernelK(h, N * h, U, rt, s0, history, 0.0, tol)
    K.pde_residual = pde_residual(K)
    return K


def pde_residual(K: KernelK) -> float:
    """sup |d_xi d_eta U + h^2 avg4(r U)| over interior cells.

    The mixed second difference is the h^2-scaled form of
    K_{y1 y1} - K_{y2 y2} - r(y1) K in characteristic coordinates.
    """
    U = K.U
    n = U.shape[0]
    if n < 3:
        return 0.0
    i, j = np.indices((n, n))
    F = np.where(j <= i, K.rt[np.abs(i - j)] * U, 0.0)
    D = U[1:, 1:] - U[1:, :-1] - U[:-1, 1:] + U[:-1, :-1]
    avg = 0.25 * (F[1:, 1:] + F[1:, :-1] + F[:-1, 1:] + F[:-1, :-1])
    res = D + K.h ** 2 * avg
    cells = (j[:-1, :-1] + 1) <= i[:-1, :-1]
    return float(np.max(np.abs(res[cells]))) if np.any(cells) else 0.0


def _derivative_fields(K: KernelK):
    """u_xi and u_eta on the whole triangle from the integral identities."""
    U, rt, h = K.U, K.rt, K.h
    n = U.shape[0]
    i, j = np.indices((n, n))
    lower = j <= i
    F = np.where(lower, rt[np.abs(i - j)] * U, 0.0)
    tail = np.cumsum(F[::-1], axis=0)[::-1]
    u_eta = np.where(lower, h * (tail - 0.5 * F - 0.5 * F[-1][None, :]), 0.0)
    run = np.cumsum(F, axis=1)
    u_xi = np.where(lower, -0.5 * rt[:, None] - h * (run - 0.5 * F[:, :1] - 0.5 * F), 0.0)
    return u_xi, u_eta


def boundary_derivative_K(K: KernelK) -> SampledFunction:
    """K_{y1}(0, x) for x in [0, 2 Xi], with the fitted M1 in ``meta``.

    The derivative comes from the integral identities for u_xi and u_eta
    rather than from differencing U; both are second order, this one avoids
    the one-sided stencil at the diagonal.
    """
    if K._dK is not None:
        return K._dK
    x = 2 * K.xi
    if K.is_zero:
        out = SampledFunction(GridSpec(x), np.zeros(x.size), "linear", {"M1": 0.0})
    else:
        u_xi, u_eta = _derivative_fields(K)
        d = np.arange(K.N + 1)
        vals = 0.5 * (u_xi[d, d] - u_eta[d, d])
        out = SampledFunction(GridSpec(x), vals, "linear",
                              {"M1": verify_kernel_bounds(K).M1})
    K._dK = out
    return out


def solve_L_from_K(K: KernelK) -> KernelL:
    """L from L + K + int_{y1}^{y2} L(y1, s) K(s, y2) ds = 0, row by row."""
    H = K.lambda_step
    if K.is_zero:
        return KernelL(H, np.zeros((K.N // 2 + 1, K.N + 1)))
    return KernelL(H, _accel.solve_l_offsets(K.U, H))


def lk_residual(K: KernelK, L: KernelL, rows=None) -> float:
    """Max trapezoid residual of the K-L relation over selected y1 rows."""
    N, H = K.N, L.H
    rows = range(0, L.M + 1, max(1, L.M // 20)) if rows is None else rows
    worst = 0.0
    for a in rows:
        bs = np.arange(a, N - a + 1)
        for b in bs[:: max(1, bs.size // 50)]:
            c = np.arange(a, b + 1)
            vals = L.on_ygrid(a, c) * K.on_ygrid(c, b)
            integral = H * (vals.sum() - 0.5 * vals[0] - 0.5 * vals[-1]) if b > a else 0.0
            worst = max(worst, abs(L.on_ygrid(a, b) + K.on_ygrid(a, b) + integral))
    return float(worst)


def verify_kernel_bounds(K: KernelK, sigma0: Optional[Callable] = None) -> BoundReport:
    """Smallest M0, M1 making |K| <= M0 sigma0(xi) and
    |K_{y1}| <= |r(xi)|/4 + M1 sigma0(xi) hold on the grid (xi = (y1+y2)/2)."""
    if K.is_zero:
        return BoundReport(0.0, 0.0, (0.0, 0.0), (0.0, 0.0), True, 0.0, "zero kernel")
    n = K.N + 1
    xi = K.xi
    s0 = K.sigma0_xi if sigma0 is None else np.asarray(sigma0(xi), float)
    i, j = np.indices((n, n))
    lower = j <= i
    absU = np.where(lower, np.abs(K.U), 0.0)
    u_xi, u_eta = _derivative_fields(K)
    K1 = np.where(lower, np.abs(0.5 * (u_xi - u_eta)), 0.0)
    excess = np.maximum(K1 - 0.25 * np.abs(K.rt)[:, None], 0.0)
    pos = s0 > 0
    spurious = lower & ~pos[:, None] & ((absU > 0) | (excess > 0))
    s0b = np.where(pos, s0, np.inf)[:, None]
    r0 = np.where(lower, absU / s0b, 0.0)
    r1 = np.where(lower, excess / s0b, 0.0)
    k0 = np.unravel_index(np.argmax(r0), r0.shape)
    k1 = np.unravel_index(np.argmax(r1), r1.shape)

    def loc(ij):
        a, b = ij
        return (float((a - b) * K.h), float((a + b) * K.h))  # (y1, y2)

    M0, M1 = float(r0[k0]), float(r1[k1])
    detail = "" if not np.any(spurious) else \
        f"sigma0 vanishes at {int(np.count_nonzero(spurious))} nodes where the kernel does not"
    return BoundReport(M0, M1, loc(k0), loc(k1), not np.any(spurious),
                       float(M0 * s0[-1]), detail)
