"""Vectorized numpy implementations of the hot kernels.

Each function here has a loop twin in ``_jit`` with the same signature; the
two must agree to rounding.
"""
import numpy as np
from scipy.special import erf, erfc

_SQRT_PI = np.sqrt(np.pi)
_BLOCK = 256


def goursat_sweep(U, rt, u0, h):
    """One successive-approximation sweep for the kernel in characteristic
    coordinates.

    ``U[i, j]`` holds K at xi = i*h, eta = j*h (j <= i). ``rt[k]`` is the
    potential at k*h and ``u0[i]`` the diagonal datum at xi = i*h.
    """
    n = U.shape[0]
    i, j = np.indices((n, n))
    lower = j <= i
    F = np.where(lower, rt[np.abs(i - j)] * U, 0.0)
    # trapezoid over s in [xi_i, xi_max] for each column l
    tail = np.cumsum(F[::-1], axis=0)[::-1]
    G = h * (tail - 0.5 * F - 0.5 * F[-1][None, :])
    G = np.where(lower, G, 0.0)
    # trapezoid over tau in [0, eta_j]
    run = np.cumsum(G, axis=1)
    A = h * (run - 0.5 * G[:, :1] - 0.5 * G)
    return np.where(lower, u0[:, None] + A, 0.0)


def solve_l_offsets(U, H):
    """Forward substitution for the inverse kernel on the y-grid.

    Returns ``Ld`` with ``Ld[a, d] = L(y_a, y_{a+d})`` for ``2a + d <= N``,
    where the y-grid step is ``H`` and K(y_c, y_b) = U[c + b, b - c].
    """
    N = U.shape[0] - 1
    M = N // 2
    Ld = np.zeros((M + 1, N + 1))
    a_all = np.arange(M + 1)
    # d = 0: empty integral
    Ld[:, 0] = -U[2 * a_all, 0]
    for d in range(1, N + 1):
        na = (N - d) // 2 + 1
        if na <= 0:
            break
        a = a_all[:na]
        cp = np.arange(d + 1)
        rows = 2 * a[:, None] + cp[None, :] + d
        cols = np.broadcast_to(d - cp[None, :], rows.shape)
        ok = rows <= N
        Kg = np.where(ok, U[np.minimum(rows, N), cols], 0.0)
        w = np.ones(d + 1)
        w[0] = 0.5
        acc = H * np.sum(Ld[:na, :d] * Kg[:, :d] * w[:d], axis=1)
        Kab = Kg[:, 0]
        diag = Kg[:, d]
        Ld[:na, d] = (-Kab - acc) / (1.0 + 0.5 * H * diag)
    return Ld


def _half_erf_diff(wa, wb):
    # 0.5*(erf(wb) - erf(wa)) for wa <= wb without cancellation in the tails
    out = 0.5 * (erf(wb) - erf(wa))
    pos = wa > 0
    out = np.where(pos, 0.5 * (erfc(wa) - erfc(wb)), out)
    neg = wb < 0
    out = np.where(neg, 0.5 * (erfc(-wb) - erfc(-wa)), out)
    return out


def _one_sided_conv(x, a, b, fa, slope, t):
    den = np.sqrt(4.0 * t)
    wa = (a[None, :] - x[:, None]) / den
    wb = (b[None, :] - x[:, None]) / den
    I0 = _half_erf_diff(wa, wb)
    I1 = np.sqrt(t / np.pi) * (np.exp(-wa * wa) - np.exp(-wb * wb))
    base = fa[None, :] + slope[None, :] * (x[:, None] - a[None, :])
    return np.sum(base * I0 + slope[None, :] * I1, axis=1)


def gauss_conv_even(xs, nodes, vals, t):
    """Heat-kernel convolution of the even extension of a piecewise-linear
    function given on ``nodes`` (starting at 0), evaluated at ``xs``.

    Exact for the piecewise-linear interpolant; zero beyond the last node.
    """
    xs = np.asarray(xs, dtype=float)
    a = nodes[:-1]
    b = nodes[1:]
    fa = vals[:-1]
    slope = (vals[1:] - vals[:-1]) / (b - a)
    out = np.empty(xs.shape[0])
    for lo in range(0, xs.shape[0], _BLOCK):
        x = xs[lo:lo + _BLOCK]
        out[lo:lo + _BLOCK] = (_one_sided_conv(x, a, b, fa, slope, t)
                               + _one_sided_conv(-x, a, b, fa, slope, t))
    return out


def heat_weight_antiderivatives(a, s):
    """F0(s) = int s^{-1/2} e^{-a/s} ds and F1(s) = int s^{1/2} e^{-a/s} ds,
    both normalized to vanish at s = 0."""
    a, s = np.broadcast_arrays(np.asarray(a, float), np.asarray(s, float))
    safe = np.where(s > 0, s, 1.0)
    ratio = np.where(s > 0, a / safe, np.inf)
    ex = np.exp(-ratio)
    rs = np.sqrt(safe)
    F0 = 2.0 * rs * ex - 2.0 * np.sqrt(np.pi * a) * erfc(np.sqrt(ratio))
    F1 = (2.0 / 3.0) * (safe * rs * ex - a * F0)
    F0 = np.where(s > 0, F0, 0.0)
    F1 = np.where(s > 0, F1, 0.0)
    return F0, F1


def heat_control_linear(xs, tn, un, t):
    """-(1/sqrt(pi)) int_0^t u(xi) exp(-x^2/(4(t-xi)))/sqrt(t-xi) dxi for u
    piecewise linear on ``tn`` (tn[0] = 0, tn[-1] = t)."""
    xs = np.asarray(xs, dtype=float)
    if tn.shape[0] < 2:
        return np.zeros(xs.shape[0])
    s_hi = t - tn[:-1]
    s_lo = np.maximum(t - tn[1:], 0.0)
    dt = tn[1:] - tn[:-1]
    out = np.empty(xs.shape[0])
    for lo in range(0, xs.shape[0], _BLOCK):
        a = (xs[lo:lo + _BLOCK] ** 2 / 4.0)[:, None]
        F0h, F1h = heat_weight_antiderivatives(a, s_hi[None, :])
        F0l, F1l = heat_weight_antiderivatives(a, s_lo[None, :])
        J0 = F0h - F0l
        J1 = F1h - F1l
        wl = (J1 - s_lo * J0) / dt
        wr = (s_hi * J0 - J1) / dt
        out[lo:lo + _BLOCK] = -(wl @ un[:-1] + wr @ un[1:]) / _SQRT_PI
    return out


def heat_control_pc(xs, breaks, amps, t):
    """Same integral for a piecewise-constant u with ``amps[p]`` on
    [breaks[p], breaks[p+1])."""
    xs = np.asarray(xs, dtype=float)
    lo_t = np.minimum(breaks[:-1], t)
    hi_t = np.minimum(breaks[1:], t)
    s_hi = t - lo_t
    s_lo = t - hi_t
    out = np.empty(xs.shape[0])
    for lo in range(0, xs.shape[0], _BLOCK):
        a = (xs[lo:lo + _BLOCK] ** 2 / 4.0)[:, None]
        F0h, _ = heat_weight_antiderivatives(a, s_hi[None, :])
        F0l, _ = heat_weight_antiderivatives(a, s_lo[None, :])
        out[lo:lo + _BLOCK] = -((F0h - F0l) @ amps) / _SQRT_PI
    return out
