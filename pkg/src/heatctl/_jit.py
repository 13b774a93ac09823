"""numba-compiled loop versions of the hot kernels (see ``_ref``)."""
import math

import numpy as np
from numba import njit

_opts = dict(cache=True, nogil=True, error_model="numpy")
_SQRT_PI = math.sqrt(math.pi)


@njit(**_opts)
def goursat_sweep(U, rt, u0, h):
    n = U.shape[0]
    G = np.zeros((n, n))
    for l in range(n):
        F_last = rt[n - 1 - l] * U[n - 1, l]
        acc = 0.0
        for m in range(n - 1, l - 1, -1):
            F = rt[m - l] * U[m, l]
            acc += F
            G[m, l] = h * (acc - 0.5 * F - 0.5 * F_last)
    out = np.zeros((n, n))
    for i in range(n):
        g0 = G[i, 0]
        run = 0.0
        for j in range(i + 1):
            run += G[i, j]
            out[i, j] = u0[i] + h * (run - 0.5 * g0 - 0.5 * G[i, j])
    return out


@njit(**_opts)
def solve_l_offsets(U, H):
    N = U.shape[0] - 1
    M = N // 2
    Ld = np.zeros((M + 1, N + 1))
    for a in range(M + 1):
        Ld[a, 0] = -U[2 * a, 0]
        for d in range(1, N - 2 * a + 1):
            acc = 0.0
            for cp in range(d):
                row = 2 * a + cp + d
                if row > N:
                    break
                k = U[row, d - cp]
                if cp == 0:
                    acc += 0.5 * Ld[a, 0] * k
                else:
                    acc += Ld[a, cp] * k
            row = 2 * a + d
            kab = U[row, d] if row <= N else 0.0
            row = 2 * a + 2 * d
            diag = U[row, 0] if row <= N else 0.0
            Ld[a, d] = (-kab - H * acc) / (1.0 + 0.5 * H * diag)
    return Ld


@njit(**_opts)
def _half_erf_diff(wa, wb):
    if wa > 0.0:
        return 0.5 * (math.erfc(wa) - math.erfc(wb))
    if wb < 0.0:
        return 0.5 * (math.erfc(-wb) - math.erfc(-wa))
    return 0.5 * (math.erf(wb) - math.erf(wa))


@njit(**_opts)
def _one_sided(x, nodes, vals, t):
    den = math.sqrt(4.0 * t)
    c1 = math.sqrt(t / math.pi)
    total = 0.0
    for k in range(nodes.shape[0] - 1):
        a = nodes[k]
        b = nodes[k + 1]
        wa = (a - x) / den
        wb = (b - x) / den
        if wa > 8.0 or wb < -8.0:
            continue
        slope = (vals[k + 1] - vals[k]) / (b - a)
        I0 = _half_erf_diff(wa, wb)
        I1 = c1 * (math.exp(-wa * wa) - math.exp(-wb * wb))
        total += (vals[k] + slope * (x - a)) * I0 + slope * I1
    return total


@njit(**_opts)
def gauss_conv_even(xs, nodes, vals, t):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = _one_sided(xs[i], nodes, vals, t) + _one_sided(-xs[i], nodes, vals, t)
    return out


@njit(**_opts)
def _antider(a, s):
    if s <= 0.0:
        return 0.0, 0.0
    ratio = a / s
    ex = math.exp(-ratio)
    rs = math.sqrt(s)
    F0 = 2.0 * rs * ex - 2.0 * math.sqrt(math.pi * a) * math.erfc(math.sqrt(ratio))
    F1 = (2.0 / 3.0) * (s * rs * ex - a * F0)
    return F0, F1


@njit(**_opts)
def heat_control_linear(xs, tn, un, t):
    out = np.zeros(xs.shape[0])
    m = tn.shape[0]
    if m < 2:
        return out
    for i in range(xs.shape[0]):
        a = xs[i] * xs[i] / 4.0
        acc = 0.0
        F0h, F1h = _antider(a, t - tn[0])
        for k in range(m - 1):
            s_hi = t - tn[k]
            s_lo = max(t - tn[k + 1], 0.0)
            F0l, F1l = _antider(a, s_lo)
            J0 = F0h - F0l
            J1 = F1h - F1l
            dt = tn[k + 1] - tn[k]
            acc += ((J1 - s_lo * J0) * un[k] + (s_hi * J0 - J1) * un[k + 1]) / dt
            F0h = F0l
            F1h = F1l
        out[i] = -acc / _SQRT_PI
    return out


@njit(**_opts)
def heat_control_pc(xs, breaks, amps, t):
    out = np.zeros(xs.shape[0])
    for i in range(xs.shape[0]):
        a = xs[i] * xs[i] / 4.0
        acc = 0.0
        for p in range(amps.shape[0]):
            lo = min(breaks[p], t)
            hi = min(breaks[p + 1], t)
            if hi <= lo:
                continue
            F0h, _ = _antider(a, t - lo)
            F0l, _ = _antider(a, t - hi)
            acc += amps[p] * (F0h - F0l)
        out[i] = -acc / _SQRT_PI
    return out
