"""Equation data rho, k, gamma and everything derived from it.

All coefficient functions are stored on x >= 0 and extended evenly, so every
evaluation routes through |x|.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import (CoefficientEvaluationError, DegenerateGridError, OutOfRangeError,
                     TailDivergenceError)
from .numerics import GridSpec, SampledFunction, richardson_derivative, trapezoid

ANALYTIC = "analytic-if-provided"
FINITE_DIFFERENCE = "central-finite-difference"

DEFAULT_HORIZON = 20.0
TAIL_MASS_TOL = 1e-10
RICHARDSON_TOL = 1e-6
_X_CAP = 2.0 ** 14
LAMBDA_CAP_FACTOR = 2.5  # truncation never takes sigma(X) beyond this many horizons
MAX_LAMBDA_SAMPLES = 2_000_001
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_FLUSH = 16 * np.finfo(float).eps


def _const(v):
    return lambda x: np.full(np.shape(x), float(v))


@dataclass(frozen=True)
class CoefficientSet:
    """Equation data rho, k (``kappa``), gamma as vectorized callables on x >= 0.

    ``q1`` and ``q1_prime`` optionally supply Q1 = sqrt(k/rho) (rho k)'/(4 rho k)
    and its derivative in closed form; otherwise they are differentiated
    numerically with one Richardson level.
    """

    rho: Callable
    kappa: Callable
    gamma: Callable
    derivative_scheme: str = ANALYTIC
    truncation_X: Optional[float] = None
    horizon: float = DEFAULT_HORIZON
    q1: Optional[Callable] = None
    q1_prime: Optional[Callable] = None
    name: str = "custom"
    sources: dict = field(default_factory=dict, compare=False)

    def _eval(self, fn, what, x):
        x = np.abs(np.asarray(x, dtype=float))
        try:
            with np.errstate(all="ignore"):
                v = np.asarray(fn(x), dtype=float) * np.ones_like(x)
        except Exception as exc:  # the user expression may raise anything
            raise CoefficientEvaluationError(f"{what} could not be evaluated: {exc}") from exc
        bad = ~np.isfinite(v)
        if np.any(bad):
            x_bad = float(np.atleast_1d(x)[np.atleast_1d(bad)][0])
            raise CoefficientEvaluationError(f"{what} is not finite at x={x_bad:.6g}", x_bad)
        return v

    def rho_at(self, x):
        return self._eval(self.rho, "rho", x)

    def kappa_at(self, x):
        return self._eval(self.kappa, "k", x)

    def gamma_at(self, x):
        return self._eval(self.gamma, "gamma", x)

    def speed(self, x):
        """sqrt(rho/k), the integrand of sigma."""
        return np.sqrt(self.rho_at(x) / self.kappa_at(x))

    def rhok_quarter(self, x):
        # fourth roots taken separately: rho*k itself may overflow
        return self.rho_at(x) ** 0.25 * self.kappa_at(x) ** 0.25

    def _use_analytic(self):
        return self.derivative_scheme == ANALYTIC and self.q1 is not None

    def Q1(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        if self._use_analytic():
            return self._eval(self.q1, "Q1", x)
        dlog, _ = richardson_derivative(
            lambda s: np.log(self.rho_at(s)) + np.log(self.kappa_at(s)), x)
        return 0.25 * np.sqrt(self.kappa_at(x) / self.rho_at(x)) * np.reshape(dlog, x.shape)

    def Q1_prime(self, x, with_error=False):
        x = np.abs(np.asarray(x, dtype=float))
        if self._use_analytic() and self.q1_prime is not None:
            v = self._eval(self.q1_prime, "Q1'", x)
            return (v, np.zeros_like(v)) if with_error else v
        d, err = richardson_derivative(self.Q1, x, rel_step=1e-3)
        d, err = np.reshape(d, x.shape), np.reshape(err, x.shape)
        return (d, err) if with_error else d

    def Q2(self, x):
        q1 = self.Q1(x)
        return np.sqrt(self.kappa_at(x) / self.rho_at(x)) * self.Q1_prime(x) + q1 * q1

    def q(self, x):
        """q = Q2 - gamma, with rounding-level cancellation flushed to 0."""
        q1 = self.Q1(x)
        lin = np.sqrt(self.kappa_at(x) / self.rho_at(x)) * self.Q1_prime(x)
        g = self.gamma_at(x)
        out = lin + q1 * q1 - g
        scale = np.abs(lin) + q1 * q1 + np.abs(g)
        return np.where(np.abs(out) <= _FLUSH * scale, 0.0, out)

    def replace(self, **kw) -> "CoefficientSet":
        from dataclasses import replace
        return replace(self, **kw)


def preset(name: str, **kw) -> CoefficientSet:
    """Built-in coefficient sets: "constant", "example1", "example2"."""
    if name == "constant":
        return CoefficientSet(_const(1.0), _const(1.0), _const(0.0), q1=_const(0.0),
                              q1_prime=_const(0.0), name=name,
                              sources={"rho": "1", "k": "1", "gamma": "0"}, **kw)
    if name == "example1":
        def rho(x):
            return 12 * np.cosh(x) / (1 + 2 * x)

        def kappa(x):
            return (1 + 2 * x) * np.cosh(x) / 3

        def gamma(x):
            a = 1 + 2 * x
            return (a * np.tanh(x) / 36 + a * a / 144 * (1 + 1 / np.cosh(x) ** 2)
                    - 1 / (4 * a ** 3))

        def q1(x):
            return (1 + 2 * x) * np.tanh(x) / 12

        def q1p(x):
            return (2 * np.tanh(x) + (1 + 2 * x) / np.cosh(x) ** 2) / 12

        src = {"rho": "12*cosh(x)/(1+2*abs(x))", "k": "(1+2*abs(x))*cosh(x)/3",
               "gamma": "(1+2*abs(x))*tanh(abs(x))/36+(1+2*abs(x))^2/144*(1+1/cosh(x)^2)"
                        "-1/(4*(1+2*abs(x))^3)"}
        return CoefficientSet(rho, kappa, gamma, q1=q1, q1_prime=q1p, name=name,
                              sources=src, **kw)
    if name == "example2":
        def rho(x):
            return (4 + x * x) * (3 + x)

        def kappa(x):
            return (4 + x * x) / (3 + x)

        def gamma(x):
            return (12 - x ** 3) / ((3 + x) ** 3 * (4 + x * x) ** 2)

        def q1(x):
            return x / ((3 + x) * (4 + x * x))

        def q1p(x):
            return (12 - 3 * x * x - 2 * x ** 3) / ((3 + x) * (4 + x * x)) ** 2

        src = {"rho": "(4+x^2)*(3+abs(x))", "k": "(4+x^2)/(3+abs(x))",
               "gamma": "(12-abs(x)^3)/((3+abs(x))^3*(4+x^2)^2)"}
        return CoefficientSet(rho, kappa, gamma, q1=q1, q1_prime=q1p, name=name,
                              sources=src, **kw)
    raise KeyError(f"unknown coefficient preset {name!r}")


def from_expressions(rho: str, kappa: str, gamma: str, **kw) -> CoefficientSet:
    from .exprparse import CompiledExpr
    return CoefficientSet(CompiledExpr(rho), CompiledExpr(kappa), CompiledExpr(gamma),
                          derivative_scheme=FINITE_DIFFERENCE,
                          sources={"rho": rho, "k": kappa, "gamma": gamma}, **kw)


def compute_sigma(c: CoefficientSet, x: float, tol: float = 1e-12) -> float:
    """sigma(x) = int_0^x sqrt(rho/k) by adaptive quadrature; odd in x."""
    ax = abs(float(x))
    if ax == 0.0:
        return 0.0
    val, _ = quad(lambda s: float(c.speed(s)), 0.0, ax, epsabs=tol, epsrel=tol, limit=500)
    return val if x > 0 else -val


def _gl_cumulative(c: CoefficientSet, nodes):
    """sigma at the nodes by 8-point Gauss-Legendre on every cell."""
    a, b = nodes[:-1], nodes[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    cell = half * (c.speed(pts) @ _GL_W)
    return np.concatenate(([0.0], np.cumsum(cell)))


def _sigma_nodes(X, ds):
    n = max(int(np.ceil(np.log1p(X) / ds)), 16)
    return np.expm1(np.linspace(0.0, np.log1p(X), n + 1))


def choose_truncation(c: CoefficientSet) -> float:
    """Smallest scanned X with sigma(X) >= horizon and remaining |r| mass
    below TAIL_MASS_TOL, kept inside the range where the coefficients are
    finite."""
    xs = 2.0 ** (np.arange(-6 * 16, 14 * 16 + 1) / 16.0)
    xs = np.concatenate(([0.0], xs))
    finite_end = xs.size
    for i, x in enumerate(xs):
        try:
            if c.rho_at(x) <= 0 or c.kappa_at(x) <= 0:
                raise CoefficientEvaluationError("nonpositive coefficient", float(x))
            c.q(x)
        except CoefficientEvaluationError:
            finite_end = i
            break
    xs = xs[:finite_end]
    if xs.size < 2:
        raise CoefficientEvaluationError("coefficients not finite near x=0", 0.0)
    sig = _gl_cumulative(c, xs)
    absr = np.abs(c.q(xs))
    # remaining mass int_lambda^Lambda |r| dlambda, measured in lambda
    seg = 0.5 * (absr[1:] + absr[:-1]) * np.diff(sig)
    remain = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
    within = sig <= LAMBDA_CAP_FACTOR * c.horizon
    ok = (sig >= c.horizon * (1 + 1e-9)) & (remain <= TAIL_MASS_TOL) & within
    if np.any(ok):
        return float(xs[np.argmax(ok)])
    # slow tail: stop at the sigma cap (the tail fit accounts for the rest)
    return float(xs[within][-1]) if np.any(within) else float(xs[1])


@dataclass(frozen=True)
class TailFit:
    amplitude: float
    rate: float
    start: float
    residual: float


@dataclass(frozen=True)
class DerivedData:
    coeffs: CoefficientSet
    X: float
    Lambda_max: float
    sigma_table: SampledFunction
    sigma_inverse_table: SampledFunction
    q_samples: SampledFunction
    r_samples: SampledFunction
    sigma0_0: float
    R: float
    R0: float
    int_r: float
    rhok_0_quarter: float
    sigma0: SampledFunction
    tail: Optional[TailFit]
    warnings: tuple = ()

    @property
    def r_is_zero(self) -> bool:
        return not np.any(self.r_samples.values)

    def sigma(self, x):
        """sigma on [-X, X] from the table, refined by Gauss-Legendre on the
        partial cell."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        if np.any(ax > self.X * (1 + 1e-12)):
            raise OutOfRangeError(f"|x| exceeds truncation X={self.X:.6g}")
        nodes = self.sigma_table.nodes
        j = np.clip(np.searchsorted(nodes, ax, side="right") - 1, 0, nodes.size - 2)
        a = nodes[j]
        half = 0.5 * (ax - a)
        pts = (a + half)[..., None] + half[..., None] * _GL_X
        val = self.sigma_table.values[j] + half * (self.coeffs.speed(pts) @ _GL_W)
        return np.sign(x) * val

    def sigma_inv(self, lam):
        return invert_sigma(self, lam)

    def r(self, lam):
        """r = q o sigma^{-1}, evaluated pointwise (lam in [0, Lambda_max])."""
        return self.coeffs.q(invert_sigma(self, np.abs(lam)))


def invert_sigma(d: DerivedData, lam, newton_steps: int = 3):
    """sigma^{-1} by monotone interpolation and Newton polish."""
    lam = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam) > d.Lambda_max * (1 + 1e-12)):
        bad = lam[np.abs(lam) > d.Lambda_max * (1 + 1e-12)].ravel()[0]
        raise OutOfRangeError(f"lambda={bad:.6g} outside [-{d.Lambda_max:.6g}, {d.Lambda_max:.6g}]")
    al = np.minimum(np.abs(lam), d.Lambda_max)
    x = np.clip(d.sigma_inverse_table(al), 0.0, d.X)
    for _ in range(newton_steps):
        x = np.clip(x - (d.sigma(x) - al) / d.coeffs.speed(x), 0.0, d.X)
    return np.sign(lam) * x if lam.ndim else float(np.sign(lam) * x)


def compute_q(c: CoefficientSet, X: float, n: int = 4001) -> SampledFunction:
    nodes = _sigma_nodes(X, np.log1p(X) / (n - 1))
    vals = c.q(nodes)
    meta = {}
    if not c._use_analytic():
        _, err = c.Q1_prime(nodes, with_error=True)
        if np.max(err) > RICHARDSON_TOL * (1 + np.max(np.abs(vals))):
            meta["warning"] = (f"Richardson disagreement {np.max(err):.3g} in Q1' "
                               f"at x={nodes[np.argmax(err)]:.6g}")
            warnings.warn(meta["warning"], RuntimeWarning, stacklevel=2)
    return SampledFunction(GridSpec(nodes), vals, "cubic", meta)


def compute_r(d: DerivedData) -> SampledFunction:
    return d.r_samples


def _fit_tail(lam, r_abs):
    nz = r_abs > 0
    if not np.any(nz):
        return None
    lam_nz = lam[nz]
    lo = lam_nz[0] + 0.6 * (lam_nz[-1] - lam_nz[0])
    sel = nz & (lam >= lo)
    if np.count_nonzero(sel) < 3:
        sel = nz
    if np.count_nonzero(sel) < 2:
        raise TailDivergenceError("too few nonzero samples to fit the tail of |r|")
    A = np.vstack([np.ones(np.count_nonzero(sel)), lam[sel]]).T
    coef, res, *_ = np.linalg.lstsq(A, np.log(r_abs[sel]), rcond=None)
    slope = coef[1]
    if slope >= 0:
        raise TailDivergenceError(f"|r| does not decay (fitted log-slope {slope:.3g})")
    resid = float(np.sqrt(res[0] / np.count_nonzero(sel))) if res.size else 0.0
    return TailFit(float(np.exp(coef[0])), float(-slope), float(lam[-1]), resid)


def tail_constants(d_or_lam, r_values=None):
    """(sigma0_0, R, R0, sigma0, fit) from |r| on a uniform lambda grid,
    plus exponential tail beyond the last node."""
    if isinstance(d_or_lam, DerivedData):
        lam, rv = d_or_lam.r_samples.nodes, d_or_lam.r_samples.values
    else:
        lam, rv = np.asarray(d_or_lam, float), np.asarray(r_values, float)
    r_abs = np.abs(rv)
    fit = _fit_tail(lam, r_abs)
    L = lam[-1]
    if fit is None:
        tail0 = tail1 = 0.0
    else:
        e = fit.amplitude * np.exp(-fit.rate * L)
        tail0 = e / fit.rate
        tail1 = e * (L / fit.rate + 1 / fit.rate ** 2)
    # sigma0(lambda) = int_lambda^inf |r|, trapezoid from the right
    seg = 0.5 * (r_abs[1:] + r_abs[:-1]) * np.diff(lam)
    s0 = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0])) + tail0
    R = float(trapezoid(lam * r_abs, lam)) + tail1
    R0 = float(np.max(r_abs)) / 16.0
    sigma0 = SampledFunction(GridSpec(lam), s0, "linear", {"tail_mass": tail0})
    return float(s0[0]), R, R0, sigma0, fit


def derive(c: CoefficientSet, ds: float = 0.002, dlam: float = 0.005) -> DerivedData:
    """Tabulate sigma, sigma^{-1}, q, r and the tail constants."""
    X = c.truncation_X if c.truncation_X is not None else choose_truncation(c)
    nodes = _sigma_nodes(X, ds)
    sig = _gl_cumulative(c, nodes)
    if np.any(np.diff(sig) <= 0):
        raise CoefficientEvaluationError("sigma is not strictly increasing")
    Lam = float(sig[-1])
    sigma_table = SampledFunction(GridSpec(nodes), sig, "cubic")
    inv = PchipInterpolator(sig, nodes)
    sigma_inverse_table = SampledFunction(GridSpec(sig), nodes, "cubic",
                                          {"pchip": inv})
    # PCHIP keeps the inverse monotone; the SampledFunction wrapper is for
    # range checks and reporting
    object.__setattr__(sigma_inverse_table, "_spline", inv)
    notes = []
    q_samples = compute_q(c, X)
    if "warning" in q_samples.meta:
        notes.append(q_samples.meta["warning"])
    n_lam = max(int(np.ceil(Lam / dlam)), 4) + 1
    if n_lam > MAX_LAMBDA_SAMPLES:
        raise DegenerateGridError(f"sigma(X) = {Lam:.6g} needs {n_lam} samples of r; "
                                  "lower truncation_X or raise dlam")
    lam = np.linspace(0.0, Lam, n_lam)
    proto = DerivedData(c, X, Lam, sigma_table, sigma_inverse_table, q_samples,
                        SampledFunction(GridSpec(lam), np.zeros(n_lam), "cubic"),
                        0.0, 0.0, 0.0, 0.0, float(c.rhok_quarter(0.0)),
                        SampledFunction(GridSpec(lam), np.zeros(n_lam), "linear"), None)
    rv = c.q(invert_sigma(proto, lam))
    r_samples = SampledFunction(GridSpec(lam), rv, "cubic")
    s00, R, R0, sigma0, fit = tail_constants(lam, rv)
    int_r = float(trapezoid(rv, lam))
    if fit is not None:
        int_r += float(np.sign(rv[np.nonzero(rv)[0][-1]]) * sigma0.meta["tail_mass"])
    return DerivedData(c, X, Lam, sigma_table, sigma_inverse_table, q_samples, r_samples,
                       s00, R, R0, int_r, float(c.rhok_quarter(0.0)), sigma0, fit, tuple(notes))


@dataclass
class CheckItem:
    name: str
    passed: bool
    detail: str
    location: Optional[float] = None


@dataclass
class ValidationReport:
    items: list

    @property
    def all_passed(self) -> bool:
        return all(i.passed for i in self.items)

    def __getitem__(self, name) -> CheckItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def to_dict(self):
        return {"all_passed": self.all_passed,
                "items": [dict(name=i.name, passed=i.passed, detail=i.detail,
                               location=i.location) for i in self.items]}


def _sample_grid(X):
    near = np.linspace(0.0, min(X, 10.0), 2001)
    far = np.geomspace(1e-3, X, 2001) if X > 1e-3 else np.array([])
    return np.unique(np.concatenate((near, far, [X])))


def _early_positivity(c):
    xs = _sample_grid(1.0)
    try:
        bad = (c.rho_at(xs) <= 0) | (c.kappa_at(xs) <= 0)
    except CoefficientEvaluationError as exc:
        return CheckItem("evaluation", False, str(exc), exc.x)
    if np.any(bad):
        loc = float(xs[np.argmax(bad)])
        return CheckItem("positivity", False, f"rho or k not positive at x={loc:.6g}", loc)
    return None


def validate_assumptions(c: CoefficientSet) -> ValidationReport:
    """Check the standing assumptions; failures are reported, never raised."""
    items = []
    X = c.truncation_X
    if X is None:
        early = _early_positivity(c)
        if early is not None:
            return ValidationReport([early])
        try:
            X = choose_truncation(c)
        except CoefficientEvaluationError as exc:
            items.append(CheckItem("evaluation", False, str(exc), exc.x))
            return ValidationReport(items)
    xs = _sample_grid(X)
    try:
        rho, kap = c.rho_at(xs), c.kappa_at(xs)
        c.gamma_at(xs)
    except CoefficientEvaluationError as exc:
        items.append(CheckItem("evaluation", False, str(exc), exc.x))
        return ValidationReport(items)
    bad = (rho <= 0) | (kap <= 0)
    if np.any(bad):
        loc = float(xs[np.argmax(bad)])
        items.append(CheckItem("positivity", False, f"rho or k not positive at x={loc:.6g}", loc))
        return ValidationReport(items)
    items.append(CheckItem("positivity", True, f"rho, k > 0 on [0, {X:.6g}]"))

    def rhok_log(s):
        return np.log(c.rho_at(s)) + np.log(c.kappa_at(s))

    dlog, err = richardson_derivative(rhok_log, [0.0])
    ok = abs(dlog[0]) <= max(1e-6, 10 * err[0])
    items.append(CheckItem("rhok_derivative_at_0", bool(ok),
                           f"(rho k)'(0)/(rho k)(0) = {dlog[0]:.3e}", 0.0))
    try:
        d = derive(c.replace(truncation_X=X))
    except (CoefficientEvaluationError, TailDivergenceError, DegenerateGridError) as exc:
        items.append(CheckItem("derived_data", False, str(exc), getattr(exc, "x", None)))
        return ValidationReport(items)
    items.append(CheckItem("sigma_growth", d.Lambda_max >= c.horizon,
                           f"sigma(X) = {d.Lambda_max:.6g}, horizon {c.horizon:.6g}", X))
    qv = c.q(xs)
    items.append(CheckItem("q_bounded", bool(np.all(np.isfinite(qv))),
                           f"max |q| = {np.max(np.abs(qv)):.6g} on [0, {X:.6g}]"))
    # int sqrt(rho/k) |q| sigma dx equals int lambda |r(lambda)| dlambda = R
    items.append(CheckItem("weighted_q_integrable", bool(np.isfinite(d.R)),
                           f"int sqrt(rho/k)|q| sigma dx = {d.R:.6g}"))
    return ValidationReport(items)
