"""Deterministic 1D numerical kernels.

Adaptive quadrature on the real line with automatic window discovery,
log-domain integration, grid-based density convolution and bracketed
root finding.  Everything here is pure and reentrant.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _sciint
from scipy import optimize as _sciopt
from scipy.signal import fftconvolve

from .errors import GridMismatch, NoSignChange, NonConvergent, NonFinite

__all__ = [
    "QuadratureSpec",
    "GridDensity",
    "integrate",
    "log_integrate_exp",
    "convolve",
    "find_root",
]

# Direct O(n^2) convolution below this output size, FFT above.
_FFT_THRESHOLD = 1024


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 60
    truncation_threshold: float = 1e-12

    def __post_init__(self) -> None:
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if not 0 < self.truncation_threshold <= 1e-6:
            raise ValueError("truncation_threshold must lie in (0, 1e-6]")


DEFAULT_SPEC = QuadratureSpec()

_MAX_DOUBLINGS = 40
_SCAN_POINTS = 129


def _find_window(f, threshold: float):
    """Doubling search for a window outside which |f| is negligible.

    Starts from [-1, 1] and doubles until the endpoint magnitude drops
    below ``threshold`` times the running peak of |f| on the scanned grid.
    """
    lo, hi = -1.0, 1.0
    peak = 0.0
    for _ in range(_MAX_DOUBLINGS):
        xs = np.linspace(lo, hi, _SCAN_POINTS)
        vals = np.abs(np.asarray(f(xs), dtype=float))
        if not np.all(np.isfinite(vals)):
            raise NonFinite("integrand returned a non-finite value inside the window")
        peak = max(peak, float(vals.max()))
        if peak > 0.0 and vals[0] <= threshold * peak and vals[-1] <= threshold * peak:
            return lo, hi
        if peak == 0.0 and hi >= 8.0:
            # Identically-zero integrand (e.g. a vanishing score gap).
            return lo, hi
        lo *= 2.0
        hi *= 2.0
    raise NonConvergent("doubling search did not find a decaying window")


def integrate(f, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Integrate ``f`` over the real line.

    The effective support is discovered by doubling search; the window
    integral is then delegated to adaptive Gauss-Kronrod quadrature.
    """
    def fv(x):
        return np.asarray(f(np.asarray(x)), dtype=float)

    lo, hi = _find_window(fv, spec.truncation_threshold)

    def f_checked(x: float) -> float:
        y = float(f(x))
        if not np.isfinite(y):
            raise NonFinite(f"integrand non-finite at x={x}")
        return y

    value, abserr = _sciint.quad(
        f_checked, lo, hi,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
    )
    if abserr > 100.0 * max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise NonConvergent(
            f"quadrature error estimate {abserr:.3e} exceeds tolerance on [{lo}, {hi}]"
        )
    return value


def log_integrate_exp(log_f, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Return log of the integral of exp(log_f) with overflow-safe shifting."""
    log_thresh = np.log(spec.truncation_threshold)

    lo, hi = -1.0, 1.0
    peak = -np.inf
    for _ in range(_MAX_DOUBLINGS):
        xs = np.linspace(lo, hi, _SCAN_POINTS)
        vals = np.asarray(log_f(xs), dtype=float)
        if np.any(np.isnan(vals)) or np.any(vals == np.inf):
            raise NonFinite("log-integrand returned NaN or +inf")
        peak = max(peak, float(vals.max()))
        if vals[0] <= peak + log_thresh and vals[-1] <= peak + log_thresh:
            break
        lo *= 2.0
        hi *= 2.0
    else:
        raise NonConvergent("doubling search did not find a decaying window")

    shift = peak

    def g(x: float) -> float:
        v = float(log_f(x))
        if np.isnan(v) or v == np.inf:
            raise NonFinite(f"log-integrand non-finite at x={x}")
        return float(np.exp(v - shift))

    value, abserr = _sciint.quad(
        g, lo, hi,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
    )
    if value <= 0.0:
        raise NonConvergent("shifted integral evaluated to a non-positive value")
    if abserr > 100.0 * max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise NonConvergent(f"quadrature error estimate {abserr:.3e} too large")
    return shift + float(np.log(value))


@dataclass(frozen=True)
class GridDensity:
    """A probability density sampled on a uniform grid over [lo, hi]."""

    lo: float
    hi: float
    n_points: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not self.hi > self.lo:
            raise ValueError("hi must exceed lo")
        if self.n_points < 2:
            raise ValueError("need at least two grid points")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.n_points,):
            raise ValueError("values length must equal n_points")
        if np.any(vals < 0):
            raise ValueError("density values must be non-negative")
        mass = np.trapezoid(vals, dx=self.dx)
        if mass <= 0:
            raise ValueError("density has zero mass")
        object.__setattr__(self, "values", vals / mass)

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / (self.n_points - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)

    @classmethod
    def from_callable(cls, f, lo: float, hi: float, n_points: int) -> "GridDensity":
        xs = np.linspace(lo, hi, n_points)
        return cls(lo, hi, n_points, np.maximum(np.asarray(f(xs), dtype=float), 0.0))

    def mean(self) -> float:
        return float(np.trapezoid(self.xs * self.values, dx=self.dx))

    def variance(self) -> float:
        m = self.mean()
        return float(np.trapezoid((self.xs - m) ** 2 * self.values, dx=self.dx))


def convolve(p: GridDensity, q: GridDensity) -> GridDensity:
    """Density of the sum of independent variables with densities p and q."""
    if abs(p.dx - q.dx) > 1e-12 * max(p.dx, q.dx):
        raise GridMismatch(f"grid spacings differ: {p.dx} vs {q.dx}")
    n_out = p.n_points + q.n_points - 1
    if n_out < _FFT_THRESHOLD:
        raw = np.convolve(p.values, q.values)
    else:
        raw = fftconvolve(p.values, q.values)
    vals = np.maximum(raw, 0.0) * p.dx
    return GridDensity(p.lo + q.lo, p.hi + q.hi, n_out, vals)


def find_root(g, bracket, tol: float) -> float:
    """Root of ``g`` on a sign-changing bracket (Brent: bisection + secant/IQI)."""
    a, b = bracket
    ga, gb = float(g(a)), float(g(b))
    if ga == 0.0:
        return float(a)
    if gb == 0.0:
        return float(b)
    if np.sign(ga) == np.sign(gb):
        raise NoSignChange(f"g({a})={ga} and g({b})={gb} have the same sign")
    return float(_sciopt.brentq(g, a, b, xtol=tol))
