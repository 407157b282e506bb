"""Closed-form constants and proof-internal recursions.

Every formula here is a verbatim transcription (natural logarithms
throughout); no tightening or re-derivation, even where slack is visible.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import AssertionFailure, InvalidConstants, RegimeViolation, Supercritical
from .meanfield import critical_coupling, moment, tilted_measure
from .model import ModelSpec, curie_weiss_model

__all__ = [
    "ConstantsBundle",
    "chaos_bound_marginal",
    "chaos_bound_conditional",
    "t1_tightening_constant",
    "defective_t2_constants",
    "t1_particle_constant",
    "jw_rhs",
    "prop25_constants",
    "curie_weiss_constants",
    "lemma51_coefficient_check",
    "verify_upper_solution",
    "CoefficientReport",
    "UpperSolutionReport",
]


@dataclass(frozen=True)
class ConstantsBundle:
    """The constants (rho, gamma, M, ...) governing the chaos bounds."""

    rho: float
    gamma: float
    big_m: float
    rho0: float
    lambda_n: float
    delta_n: float
    j_c: float
    var_mstar: float
    regime: str

    def __post_init__(self) -> None:
        if self.gamma < 0 or self.big_m < 0:
            raise ValueError("gamma and big_m must be non-negative")
        if not math.isnan(self.delta_n) and self.delta_n < 0:
            raise ValueError("delta_n must be non-negative")

    def to_json(self) -> str:
        payload = {k: getattr(self, k) for k in
                   ("rho", "gamma", "big_m", "rho0", "lambda_n", "delta_n",
                    "j_c", "var_mstar", "regime")}
        return json.dumps(payload, sort_keys=True)


def chaos_bound_marginal(c: ConstantsBundle, N: int, k: int) -> float:
    """Entropy bound for the k-particle marginal: O(k^2/N^2) with constants."""
    if c.rho <= 0:
        raise InvalidConstants("rho must be positive to evaluate the bound")
    if not 1 <= k <= N:
        raise ValueError("need 1 <= k <= N")
    g = c.gamma / c.rho
    return 18.0 * (1.0 + g) ** 3 * c.big_m / (c.rho * N * N) * (k * k + (1.0 + 6.0 * g) * k)


def chaos_bound_conditional(c: ConstantsBundle, N: int, k: int) -> float:
    """Bound on the k-th conditional entropy level: O(k/N^2)."""
    if c.rho <= 0:
        raise InvalidConstants("rho must be positive to evaluate the bound")
    if not 1 <= k <= N:
        raise ValueError("need 1 <= k <= N")
    g = c.gamma / c.rho
    return 36.0 * (1.0 + g) ** 3 * c.big_m / (c.rho * N * N) * (k + 3.0 * g)


def t1_tightening_constant(rho: float, delta: float) -> float:
    """Multiplier 8(2+delta)^2/rho turning a defective T1 into a tight one."""
    if rho <= 0:
        raise InvalidConstants("rho must be positive")
    if delta < 0:
        raise InvalidConstants("delta must be non-negative")
    return 8.0 * (2.0 + delta) ** 2 / rho


def defective_t2_constants(lam: float, eps: float, l_minus: float,
                           l_plus: float, N: int, var_mstar: float):
    """(lambda_N, delta_N) for the N-particle defective T2 inequality.

    eps in (0, 1/2] uses the 3(1/sqrt(2 eps) + 3) coefficient; eps = 0
    switches to 2(log N + 3).
    """
    if not 0 <= eps <= 0.5:
        raise ValueError("eps must lie in [0, 1/2]")
    if min(l_minus, l_plus, var_mstar) < 0 or N < 1:
        raise ValueError("l_minus, l_plus, var_mstar must be >= 0 and N >= 1")
    if eps == 0:
        coeff = 2.0 * (math.log(N) + 3.0)
    else:
        coeff = 3.0 * (1.0 / math.sqrt(2.0 * eps) + 3.0)
    lambda_n = lam - coeff * l_minus / N
    delta_n = (coeff * l_minus + l_plus) * var_mstar
    return lambda_n, delta_n


def t1_particle_constant(lambda_n: float, delta_n: float) -> float:
    """T1 constant 64(1+delta_N)^2/lambda_N shared by all marginals."""
    if lambda_n <= 0:
        raise InvalidConstants("lambda_n must be positive")
    return 64.0 * (1.0 + delta_n) ** 2 / lambda_n


def jw_rhs(eps: float, l_minus: float, var_mstar: float) -> float:
    """Right-hand side 3(1/sqrt(2 eps)+3) L^-_W Var(m_*) of the log-MGF bound."""
    if not 0 < eps <= 0.5:
        raise InvalidConstants("eps must lie in (0, 1/2]")
    if l_minus < 0 or var_mstar < 0:
        raise ValueError("l_minus and var_mstar must be non-negative")
    return 3.0 * (1.0 / math.sqrt(2.0 * eps) + 3.0) * l_minus * var_mstar


def prop25_constants(regime: str, *, rho0: float = 0.0,
                     m_w: float = 0.0, m_minus: float = 0.0,
                     l_plus: float = 0.0, l_minus: float = 0.0,
                     kappa_v: float = 0.0, l_w: float = 0.0,
                     d: int = 1, N: int | None = None) -> ConstantsBundle:
    """Constant bundles for the three general-interaction regimes.

    flat-bounded:   bounded interaction force, needs M^-_W < sqrt(rho0)/2.
    flat-lipschitz: Lipschitz force, needs L^-_W < rho0/2; composes the
                    defective T2 constants with eps = 1/2, Var = d/rho0 and
                    lambda = rho0 - (3/2) L^-_W.
    displacement:   displacement-convex confinement, kappa_V > 0.
    """
    nan = float("nan")
    if regime == "flat-bounded":
        if rho0 <= 0:
            raise RegimeViolation("flat-bounded requires rho0 > 0")
        if not m_minus < math.sqrt(rho0) / 2.0:
            raise RegimeViolation("flat-bounded requires M^-_W < sqrt(rho0)/2")
        rho = rho0 * (1.0 - 2.0 * m_minus / math.sqrt(rho0))
        return ConstantsBundle(rho, 2.0 * m_w, 4.0 * m_w * m_w, rho0,
                               nan, nan, nan, d / rho0, regime)
    if regime == "flat-lipschitz":
        if rho0 <= 0:
            raise RegimeViolation("flat-lipschitz requires rho0 > 0")
        if not l_minus < rho0 / 2.0:
            raise RegimeViolation("flat-lipschitz requires L^-_W < rho0/2")
        if N is None or N < 1:
            raise RegimeViolation("flat-lipschitz requires N >= 1")
        rho = rho0 * (1.0 - 2.0 * l_minus / rho0)
        lam = rho0 - 1.5 * l_minus
        lambda_n, delta_n = defective_t2_constants(lam, 0.5, l_minus, l_plus,
                                                   N, d / rho0)
        if lambda_n <= 0:
            raise RegimeViolation(f"lambda_N = {lambda_n} <= 0 at N = {N}")
        lip = l_plus + l_minus
        gamma = 64.0 * (1.0 + delta_n) ** 2 * lip * lip / lambda_n
        big_m = 4.0 * lip * lip * (delta_n / (lambda_n * N) + d / rho0)
        return ConstantsBundle(rho, gamma, big_m, rho0, lambda_n, delta_n,
                               nan, d / rho0, regime)
    if regime == "displacement":
        if kappa_v <= 0:
            raise RegimeViolation("displacement requires kappa_V > 0")
        rho = kappa_v / (2.0 * (1.0 + l_w * l_w / kappa_v**2))
        gamma = 2.0 * l_w * l_w / kappa_v
        finite_n = 0.0 if N is None else l_w * l_w / (kappa_v**2 * N)
        big_m = 4.0 * l_w * l_w * (1.0 + finite_n) * d / kappa_v
        return ConstantsBundle(rho, gamma, big_m, kappa_v, nan, nan, nan,
                               d / kappa_v, regime)
    raise ValueError(f"unknown regime {regime!r}")


def curie_weiss_constants(theta: float, sigma: float, J: float, N: int,
                          d: int = 1,
                          model: ModelSpec | None = None) -> ConstantsBundle:
    """Full constant bundle for the sub-critical quartic rank-one model."""
    if model is None:
        model = curie_weiss_model(theta, sigma, J)
    j_c = critical_coupling(model)
    if J >= j_c:
        raise Supercritical(f"J = {J} >= J_c = {j_c}")
    if J <= 0:
        raise RegimeViolation("bundle requires 0 < J < J_c")
    if sigma >= 1.0:
        rho0 = sigma
    else:
        rho0 = math.exp(-7.0 * (1.0 - sigma) ** 2 / (36.0 * theta))
    r = 1.0 - J / j_c
    rho = r * r * rho0
    q = min(j_c / J - 1.0, 1.0)
    coeff = 3.0 * (1.0 / math.sqrt(q) + 3.0)
    lambda_n = r * rho0 / 2.0 - coeff * J / N
    delta_n = coeff * d * J / rho0
    if lambda_n <= 0:
        raise RegimeViolation(f"lambda_N = {lambda_n} <= 0 at N = {N}")
    gamma = 64.0 * (1.0 + delta_n) ** 2 * J * J / lambda_n
    big_m = 4.0 * J * J * (delta_n / (lambda_n * N) + d / rho0)
    var_mstar = moment(tilted_measure(model, 0.0), 2)
    return ConstantsBundle(rho, gamma, big_m, rho0, lambda_n, delta_n,
                           j_c, var_mstar, "curie-weiss")


@dataclass(frozen=True)
class CoefficientReport:
    n_particles: int
    alpha: float
    a_sum: float
    a_bound: float
    b_sum: float
    b_bound: float
    passed: bool


def lemma51_coefficient_check(N: int, alpha: float) -> CoefficientReport:
    """Exact finite sums behind the interpolation-coefficient estimates.

    With c_k = ((k-1)/(N-1))^alpha for k = 2..N, the A-sum must stay below
    1/(2 alpha) + 3 (or log N + 3 at alpha = 0) and the B-sum above
    2/(1+alpha) - 1/(1+2 alpha) (or 1 at alpha = 0).
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if not 0 <= alpha <= 0.5:
        raise ValueError("alpha must lie in [0, 1/2]")
    k = np.arange(2, N + 1, dtype=float)
    base = (k - 1.0) / (N - 1.0)
    c = np.ones_like(base) if alpha == 0 else base**alpha
    a_sum = float(np.sum(c**2 / (k - 1.0)
                         + 2.0 * c / (N - 1.0)
                         - (k - 2.0) * c**2 / ((N - 1.0) * (k - 1.0))))
    b_sum = float(np.sum(2.0 * c - (k - 2.0) * c**2 / (k - 1.0)) / (N - 1.0))
    if alpha == 0:
        a_bound = math.log(N) + 3.0
        b_bound = 1.0
    else:
        a_bound = 1.0 / (2.0 * alpha) + 3.0
        b_bound = 2.0 / (1.0 + alpha) - 1.0 / (1.0 + 2.0 * alpha)
    passed = a_sum <= a_bound + 1e-12 and b_sum >= b_bound - 1e-12
    return CoefficientReport(N, alpha, a_sum, a_bound, b_sum, b_bound, passed)


@dataclass(frozen=True)
class UpperSolutionReport:
    rho: float
    gamma: float
    big_m: float
    n_particles: int
    min_margin_crude: float
    min_margin_refined: float
    passed: bool


def verify_upper_solution(rho: float, gamma: float, big_m: float,
                          N: int) -> UpperSolutionReport:
    """Machine check that the two candidate sequences dominate the entropy
    difference recursion 2 rho h_k >= (source at k) + 3 gamma (h_{k+1} - h_k)
    with the matching boundary conditions.  A failure would refute the
    transcription, never the algebra, hence AssertionFailure.
    """
    if rho <= 0:
        raise InvalidConstants("rho must be positive")
    if gamma < 0 or big_m < 0 or N < 2:
        raise InvalidConstants("need gamma, M >= 0 and N >= 2")
    g = gamma / rho
    k = np.arange(1, N + 1, dtype=float)

    tol = 1e-12

    # Crude sequence: quadratic in k with gamma-dependent offsets.
    pref = 3.0 * big_m * (1.0 + g / 2.0) / (rho * N * N)
    h = pref * (k**2 + 6.0 * g * k + 18.0 * g**2 + 3.0 * g)
    source = 3.0 * big_m * (1.0 + g / 2.0) * k[:-1] ** 2 / (N * N)
    lhs = 2.0 * rho * h[:-1]
    rhs = source + 3.0 * gamma * (h[1:] - h[:-1])
    margin_crude = lhs - rhs
    scale = np.maximum(np.abs(lhs), 1.0)
    bad = np.nonzero(margin_crude < -tol * scale)[0]
    if bad.size:
        raise AssertionFailure(f"crude recursion violated at k = {int(bad[0]) + 1}")
    if h[-1] < big_m / (2.0 * rho) * (1.0 - tol):
        raise AssertionFailure("crude boundary condition violated at k = N")

    # Refined sequence: linear in k, sharper constant.
    pref_r = 36.0 * (1.0 + g) ** 3 * big_m / (rho * N * N)
    hr = pref_r * (k + 3.0 * g)
    source_r = 36.0 * (1.0 + g) ** 3 * big_m * k[:-1] / (N * N)
    lhs_r = 2.0 * rho * hr[:-1]
    rhs_r = source_r + 3.0 * gamma * (hr[1:] - hr[:-1])
    margin_refined = lhs_r - rhs_r
    scale_r = np.maximum(np.abs(lhs_r), 1.0)
    bad_r = np.nonzero(margin_refined < -tol * scale_r)[0]
    if bad_r.size:
        raise AssertionFailure(f"refined recursion violated at k = {int(bad_r[0]) + 1}")
    if hr[-1] < 6.0 * (1.0 + g) ** 2 * big_m / (rho * N) * (1.0 - tol):
        raise AssertionFailure("refined boundary condition violated at k = N")

    return UpperSolutionReport(rho, gamma, big_m, N,
                               float(margin_crude.min()),
                               float(margin_refined.min()), True)
