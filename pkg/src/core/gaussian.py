"""
Gaussian quantities

Normal cdf, quantile and isoperimetric function, bivariate orthant
probabilities, the isoperimetric and random-walk bound formulas, the star
majority limit integral and the k^{-nu} rate diagnostics.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, log_ndtr, logsumexp, ndtr

from .errors import DegenerateCorrelation, DomainError, PreconditionError, RhoOutOfRange

logger = logging.getLogger(__name__)

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Rational approximation of the normal quantile (central region and tails)
_Q_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
        1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_Q_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
        6.680131188771972e01, -1.328068155288572e01)
_Q_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
        -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_Q_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
        3.754408661907416e00)
_Q_LOW = 0.02425


@dataclass(frozen=True)
class GaussianQuery:
    """
    Parameters feeding the Gaussian bound formulas

    Only the fields an operation needs have to be set; every set field is
    validated.
    """
    s: Optional[float] = None
    t: Optional[float] = None
    sigma: Optional[float] = None
    alpha: Optional[float] = None
    tau: Optional[float] = None
    rho: Optional[float] = None
    k: Optional[int] = None

    def __post_init__(self):
        for name in ("s", "t"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise DomainError(f"{name} must be nonnegative, got {value}")
        if self.sigma is not None:
            _check_sigma(self.sigma)
        if self.alpha is not None and self.alpha < 0:
            raise DomainError(f"alpha must be nonnegative, got {self.alpha}")
        if self.tau is not None and not self.tau > 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        if self.rho is not None and not 0.0 <= self.rho <= 1.0:
            raise RhoOutOfRange(f"rho must lie in [0, 1], got {self.rho}")
        if self.k is not None and self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")

    @property
    def nu(self) -> float:
        return noise_exponent(self.rho)


def noise_exponent(rho: float) -> float:
    """nu = 1/rho^2 - 1"""
    if not 0.0 < rho <= 1.0:
        raise RhoOutOfRange(f"nu needs rho in (0, 1], got {rho}")
    return 1.0 / (rho * rho) - 1.0


def _check_sigma(sigma: float):
    if not 0.0 < sigma <= 1.0:
        raise DomainError(f"sigma must lie in (0, 1], got {sigma}")


def _check_open_rho(rho: float):
    if not 0.0 <= rho < 1.0:
        raise RhoOutOfRange(f"rho must lie in [0, 1), got {rho}")


# ----------------------------------------------------------------------
# One-dimensional normal
# ----------------------------------------------------------------------

def std_normal_pdf(x):
    """phi(x); accepts scalars or arrays"""
    out = np.exp(-0.5 * np.square(x) - LOG_SQRT_2PI)
    return float(out) if np.ndim(out) == 0 else out


def std_normal_cdf(x):
    """Phi(x); accepts scalars or arrays"""
    out = ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


def _rational_quantile(p: float) -> float:
    if p < _Q_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        c, d = _Q_C, _Q_D
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if p > 1.0 - _Q_LOW:
        return -_rational_quantile(1.0 - p)
    q = p - 0.5
    r = q * q
    a, b = _Q_A, _Q_B
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)


def std_normal_quantile(p: float) -> float:
    """
    Phi^{-1}(p): rational initial guess refined by two Newton steps

    Raises:
        DomainError: p outside (0, 1)
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile needs p in (0, 1), got {p}")
    q = _rational_quantile(p)
    for _ in range(2):
        density = std_normal_pdf(q)
        if density == 0.0:
            break
        q -= (float(ndtr(q)) - p) / density
    return q


def gaussian_isoperimetric(t: float) -> float:
    """
    I(t) = phi(Phi^{-1}(t))

    Raises:
        DomainError: t outside (0, 1)
    """
    if not 0.0 < t < 1.0:
        raise DomainError(f"isoperimetric function needs t in (0, 1), got {t}")
    # I is symmetric about 1/2; the smaller tail keeps the quantile accurate
    return std_normal_pdf(std_normal_quantile(min(t, 1.0 - t)))


# ----------------------------------------------------------------------
# Bivariate normal and isoperimetry
# ----------------------------------------------------------------------

def bvn_orthant(s: float, t: float, rho: float) -> float:
    """
    Pr[X >= s, Y >= t] for standard normals with correlation rho

    Integrates phi(x) * Phi((rho x - t) / sqrt(1 - rho^2)) over x >= s.

    Raises:
        DegenerateCorrelation: |rho| = 1
        DomainError: |rho| > 1
    """
    if abs(rho) > 1.0:
        raise DomainError(f"correlation must lie in [-1, 1], got {rho}")
    if abs(rho) == 1.0:
        raise DegenerateCorrelation("the orthant integral needs |rho| < 1")
    scale = math.sqrt(1.0 - rho * rho)

    def integrand(x: float) -> float:
        return std_normal_pdf(x) * float(ndtr((rho * x - t) / scale))

    value, error = quad(integrand, s, math.inf, epsabs=1e-13, epsrel=1e-11, limit=200)
    logger.debug(f"Orthant s={s}, t={t}, rho={rho}: {value:.15g} (quad error {error:.2g})")
    return float(value)


def isop_lower_bound(s: float, t: float, rho: float) -> float:
    """
    exp(-(s^2 + 2 rho s t + t^2) / (2 (1 - rho^2)))

    Lower bound on Pr[x in S, y in T] for sets of sizes exp(-s^2/2) 2^n and
    exp(-t^2/2) 2^n and a rho-correlated pair (x, y).
    """
    GaussianQuery(s=s, t=t)
    _check_open_rho(rho)
    return math.exp(-0.5 * (s * s + 2.0 * rho * s * t + t * t) / (1.0 - rho * rho))


def isop_conditional_bound(sigma: float, alpha: float, rho: float) -> float:
    """
    sigma^{(sqrt(alpha) + rho)^2 / (1 - rho^2)}

    Lower bound on Pr[y in T | x in S] when |S| = sigma 2^n and
    |T| = sigma^alpha 2^n.
    """
    GaussianQuery(sigma=sigma, alpha=alpha)
    _check_open_rho(rho)
    exponent = (math.sqrt(alpha) + rho) ** 2 / (1.0 - rho * rho)
    return math.exp(exponent * math.log(sigma))


def hamming_ball_limit_upper(s: float, t: float, rho: float) -> float:
    """
    sqrt(1 - rho^2) / (2 pi s (rho s + t)) * exp(-(s^2 + 2 rho s t + t^2) / (2 (1 - rho^2)))

    Upper estimate for the limiting probability that a rho-correlated pair
    lands in two diametrically opposed Hamming balls.

    Raises:
        DomainError: s <= 0 or rho s + t <= 0
    """
    _check_open_rho(rho)
    if s <= 0.0 or rho * s + t <= 0.0:
        raise DomainError(f"need s > 0 and rho*s + t > 0, got s={s}, t={t}, rho={rho}")
    prefactor = math.sqrt(1.0 - rho * rho) / (2.0 * math.pi * s * (rho * s + t))
    return prefactor * math.exp(-0.5 * (s * s + 2.0 * rho * s * t + t * t) / (1.0 - rho * rho))


# ----------------------------------------------------------------------
# Random walks
# ----------------------------------------------------------------------

def walk_exponent(alpha: float, tau: float) -> float:
    """(sqrt(alpha) + e^{-tau})^2 / (1 - e^{-2 tau})"""
    GaussianQuery(alpha=alpha, tau=tau)
    return (math.sqrt(alpha) + math.exp(-tau)) ** 2 / -math.expm1(-2.0 * tau)


def laurent_exponent(tau: float) -> float:
    """2/tau + tau/6, the small-tau expansion of walk_exponent(1, tau)"""
    GaussianQuery(tau=tau)
    return 2.0 / tau + tau / 6.0


def walk_bound(sigma: float, alpha: float, tau: float, n: int) -> float:
    """
    Main term sigma^{walk_exponent(alpha, tau)} of the lower bound on the
    probability that a lazy walk of tau*n steps from a uniform point of S
    (|S| = sigma 2^n) ends in T (|T| = sigma^alpha 2^n)

    The error term is reported separately by walk_error_term.
    """
    GaussianQuery(sigma=sigma, alpha=alpha, tau=tau)
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return math.exp(walk_exponent(alpha, tau) * math.log(sigma))


WALK_ERROR_CONSTANT = 4.0


def walk_error_term(sigma: float, alpha: float, tau: float, n: int) -> float:
    """4 sigma^{(alpha - 1)/2} / (tau n); the constant 4 is an implementation choice"""
    GaussianQuery(sigma=sigma, alpha=alpha, tau=tau)
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return WALK_ERROR_CONSTANT * sigma ** ((alpha - 1.0) / 2.0) / (tau * n)


def easytosee_gap(x, y):
    """
    e^{-x} - (1 - x/y)^y for 0 <= x <= y; accepts arrays

    Raises:
        DomainError: y <= 0 or x outside [0, y]
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(x < 0) or np.any(x > y):
        raise DomainError("need y > 0 and 0 <= x <= y")
    with np.errstate(divide="ignore"):
        power = np.exp(y * np.log1p(-x / y))
    out = np.exp(-x) - power
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------------------
# Star majority limit
# ----------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
LIMIT_LOWER = -12.0
LIMIT_UPPER = 12.0
MAX_PANELS = 1 << 12


def _log_star_integrand(x: np.ndarray, k: int, nu: float) -> np.ndarray:
    return k * log_ndtr(x / math.sqrt(nu)) - 0.5 * x * x - LOG_SQRT_2PI


def _log_panel_sum(k: int, nu: float, lower: float, upper: float, panels: int) -> float:
    edges = np.linspace(lower, upper, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    log_w = np.log(half[:, None] * _GL_WEIGHTS[None, :])
    return float(logsumexp(_log_star_integrand(x, k, nu) + log_w))


def log_star_majority_limit(k: int, rho: float) -> float:
    """
    Logarithm of star_majority_limit, usable far beyond float underflow

    Raises:
        RhoOutOfRange: rho outside (0, 1)
    """
    if not 0.0 < rho < 1.0:
        raise RhoOutOfRange(f"the majority limit needs rho in (0, 1), got {rho}")
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    nu = noise_exponent(rho)
    upper = LIMIT_UPPER
    peak = float(np.max(_log_star_integrand(np.linspace(LIMIT_LOWER, 200.0, 4000), k, nu)))
    # push the upper end out while the integrand there is not negligible
    while _log_star_integrand(np.array(upper), k, nu) > peak - 60.0 and upper < 200.0:
        upper *= 1.5
    panels = 4
    previous = _log_panel_sum(k, nu, LIMIT_LOWER, upper, panels)
    while panels < MAX_PANELS:
        panels *= 2
        current = _log_panel_sum(k, nu, LIMIT_LOWER, upper, panels)
        if abs(current - previous) <= 1e-10:
            logger.debug(f"Star limit k={k}, rho={rho}: converged with {panels} panels")
            return math.log(2.0) + current
        previous = current
    logger.warning(f"Star limit k={k}, rho={rho}: panel doubling stopped at {panels} panels")
    return math.log(2.0) + previous


def star_majority_limit(k: int, rho: float) -> float:
    """
    2 * integral of Phi(x / sqrt(nu))^k phi(x) over the real line

    The large-n limit of the success probability of majority on the k
    leaves of a star.
    """
    return math.exp(log_star_majority_limit(k, rho))


def star_majority_lower_estimate(k: int, nu: float) -> float:
    """2 nu^{1/2} (2 pi)^{(nu - 1)/2} Gamma(nu) Gamma(k + nu) / Gamma(k + 2 nu)"""
    if k < 1 or not nu > 0:
        raise DomainError(f"need k >= 1 and nu > 0, got k={k}, nu={nu}")
    log_value = (math.log(2.0) + 0.5 * math.log(nu) + (nu - 1.0) * LOG_SQRT_2PI
                 + gammaln(nu) + gammaln(k + nu) - gammaln(k + 2.0 * nu))
    return math.exp(log_value)


def naive_power_bound(k: int, rho: float) -> float:
    """
    (1/2)^{k / (rho^2 (k - 1) + 1)}

    Forward hypercontractive bound on E[(T_rho f)^k] for a zero-one f of
    mean 1/2; tends to the constant (1/2)^{1/rho^2}.
    """
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    if not 0.0 <= rho <= 1.0:
        raise RhoOutOfRange(f"rho must lie in [0, 1], got {rho}")
    return 0.5 ** (k / (rho * rho * (k - 1) + 1.0))


@dataclass
class SlopeDiagnostic:
    """Least-squares slopes of log star_majority_limit against log k"""
    rho: float
    nu: float
    k_grid: List[int]
    log_limits: List[float]
    raw_slope: float
    corrected_slope: float

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "nu": self.nu,
            "k_min": min(self.k_grid),
            "k_max": max(self.k_grid),
            "points": len(self.k_grid),
            "raw_slope": self.raw_slope,
            "corrected_slope": self.corrected_slope,
        }


def _profile_log_factor(k: int, nu: float) -> float:
    """(nu - 1) log(I(t*) / (t*(1 - t*))) at t* = 1 - nu/(k + nu)"""
    tail = nu / (k + nu)
    ratio = gaussian_isoperimetric(tail) / (tail * (1.0 - tail))
    return (nu - 1.0) * math.log(ratio)


def rate_slope_diagnostic(rho: float, k_grid: Sequence[int]) -> SlopeDiagnostic:
    """
    Fitted exponent of the k^{-nu} decay of the star majority limit

    The raw slope fits log limit against log k directly. The corrected
    slope first divides out (I(t*)/(t*(1-t*)))^{nu-1} at the point
    t* = 1 - nu/(k + nu) where t^k I(t)^{nu-1} concentrates, removing the
    slowly varying logarithmic factor.

    Raises:
        PreconditionError: fewer than 10 grid points or less than two decades
    """
    ks = sorted(set(int(k) for k in k_grid))
    if len(ks) < 10 or ks[0] < 1 or ks[-1] < 100 * ks[0]:
        raise PreconditionError("the slope fit needs at least 10 grid points spanning two decades")
    nu = noise_exponent(rho)
    log_k = np.log(np.array(ks, dtype=float))
    log_limits = np.array([log_star_majority_limit(k, rho) for k in ks])
    corrections = np.array([_profile_log_factor(k, nu) for k in ks])
    raw = float(np.polyfit(log_k, log_limits, 1)[0])
    corrected = float(np.polyfit(log_k, log_limits - corrections, 1)[0])
    logger.info(f"Rate slope at rho={rho} (nu={nu:.6g}): raw {raw:.4f}, corrected {corrected:.4f}")
    return SlopeDiagnostic(rho, nu, ks, log_limits.tolist(), raw, corrected)


def geometric_k_grid(k_min: int, k_max: int, points: int) -> List[int]:
    """Distinct integers spaced geometrically between k_min and k_max"""
    grid = np.unique(np.round(np.geomspace(k_min, k_max, points)).astype(int))
    return grid.tolist()
