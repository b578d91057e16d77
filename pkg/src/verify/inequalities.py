"""
Hypercontractive and Hölder-type inequality checks

Every homogeneous inequality is checked on functions rescaled to mean 1,
so the absolute slack tolerance is meaningful across trials.
"""

import logging
import math
from typing import Optional

import numpy as np

from ..core.cube import CubeFunction, correlated_expectation, noise_operator, p_norm
from ..core.errors import PreconditionError
from ..core.gaussian import easytosee_gap
from .report import DEFAULT_TOLERANCE, CheckReport, SlackTracker
from .sampling import random_nonnegative_function, random_signed_function, run_trials

logger = logging.getLogger(__name__)

SMALL_P = 0.01


def _exponent(rng: np.random.Generator, low: float, high: float) -> float:
    """Uniform exponent, snapped to 0 near 0 where p-norms lose precision"""
    p = float(rng.uniform(low, high))
    return 0.0 if abs(p) < SMALL_P else p


def _unit_mean(f: CubeFunction) -> CubeFunction:
    mean = np.abs(f.values).mean()
    return f if mean == 0.0 else CubeFunction(f.n, f.values / mean)


def _dimension(rng: np.random.Generator, n: int) -> int:
    return int(rng.integers(1, n + 1))


def check_forward_bb(n: int = 6, trials: int = 1000, seed: int = 0, jobs: int = 1,
                     tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """||T_rho f||_q <= ||f||_p for 1 <= p <= q and rho <= sqrt((p-1)/(q-1))"""
    def trial(rng: np.random.Generator):
        m = _dimension(rng, n)
        f = random_signed_function(rng, m)
        p = float(rng.uniform(1.0, 4.0))
        q = p + float(rng.uniform(0.0, 4.0))
        threshold = math.sqrt((p - 1.0) / (q - 1.0)) if q > 1.0 else 1.0
        rho = threshold if rng.random() < 0.5 else threshold * float(rng.random())
        scale = p_norm(f, p)
        if scale > 0:
            f = CubeFunction(m, f.values / scale)
        slack = p_norm(f, p) - p_norm(noise_operator(f, rho), q)
        return slack, {"n": m, "p": p, "q": q, "rho": rho, "f": f.values}

    tracker = run_trials(trial, seed, trials, jobs)
    report = tracker.report("check_forward_bb", tolerance)
    logger.info(f"check_forward_bb: passed={report.passed}, worst slack {report.worst_slack:.3g}")
    return report


def check_reverse_bb(n: int = 6, trials: int = 1000, seed: int = 0, jobs: int = 1,
                     tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    ||T_rho f||_q >= ||f||_p for nonnegative f, -4 <= q <= p <= 1 and
    rho <= sqrt((1-p)/(1-q))
    """
    def trial(rng: np.random.Generator):
        m = _dimension(rng, n)
        f = _unit_mean(random_nonnegative_function(rng, m))
        p = _exponent(rng, -4.0, 1.0)
        q = _exponent(rng, -4.0, p)
        threshold = math.sqrt((1.0 - p) / (1.0 - q)) if q < 1.0 else 1.0
        rho = threshold if rng.random() < 0.5 else threshold * float(rng.random())
        slack = p_norm(noise_operator(f, rho), q) - p_norm(f, p)
        return slack, {"n": m, "p": p, "q": q, "rho": rho, "f": f.values}

    tracker = run_trials(trial, seed, trials, jobs)
    report = tracker.report("check_reverse_bb", tolerance)
    logger.info(f"check_reverse_bb: passed={report.passed}, worst slack {report.worst_slack:.3g}")
    return report


def check_two_function(n: int = 6, trials: int = 1000, seed: int = 0, jobs: int = 1,
                       tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """E[f(x) g(y)] >= ||f||_p ||g||_q for p, q < 1 and rho <= sqrt((1-p)(1-q))"""
    def trial(rng: np.random.Generator):
        m = _dimension(rng, n)
        f = _unit_mean(random_nonnegative_function(rng, m))
        g = _unit_mean(random_nonnegative_function(rng, m))
        p = _exponent(rng, -4.0, 1.0)
        q = _exponent(rng, -4.0, 1.0)
        threshold = min(1.0, math.sqrt((1.0 - p) * (1.0 - q)))
        rho = threshold if rng.random() < 0.5 else threshold * float(rng.random())
        slack = correlated_expectation(f, g, rho) - p_norm(f, p) * p_norm(g, q)
        return slack, {"n": m, "p": p, "q": q, "rho": rho, "f": f.values, "g": g.values}

    tracker = run_trials(trial, seed, trials, jobs)
    report = tracker.report("check_two_function", tolerance)
    logger.info(f"check_two_function: passed={report.passed}, worst slack {report.worst_slack:.3g}")
    return report


def two_point_slacks(p: float, q: float, terms: int = 50) -> np.ndarray:
    """
    Log-slack of (1-q)...(2m-1-q) rho^{2m} <= (1-p)...(2m-1-p) for m = 1..terms
    with rho^2 = (1-p)/(1-q)

    Raises:
        PreconditionError: not 0 < q < p < 1 or terms outside 1..50
    """
    if not 0.0 < q < p < 1.0:
        raise PreconditionError(f"need 0 < q < p < 1, got p={p}, q={q}")
    if not 1 <= terms <= 50:
        raise PreconditionError(f"terms must lie in 1..50, got {terms}")
    log_rho = 0.5 * (math.log1p(-p) - math.log1p(-q))
    factors = np.arange(1, 2 * terms)
    gains = np.cumsum(np.log(factors - p) - np.log(factors - q))
    orders = np.arange(1, terms + 1)
    return gains[2 * orders - 2] - 2 * orders * log_rho


def sufficient_condition_slacks(p: float, q: float, terms: int = 50) -> np.ndarray:
    """(m - p) - rho (m - q) for m = 2..2*terms-1"""
    rho = math.sqrt((1.0 - p) / (1.0 - q))
    m = np.arange(2, 2 * terms)
    return (m - p) - rho * (m - q)


def check_two_point_coefficients(p: Optional[float] = None, q: Optional[float] = None, terms: int = 50,
                                 trials: int = 1000, seed: int = 0, jobs: int = 1,
                                 tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    The coefficient comparison behind the two-point reverse inequality

    Checks the given (p, q) pair, or sampled pairs 0 < q < p < 1 when none
    is given.
    """
    def evaluate(p_: float, q_: float):
        coefficient = two_point_slacks(p_, q_, terms)
        sufficient = sufficient_condition_slacks(p_, q_, terms)
        worst = min(float(coefficient.min()), float(sufficient.min()))
        return worst, {"p": p_, "q": q_, "terms": terms}

    if p is not None or q is not None:
        if p is None or q is None:
            raise PreconditionError("give both p and q, or neither")
        tracker = SlackTracker()
        tracker.update(*evaluate(p, q))
    else:
        def trial(rng: np.random.Generator):
            a, b = sorted(rng.uniform(1e-3, 1.0 - 1e-3, size=2))
            if a == b:
                b = min(a + 1e-3, 1.0 - 1e-4)
            return evaluate(float(b), float(a))

        tracker = run_trials(trial, seed, trials, jobs)
    report = tracker.report("check_two_point_coefficients", tolerance)
    logger.info(f"check_two_point_coefficients: passed={report.passed}")
    return report


def check_reverse_holder(n: int = 6, trials: int = 1000, seed: int = 0, jobs: int = 1,
                         tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    E[fg] >= ||f||_p ||g||_{p'} for nonnegative f, g, p < 1 and 1/p + 1/p' = 1

    A fifth of the trials use the equality case g = f^{p-1}.
    """
    equality_gaps = []

    def trial(rng: np.random.Generator):
        m = _dimension(rng, n)
        p = _exponent(rng, -4.0, 1.0)
        if p == 0.0:
            p = SMALL_P
        conjugate = p / (p - 1.0)
        equality = rng.random() < 0.2
        f = _unit_mean(random_nonnegative_function(rng, m, allow_zeros=not equality))
        if equality:
            g = _unit_mean(CubeFunction(m, f.values ** (p - 1.0)))
        else:
            g = _unit_mean(random_nonnegative_function(rng, m))
        lhs = float(np.mean(f.values * g.values))
        slack = lhs - p_norm(f, p) * p_norm(g, conjugate)
        if equality:
            equality_gaps.append(abs(slack))
        return slack, {"n": m, "p": p, "equality_case": equality, "f": f.values, "g": g.values}

    tracker = run_trials(trial, seed, trials, jobs)
    details = {"equality_cases": len(equality_gaps),
               "max_equality_gap": max(equality_gaps) if equality_gaps else 0.0}
    report = tracker.report("check_reverse_holder", tolerance, details)
    logger.info(f"check_reverse_holder: passed={report.passed}, worst slack {report.worst_slack:.3g}")
    return report


def check_easytosee(trials: int = 200, seed: int = 0, jobs: int = 1,
                    tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    0 <= e^{-x} - (1 - x/y)^y <= 1/y on a grid of y in [1, 10^4], x in [0, y]

    Deterministic; trials sets the number of y values.
    """
    tracker = SlackTracker()
    peak = 0.0
    for y in np.geomspace(1.0, 1e4, max(2, trials)):
        x = np.linspace(0.0, y, 2001)
        gap = easytosee_gap(x, np.full_like(x, y))
        i_low = int(np.argmin(gap))
        i_high = int(np.argmax(gap))
        tracker.update(gap[i_low], {"x": x[i_low], "y": y, "side": "lower"})
        tracker.update(1.0 / y - gap[i_high], {"x": x[i_high], "y": y, "side": "upper"})
        peak = max(peak, float(y * gap[i_high]))
    report = tracker.report("check_easytosee", tolerance, {"max_scaled_gap": peak})
    logger.info(f"check_easytosee: passed={report.passed}, max y*gap {peak:.6f}")
    return report
