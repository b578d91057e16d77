"""
Isoperimetric and random-walk checks on the cube
"""

import logging
import math
from typing import Sequence

import numpy as np

from ..core.cube import CubeFunction, correlated_expectation, lazy_walk_probability, subset_sizes
from ..core.gaussian import (
    bvn_orthant,
    hamming_ball_limit_upper,
    isop_conditional_bound,
    isop_lower_bound,
    walk_bound,
    walk_error_term,
)
from .report import DEFAULT_TOLERANCE, CheckReport, SlackTracker
from .sampling import hamming_ball, random_set, run_trials

logger = logging.getLogger(__name__)

WALK_TAUS = (0.2, 0.5, 1.0)
BALL_N = 14
BALL_RHOS = (0.2, 0.5)
BALL_LEVELS = (1.0, 1.5, 2.0)
BALL_FACTOR = 4.0


def _size_parameter(fraction: float) -> float:
    """s with fraction = exp(-s^2/2)"""
    return math.sqrt(max(-2.0 * math.log(fraction), 0.0))


def pair_probability(first: np.ndarray, second: np.ndarray, n: int, rho: float) -> float:
    """Pr[x in S, y in T] for a rho-correlated pair"""
    return correlated_expectation(CubeFunction.indicator(n, first), CubeFunction.indicator(n, second), rho)


def opposed_balls(n: int, s: float, t: float) -> tuple:
    """S = {sum x <= -s sqrt(n)} and T = {sum x >= t sqrt(n)}"""
    sums = n - 2 * subset_sizes(n)
    return sums <= -s * math.sqrt(n), sums >= t * math.sqrt(n)


def opposed_ball_rows(n: int = BALL_N, rhos: Sequence[float] = BALL_RHOS,
                      levels: Sequence[float] = BALL_LEVELS) -> list:
    """Exact Pr[x in S, y in T] for opposed balls next to hamming_ball_limit_upper"""
    rows = []
    for rho in rhos:
        for s in levels:
            for t in levels:
                first, second = opposed_balls(n, s, t)
                exact = pair_probability(first, second, n, rho)
                upper = hamming_ball_limit_upper(s, t, rho)
                rows.append({"n": n, "s": s, "t": t, "rho": rho, "exact": exact, "limit_upper": upper,
                             "exact_over_upper": exact / upper})
    return rows


def track_opposed_balls(tracker: SlackTracker, n: int = BALL_N, rhos: Sequence[float] = BALL_RHOS,
                        factor: float = BALL_FACTOR) -> list:
    """Each opposed-ball probability must stay within factor times its limit upper estimate"""
    rows = opposed_ball_rows(n, rhos)
    for row in rows:
        tracker.update(factor * row["limit_upper"] - row["exact"], {"example": "opposed balls", **row})
    return rows


def third_size_example(n: int = 12, rho: float = 0.4) -> dict:
    """
    Opposed Hamming-ball-style sets of size floor(2^n/3) against the
    conditional bound sigma^{(1+rho)/(1-rho)}
    """
    count = (1 << n) // 3
    first = hamming_ball(n, count, 1)
    second = hamming_ball(n, count, -1)
    sigma = count / float(1 << n)
    conditional = pair_probability(first, second, n, rho) / sigma
    return {
        "n": n,
        "rho": rho,
        "sigma": sigma,
        "conditional_probability": conditional,
        "bound_at_sigma": isop_conditional_bound(sigma, 1.0, rho),
        "bound_at_one_third": isop_conditional_bound(1.0 / 3.0, 1.0, rho),
    }


def check_isoperimetric_sets(n: int = 12, trials: int = 1000, seed: int = 0, jobs: int = 1,
                             tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    Pr[x in S, y in T] >= exp(-(s^2 + 2 rho s t + t^2) / (2 (1 - rho^2)))
    for random and Hamming-ball sets, sizes exp(-s^2/2) 2^n and exp(-t^2/2) 2^n
    """
    def trial(rng: np.random.Generator):
        m = int(rng.integers(1, n + 1))
        rho = float(rng.uniform(0.0, 0.95))
        if rng.random() < 0.3:
            size = 1 << m
            first = hamming_ball(m, int(rng.integers(1, size + 1)), 1)
            second = hamming_ball(m, int(rng.integers(1, size + 1)), -1)
        else:
            first, second = random_set(rng, m), random_set(rng, m)
        s = _size_parameter(first.mean())
        t = _size_parameter(second.mean())
        exact = pair_probability(first, second, m, rho)
        bound = isop_lower_bound(s, t, rho)
        return exact - bound, {"n": m, "rho": rho, "s": s, "t": t, "exact": exact, "bound": bound}

    tracker = run_trials(trial, seed, trials, jobs)
    example = third_size_example(max(4, min(n, 12)))
    tracker.update(example["conditional_probability"] - example["bound_at_sigma"],
                   {"example": "third-size opposed balls", **example})
    balls = track_opposed_balls(tracker)
    report = tracker.report("check_isoperimetric_sets", tolerance,
                            {"third_size_example": example, "opposed_balls": balls})
    logger.info(f"check_isoperimetric_sets: passed={report.passed}, worst slack {report.worst_slack:.3g}")
    return report


def check_hamming_tightness(rhos: Sequence[float] = (0.2, 0.5, 0.8), grid: int = 11, n: int = 14,
                            tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    bvn_orthant(s, t, -rho) <= hamming_ball_limit_upper(s, t, rho) on a grid
    of s, t in [1, 3]. Exact opposed-ball probabilities at n for s, t in
    {1, 1.5, 2} must stay within a factor 4 of the upper estimate for
    rho <= 0.5; larger rho is only reported, the lattice being too coarse
    """
    tracker = SlackTracker()
    values = np.linspace(1.0, 3.0, grid)
    for rho in rhos:
        for s in values:
            for t in values:
                orthant = bvn_orthant(float(s), float(t), -rho)
                upper = hamming_ball_limit_upper(float(s), float(t), rho)
                tracker.update(upper - orthant, {"s": s, "t": t, "rho": rho, "orthant": orthant, "upper": upper})
    asserted = [rho for rho in rhos if rho <= max(BALL_RHOS)]
    balls = track_opposed_balls(tracker, n, asserted)
    balls += opposed_ball_rows(n, [rho for rho in rhos if rho not in asserted])
    report = tracker.report("check_hamming_tightness", tolerance, {"opposed_balls": balls})
    logger.info(f"check_hamming_tightness: passed={report.passed}")
    return report


def check_walk_bound(n: int = 12, trials: int = 300, seed: int = 0, jobs: int = 1,
                     tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    Lazy-walk probability >= sigma^{walk_exponent} - error term, for random
    S, T and tau in {0.2, 0.5, 1.0}; the walk length tau*n is rounded and
    tau recomputed from the rounded length
    """
    def trial(rng: np.random.Generator):
        m = int(rng.integers(5, max(5, n) + 1))
        tau = float(WALK_TAUS[int(rng.integers(len(WALK_TAUS)))])
        steps = int(round(tau * m))
        tau_eff = steps / m
        if rng.random() < 0.3:
            size = 1 << m
            start = hamming_ball(m, int(rng.integers(1, size)), 1)
            target = hamming_ball(m, int(rng.integers(1, size)), -1)
        else:
            start = random_set(rng, m, float(rng.uniform(0.02, 0.9)))
            target = random_set(rng, m, float(rng.uniform(0.02, 0.9)))
        sigma = float(start.mean())
        if sigma >= 1.0:
            start[0] = False
            sigma = float(start.mean())
        alpha = math.log(target.mean()) / math.log(sigma)
        exact = lazy_walk_probability(CubeFunction.indicator(m, start), CubeFunction.indicator(m, target), steps)
        main = walk_bound(sigma, alpha, tau_eff, m)
        error = walk_error_term(sigma, alpha, tau_eff, m)
        witness = {"n": m, "tau": tau_eff, "steps": steps, "sigma": sigma, "alpha": alpha,
                   "exact": exact, "main": main, "error": error}
        return exact - (main - error), witness

    tracker = run_trials(trial, seed, trials, jobs)
    report = tracker.report("check_walk_bound", tolerance)
    logger.info(f"check_walk_bound: passed={report.passed}, worst slack {report.worst_slack:.3g}")
    return report
