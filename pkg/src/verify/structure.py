"""
Structural checks: FKG, monotonicity on stars, small-player optimality and
the stay-probability bound
"""

import logging
import math
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ..core.cube import BooleanFunction, CubeFunction, apply_noise
from ..core.errors import PreconditionError, RhoOutOfRange
from ..core.gaussian import geometric_k_grid, naive_power_bound, noise_exponent, rate_slope_diagnostic
from ..core.markov import StayQuery, aks_bound, metropolis_chain, stay_probability_exact
from ..core.nicd import NicdInstance, label_measure, path_instance, random_tree_edges, star_instance
from ..core.search import dictator_class, exhaustive_protocol_values, family_tables
from .report import DEFAULT_TOLERANCE, CheckReport, SlackTracker
from .sampling import run_trials

logger = logging.getLogger(__name__)

DEFAULT_TREE = ((0, 1), (1, 2), (1, 3), (3, 4), (3, 5))
MEMBERSHIP_TOLERANCE = 1e-12
STRICT_MARGIN = 1e-9


# ----------------------------------------------------------------------
# FKG condition of the label measure
# ----------------------------------------------------------------------

def _closure(labels: np.ndarray, generators: Sequence[int], increasing: bool) -> np.ndarray:
    """Up-set (or down-set) generated by the given labellings; bit 1 means -1"""
    mask = np.zeros(labels.shape, dtype=bool)
    for g in generators:
        if increasing:
            mask |= (labels & ~g) == 0
        else:
            mask |= (g & ~labels) == 0
    return mask


def check_fkg_measure(tree: Optional[Sequence[Sequence[int]]] = None, rho: float = 0.5, trials: int = 200,
                      seed: int = 0, jobs: int = 1, tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    Smallest-box condition of the tree label measure and positive
    association of monotone events

    For labellings that disagree in exactly two vertices u, v the ratio
    P(a)P(b) / P(a or b)P(a and b) must be ((1-rho)/(1+rho))^2 when u, v are
    neighbours and 1 otherwise. Sampled increasing events A, B must satisfy
    P(A and B) >= P(A)P(B), and an increasing A with a decreasing D must
    satisfy P(A and D) <= P(A)P(D).

    Raises:
        PreconditionError: rho = 1, where the measure has zeros
    """
    if rho >= 1.0:
        raise PreconditionError("the box condition is checked for rho < 1 only")
    edges = [tuple(e) for e in (tree if tree is not None else DEFAULT_TREE)]
    inst = NicdInstance(len(edges) + 1, edges, rho, 1)
    measure = label_measure(inst)
    labels = np.arange(measure.size, dtype=np.int64)
    neighbor_ratio = ((1.0 - rho) / (1.0 + rho)) ** 2
    tracker = SlackTracker()
    max_ratio_error = 0.0
    for u in range(inst.vertex_count):
        for v in range(u + 1, inst.vertex_count):
            base = labels[(((labels >> u) | (labels >> v)) & 1) == 0]
            first, second = base | (1 << v), base | (1 << u)
            join, meet = base, base | (1 << u) | (1 << v)
            ratio = measure[first] * measure[second] / (measure[join] * measure[meet])
            expected = neighbor_ratio if (u, v) in inst.edges else 1.0
            error = float(np.max(np.abs(ratio - expected)))
            max_ratio_error = max(max_ratio_error, error)
            i = int(np.argmax(ratio))
            tracker.update(1.0 - ratio[i], {"pair": [u, v], "label": int(base[i]), "ratio": ratio[i]})
            tracker.update(-error, {"pair": [u, v], "expected_ratio": expected})

    def trial(rng: np.random.Generator):
        count = 1 << inst.vertex_count
        up = _closure(labels, rng.integers(count, size=int(rng.integers(1, 4))), True)
        other_up = _closure(labels, rng.integers(count, size=int(rng.integers(1, 4))), True)
        down = _closure(labels, rng.integers(count, size=int(rng.integers(1, 4))), False)
        p_up, p_other, p_down = measure[up].sum(), measure[other_up].sum(), measure[down].sum()
        together = measure[up & other_up].sum() - p_up * p_other
        opposed = p_up * p_down - measure[up & down].sum()
        return min(together, opposed), {"increasing": p_up, "second_increasing": p_other, "decreasing": p_down}

    tracker = tracker.merge(run_trials(trial, seed, trials, jobs))
    details = {"vertices": inst.vertex_count, "neighbor_ratio": neighbor_ratio, "max_ratio_error": max_ratio_error}
    report = tracker.report("check_fkg_measure", tolerance, details)
    logger.info(f"check_fkg_measure: passed={report.passed}, max ratio error {max_ratio_error:.3g}")
    return report


# ----------------------------------------------------------------------
# Stars with a playing center
# ----------------------------------------------------------------------

def _log_moments(accept: np.ndarray, n: int, rho: float, powers: np.ndarray) -> np.ndarray:
    """log E[1_A (T_rho 1_A)^m] for every m in powers"""
    h = apply_noise(accept.astype(float), n, rho)[accept]
    with np.errstate(divide="ignore"):
        log_h = np.log(h)
    return logsumexp(np.outer(powers, log_h), axis=1) - n * math.log(2.0)


def log_center_star_success(f: BooleanFunction, rho: float, ks: Sequence[int]) -> np.ndarray:
    """
    log success of the simple protocol f on a k-leaf star where the center
    also plays, for every k in ks
    """
    powers = np.asarray(ks, dtype=float)
    plus = _log_moments(f.accept_set(), f.n, rho, powers)
    minus = _log_moments(~f.accept_set(), f.n, rho, powers)
    return np.logaddexp(plus, minus)


def conditional_hit_terms(accept: np.ndarray, n: int, rho: float, ell_max: int) -> np.ndarray:
    """
    Probability that a fresh rho-correlated copy of the center lands in A
    given that the center and l leaves landed there, for l = 0..ell_max
    """
    logs = _log_moments(accept, n, rho, np.arange(ell_max + 2, dtype=float))
    return np.exp(np.diff(logs))


def check_conditional_hit_monotonicity(n: int = 5, rho: float = 0.5, ell_max: int = 30,
                                       tolerance: float = MEMBERSHIP_TOLERANCE) -> CheckReport:
    """
    The conditional hit probabilities of the majority set are nondecreasing
    in the number of leaves already known to be inside

    Raises:
        PreconditionError: n even, n > 9 or ell_max < 1
    """
    if n % 2 == 0 or not 1 <= n <= 9:
        raise PreconditionError(f"n must be odd and at most 9, got {n}")
    if ell_max < 1:
        raise PreconditionError(f"ell_max must be positive, got {ell_max}")
    if not 0.0 <= rho <= 1.0:
        raise RhoOutOfRange(f"rho must lie in [0, 1], got {rho}")
    accept = BooleanFunction.majority(n, n).accept_set()
    terms = conditional_hit_terms(accept, n, rho, ell_max)
    tracker = SlackTracker()
    steps = np.diff(terms)
    for ell, step in enumerate(steps):
        tracker.update(step, {"ell": ell, "term": terms[ell], "next_term": terms[ell + 1]})
    details = {"n": n, "rho": rho, "terms": terms.tolist(), "dictator_term": 0.5 + 0.5 * rho}
    report = tracker.report("check_conditional_hit_monotonicity", tolerance, details)
    logger.info(f"check_conditional_hit_monotonicity: passed={report.passed}, first term {terms[0]:.6f}")
    return report


def check_maj_crossover(rho: float = 0.9, n: int = 5, r: int = 3, k_max: int = 50,
                        tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    Once majority of r coordinates does at least as well as a dictator on
    the k-leaf star (center playing), it keeps doing so for every larger k;
    likewise for strictly better

    Raises:
        PreconditionError: r even or outside 1..n, or k_max < 2
    """
    if r % 2 == 0 or not 1 <= r <= n:
        raise PreconditionError(f"r must be odd and lie in 1..{n}, got {r}")
    if k_max < 2:
        raise PreconditionError(f"k_max must be at least 2, got {k_max}")
    if not 0.0 < rho < 1.0:
        raise RhoOutOfRange(f"rho must lie in (0, 1), got {rho}")
    ks = np.arange(1, k_max + 1)
    log_majority = log_center_star_success(BooleanFunction.majority(n, r), rho, ks)
    log_dictator = log_center_star_success(BooleanFunction.dictator(n, 1), rho, ks)
    ratio = np.exp(log_majority - log_dictator)
    member = ratio >= 1.0 - MEMBERSHIP_TOLERANCE
    strict = ratio > 1.0 + MEMBERSHIP_TOLERANCE
    tracker = SlackTracker()
    for i in np.flatnonzero(member[:-1]):
        tracker.update(ratio[i + 1] - min(ratio[i], 1.0),
                       {"k": int(ks[i]), "ratio": ratio[i], "next_ratio": ratio[i + 1], "strict": bool(strict[i])})
    for i in np.flatnonzero(strict[:-1]):
        tracker.update(ratio[i + 1] - 1.0 - MEMBERSHIP_TOLERANCE,
                       {"k": int(ks[i]), "ratio": ratio[i], "next_ratio": ratio[i + 1], "strict": True})
    crossover = int(ks[member][0]) if member.any() else None
    strict_crossover = int(ks[strict][0]) if strict.any() else None
    details = {
        "rho": rho, "n": n, "r": r, "k_max": k_max,
        "crossover": crossover, "strict_crossover": strict_crossover,
        "members": int(member.sum()), "strict_members": int(strict.sum()),
        "ratio_at_k_max": float(ratio[-1]),
    }
    report = tracker.report("check_maj_crossover", tolerance, details)
    logger.info(f"check_maj_crossover: passed={report.passed}, crossover k={crossover}")
    return report


def _default_candidates(n: int) -> dict:
    points = np.arange(1 << n)
    subcube = ((points & 0b11) == 0).astype(float)
    return {
        "dictator_half_cube": BooleanFunction.dictator(n, 1).output_indicator(1),
        "majority": BooleanFunction.majority(n, n if n % 2 else n - 1).output_indicator(1),
        "subcube": CubeFunction(n, subcube),
    }


def check_tpower_diagnostic(rho: float = 0.5, k_grid: Optional[Sequence[int]] = None,
                            candidates: Optional[Mapping[str, CubeFunction]] = None, n: int = 9,
                            tolerance: float = DEFAULT_TOLERANCE) -> CheckReport:
    """
    Log-log slope of E[(T_rho f)^k] against k is at most -nu + 0.2 for
    zero-one f with E[f] <= 1/2

    Raises:
        PreconditionError: a candidate is not zero-one, is empty or has
            mean above 1/2
        RhoOutOfRange: rho outside (0, 1)
    """
    if not 0.0 < rho < 1.0:
        raise RhoOutOfRange(f"rho must lie in (0, 1), got {rho}")
    nu = noise_exponent(rho)
    ks = sorted(set(int(k) for k in (k_grid or geometric_k_grid(10, 1024, 12))))
    if len(ks) < 2 or ks[0] < 1:
        raise PreconditionError("the k grid needs at least two positive values")
    candidates = dict(candidates) if candidates is not None else _default_candidates(max(n, 2))
    for name, f in candidates.items():
        if not f.is_zero_one() or not f.values.any():
            raise PreconditionError(f"candidate {name} must be a nonempty zero-one function")
        if f.mean() > 0.5:
            raise PreconditionError(f"candidate {name} has mean {f.mean()} above 1/2")
    log_k = np.log(np.array(ks, dtype=float))
    tracker = SlackTracker()
    slopes = {}
    for name, f in candidates.items():
        h = apply_noise(f.values, f.n, rho)
        with np.errstate(divide="ignore"):
            log_h = np.log(h)
        log_power = logsumexp(np.outer(np.array(ks, dtype=float), log_h), axis=1) - f.n * math.log(2.0)
        slope = float(np.polyfit(log_k, log_power, 1)[0])
        slopes[name] = slope
        tracker.update(-nu + 0.2 - slope, {"candidate": name, "slope": slope, "nu": nu})
    try:
        halfspace = rate_slope_diagnostic(rho, ks).to_dict()
    except PreconditionError:
        halfspace = None
    details = {
        "nu": nu,
        "k_min": ks[0],
        "k_max": ks[-1],
        "slopes": slopes,
        "naive_bound": {str(k): naive_power_bound(k, rho) for k in (ks[0], ks[-1])},
        "naive_limit": 0.5 ** (1.0 / (rho * rho)),
        "gaussian_halfspace": halfspace,
    }
    report = tracker.report("check_tpower_diagnostic", tolerance, details)
    logger.info(f"check_tpower_diagnostic: passed={report.passed}, slopes {slopes}")
    return report


# ----------------------------------------------------------------------
# Few players, two bits
# ----------------------------------------------------------------------

def small_player_instances(rho: float, seed: int, random_trees: int) -> list:
    instances = [
        path_instance(2, rho, 2),
        path_instance(3, rho, 2),
        path_instance(3, rho, 2, [0, 3]),
        star_instance(3, rho, 2),
    ]
    rng = np.random.default_rng(seed)
    for _ in range(random_trees):
        count = int(rng.integers(3, 7))
        players = rng.choice(count, size=int(rng.integers(2, 4)), replace=False)
        instances.append(NicdInstance(count, random_tree_edges(rng, count), rho, 2, players.tolist()))
    return instances


def check_small_player_optimality(trees: Optional[Sequence[NicdInstance]] = None, rho: float = 0.5,
                                  seed: int = 0, random_trees: int = 4, tolerance: float = 0.0) -> CheckReport:
    """
    On two-bit instances with few players, the four simple +-dictator
    protocols are the only maximisers among all balanced protocols

    The slack is the margin by which the worst simple dictator protocol
    beats every other protocol, less 1e-9.

    Raises:
        PreconditionError: an instance with n != 2
    """
    instances = list(trees) if trees is not None else small_player_instances(rho, seed, random_trees)
    functions = family_tables("balanced", 2)[1]
    dictators = [i for i, f in enumerate(functions) if f in dictator_class(2)]
    tracker = SlackTracker()
    searched = 0
    for inst in instances:
        if inst.n != 2:
            raise PreconditionError(f"small-player optimality is checked at n = 2, got n = {inst.n}")
        combos, values = exhaustive_protocol_values(inst, functions)
        searched += len(combos)
        simple_dictator = np.isin(combos[:, 0], dictators) & np.all(combos == combos[:, :1], axis=1)
        margin = float(values[simple_dictator].min() - values[~simple_dictator].max())
        tracker.update(margin - STRICT_MARGIN, {"instance": inst.describe(), "dictator_value": values[simple_dictator].max()})
    report = tracker.report("check_small_player_optimality", tolerance, {"instances": len(instances), "protocols": searched})
    logger.info(f"check_small_player_optimality: passed={report.passed} over {searched} protocols")
    return report


# ----------------------------------------------------------------------
# Stay probabilities of reversible chains
# ----------------------------------------------------------------------

def check_aks_bound(trials: int = 1000, max_states: int = 64, max_steps: int = 10, seed: int = 0, jobs: int = 1,
                    tolerance: float = 1e-12, solver: str = "lapack") -> CheckReport:
    """
    Exact stay probability <= the spectral-gap bound for random Metropolis
    chains sharing one stationary measure and random sets
    """
    if max_states < 1 or max_steps < 1:
        raise PreconditionError("max_states and max_steps must be positive")

    def trial(rng: np.random.Generator):
        size = int(rng.integers(1, max_states + 1))
        steps = int(rng.integers(1, max_steps + 1))
        pi = np.full(size, 1.0 / size) if rng.random() < 0.2 else rng.dirichlet(np.ones(size))
        if rng.random() < 0.3:
            chain = metropolis_chain(rng, pi)
            chains = [chain] * steps
        else:
            chains = [metropolis_chain(rng, pi) for _ in range(steps)]
        if rng.random() < 0.3:
            states = rng.random(size) < rng.uniform(0.1, 0.9)
            sets = [states] * (steps + 1)
        else:
            sets = [rng.random(size) < rng.uniform(0.1, 0.9) for _ in range(steps + 1)]
        q = StayQuery(chains, sets)
        exact, bound = stay_probability_exact(q), aks_bound(q, solver)
        witness = {"states": size, "steps": steps, "measures": q.measures(), "exact": exact, "bound": bound}
        return bound - exact, witness

    tracker = run_trials(trial, seed, trials, jobs)
    report = tracker.report("check_aks_bound", tolerance)
    logger.info(f"check_aks_bound: passed={report.passed}, worst slack {report.worst_slack:.3g}")
    return report
