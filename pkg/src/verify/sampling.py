"""
Seeded sampling of test inputs

All randomness flows from one 64-bit seed. Trials are cut into fixed-size
blocks, each with its own child generator, so results are the same for any
number of worker threads.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..core.cube import BooleanFunction, CubeFunction, subset_sizes
from ..core.nicd import NicdInstance, Protocol, random_tree_edges
from .report import SlackTracker

logger = logging.getLogger(__name__)

TRIAL_BLOCK = 1000

TrialFn = Callable[[np.random.Generator], Tuple[float, dict]]


def block_generators(seed: int, trials: int) -> List[Tuple[np.random.Generator, int]]:
    """One child generator per block of TRIAL_BLOCK trials"""
    blocks = max(1, -(-trials // TRIAL_BLOCK))
    children = np.random.SeedSequence(seed).spawn(blocks)
    sizes = [min(TRIAL_BLOCK, trials - b * TRIAL_BLOCK) for b in range(blocks)]
    return [(np.random.default_rng(c), s) for c, s in zip(children, sizes) if s > 0]


def run_trials(trial: TrialFn, seed: int, trials: int, jobs: int = 1) -> SlackTracker:
    """
    Run a trial function over seeded blocks and merge the slack trackers

    Args:
        trial: Draws one case from the generator and returns (slack, witness)
        seed: Master seed
        trials: Trial budget
        jobs: Worker threads
    """
    def run_block(block: Tuple[np.random.Generator, int]) -> SlackTracker:
        rng, count = block
        tracker = SlackTracker()
        for _ in range(count):
            slack, witness = trial(rng)
            tracker.update(slack, witness)
        return tracker

    blocks = block_generators(seed, trials)
    if jobs > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            trackers = list(executor.map(run_block, blocks))
    else:
        trackers = [run_block(b) for b in blocks]
    merged = SlackTracker()
    for tracker in trackers:
        merged = merged.merge(tracker)
    logger.debug(f"Ran {merged.count} trials in {len(blocks)} block(s), worst slack {merged.worst:.3g}")
    return merged


# ----------------------------------------------------------------------
# Functions and sets
# ----------------------------------------------------------------------

def random_signed_function(rng: np.random.Generator, n: int) -> CubeFunction:
    """Gaussian entries, occasionally a constant"""
    if rng.random() < 0.05:
        return CubeFunction.constant(n, float(rng.normal()) or 1.0)
    return CubeFunction(n, rng.normal(size=1 << n))


def random_nonnegative_function(rng: np.random.Generator, n: int, allow_zeros: bool = True) -> CubeFunction:
    """
    Exponentials of centered Gaussians plus boundary families

    With small probability the result is a constant, an indicator of a
    random nonempty set or a positive function with some entries zeroed.
    """
    size = 1 << n
    u = rng.random()
    if u < 0.05:
        return CubeFunction.constant(n, 1.0)
    if allow_zeros and u < 0.15:
        return CubeFunction(n, random_set(rng, n).astype(float))
    values = np.exp(rng.normal(scale=rng.uniform(0.1, 2.0), size=size))
    if allow_zeros and u < 0.25:
        values[rng.random(size) < 0.3] = 0.0
        if not values.any():
            values[0] = 1.0
    return CubeFunction(n, values)


def random_set(rng: np.random.Generator, n: int, fraction: Optional[float] = None) -> np.ndarray:
    """Nonempty random subset of the cube as a boolean mask"""
    size = 1 << n
    if fraction is None:
        fraction = rng.uniform(0.02, 1.0)
    mask = rng.random(size) < fraction
    if not mask.any():
        mask[rng.integers(size)] = True
    return mask


def hamming_ball(n: int, count: int, center_sign: int = 1) -> np.ndarray:
    """
    The count points closest to the all-(center_sign) point

    Points are ordered by Hamming distance and then by index, so a size
    between two ball radii takes part of the outer layer.
    """
    distance = subset_sizes(n) if center_sign > 0 else n - subset_sizes(n)
    order = np.lexsort((np.arange(1 << n), distance))
    mask = np.zeros(1 << n, dtype=bool)
    mask[order[:count]] = True
    return mask


def random_balanced_function(rng: np.random.Generator, n: int) -> BooleanFunction:
    size = 1 << n
    accept = np.zeros(size, dtype=bool)
    accept[rng.permutation(size)[: size // 2]] = True
    return BooleanFunction.from_indicator(n, accept)


# ----------------------------------------------------------------------
# Instances
# ----------------------------------------------------------------------

def random_tree_instance(rng: np.random.Generator, max_vertices: int, n: int,
                         rho: Optional[float] = None, min_players: int = 1) -> NicdInstance:
    """Random tree with 1..max_vertices vertices and a random player set"""
    count = int(rng.integers(max(1, min_players), max_vertices + 1))
    edges = random_tree_edges(rng, count)
    if rho is None:
        rho = float(rng.choice([0.0, 1.0])) if rng.random() < 0.1 else float(rng.uniform(0.0, 1.0))
    players = [v for v in range(count) if rng.random() < 0.6]
    while len(players) < min(min_players, count) or not players:
        players = sorted(set(players) | {int(rng.integers(count))})
    return NicdInstance(count, edges, rho, n, players)


def random_protocol(rng: np.random.Generator, inst: NicdInstance) -> Protocol:
    return Protocol({v: random_balanced_function(rng, inst.n) for v in sorted(inst.players)})
