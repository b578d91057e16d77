"""
Protocol search

Enumerates candidate families of balanced functions, finds the best simple
protocol on an instance, runs the (small) exhaustive search over
non-simple protocols and scans star-plus-path trees for instances where
no simple protocol is optimal.

Candidate tables are always kept in increasing truth-table order so that
ties resolve to the smallest encoding, whatever the number of workers.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .cube import BooleanFunction, CorrelationParam, RhoLike, apply_noise, cube_points
from .errors import FamilyTooLarge, PreconditionError
from .gaussian import star_majority_limit
from .nicd import (
    NicdInstance,
    Protocol,
    path_closed_form,
    path_instance,
    star_instance,
    tree_agreement,
)

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-12
CHUNK_SIZE = 512


class Family(Enum):
    """Candidate families for simple-protocol searches"""
    BALANCED = "balanced"
    MONOTONE = "monotone"
    NAMED = "named"


MAX_BALANCED_N = 4
MAX_MONOTONE_N = 5


def _truth_strings(tables: np.ndarray) -> List[str]:
    return ["".join("1" if b else "0" for b in row) for row in tables]


def _sorted_tables(tables: np.ndarray) -> np.ndarray:
    order = sorted(range(len(tables)), key=_truth_strings(tables).__getitem__)
    out = tables[order]
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def balanced_tables(n: int) -> np.ndarray:
    """
    Accept tables of every balanced function on n bits

    Returns:
        Read-only (C(2^n, 2^{n-1}), 2^n) boolean array in truth-table order

    Raises:
        FamilyTooLarge: n > 4
    """
    if n > MAX_BALANCED_N:
        raise FamilyTooLarge(f"all balanced functions are enumerated only for n <= {MAX_BALANCED_N}, got {n}")
    size = 1 << n
    combos = np.array(list(itertools.combinations(range(size), size // 2)), dtype=np.int64)
    tables = np.zeros((len(combos), size), dtype=bool)
    np.put_along_axis(tables, combos, True, axis=1)
    return _sorted_tables(tables)


def _monotone_tables(n: int) -> np.ndarray:
    """All monotone accept tables on n bits (constants included)"""
    if n == 0:
        return np.array([[False], [True]])
    smaller = _monotone_tables(n - 1)
    rows = []
    # upper half is x_n = +1, lower half x_n = -1; lower must sit inside upper
    for upper in smaller:
        for lower in smaller:
            if not np.any(lower & ~upper):
                rows.append(np.concatenate([upper, lower]))
    return np.array(rows)


@lru_cache(maxsize=None)
def monotone_balanced_tables(n: int) -> np.ndarray:
    """
    Accept tables of every monotone balanced function on n bits

    Raises:
        FamilyTooLarge: n > 5
    """
    if n > MAX_MONOTONE_N:
        raise FamilyTooLarge(f"monotone balanced functions are enumerated only for n <= {MAX_MONOTONE_N}, got {n}")
    tables = _monotone_tables(n)
    balanced = tables[tables.sum(axis=1) == (1 << (n - 1))]
    return _sorted_tables(balanced)


def family_tables(family: Union[Family, str, Sequence[BooleanFunction]], n: int) -> Tuple[np.ndarray, List[BooleanFunction]]:
    """
    Candidate accept tables and the functions they stand for

    Args:
        family: Family member, its value, or an explicit list of functions
        n: Cube dimension
    """
    if isinstance(family, str):
        family = Family(family)
    if family is Family.BALANCED:
        tables = balanced_tables(n)
    elif family is Family.MONOTONE:
        tables = monotone_balanced_tables(n)
    elif family is Family.NAMED:
        raise PreconditionError("a named family needs an explicit list of functions")
    else:
        functions = list(family)
        if not functions:
            raise PreconditionError("the named family is empty")
        for f in functions:
            if f.n != n:
                raise PreconditionError(f"named function {f.label} has n = {f.n}, expected {n}")
        return np.array([f.accept_set() for f in functions]), functions
    return tables, [BooleanFunction.from_indicator(n, row) for row in tables]


def _in_chunks(count: int, size: int) -> List[slice]:
    return [slice(start, min(start + size, count)) for start in range(0, count, size)]


def simple_protocol_values(inst: NicdInstance, tables: np.ndarray, jobs: int = 1) -> np.ndarray:
    """
    Success probability of the simple protocol for every candidate table

    Chunks are evaluated on up to `jobs` threads and reassembled in order,
    so the result does not depend on the number of workers.
    """
    def evaluate(part: slice) -> np.ndarray:
        accept = {v: tables[part] for v in inst.players}
        return np.atleast_1d(tree_agreement(inst, accept))

    chunks = _in_chunks(len(tables), CHUNK_SIZE)
    if jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            parts = list(executor.map(evaluate, chunks))
    else:
        parts = [evaluate(c) for c in chunks]
    return np.concatenate(parts)


def _pick_best(values: np.ndarray, tables: np.ndarray) -> int:
    best = values.max()
    tied = np.flatnonzero(values >= best - TIE_TOLERANCE)
    strings = _truth_strings(tables[tied])
    return int(tied[min(range(len(tied)), key=strings.__getitem__)])


def best_simple_protocol(inst: NicdInstance, family: Union[Family, str, Sequence[BooleanFunction]] = Family.BALANCED,
                         jobs: int = 1) -> Tuple[BooleanFunction, float]:
    """
    Best simple protocol drawn from a family

    Returns:
        (argmax function, its success probability); values within 1e-12 of
        the maximum tie and resolve to the smallest truth table

    Raises:
        FamilyTooLarge: the family cannot be enumerated at inst.n
    """
    tables, functions = family_tables(family, inst.n)
    logger.info(f"Searching {len(tables)} simple protocols on {inst.describe()}")
    values = simple_protocol_values(inst, tables, jobs)
    index = _pick_best(values, tables)
    logger.info(f"Best simple protocol {functions[index].label} with success {values[index]:.12g}")
    return functions[index], float(values[index])


@dataclass
class ExhaustiveResult:
    """Maximum over every protocol drawn from a function list"""
    value: float
    protocols: List[Protocol]
    searched: int


MAX_EXHAUSTIVE_N = 2
MAX_EXHAUSTIVE_PLAYERS = 4


def _check_exhaustive_size(inst: NicdInstance):
    if inst.n > MAX_EXHAUSTIVE_N or len(inst.players) > MAX_EXHAUSTIVE_PLAYERS:
        raise FamilyTooLarge(
            f"exhaustive search needs n <= {MAX_EXHAUSTIVE_N} and at most {MAX_EXHAUSTIVE_PLAYERS} players, "
            f"got n = {inst.n} and {len(inst.players)} players")


def exhaustive_protocol_values(inst: NicdInstance, functions: Sequence[BooleanFunction]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Success of every protocol assigning one of the functions to each player

    Returns:
        (combos, values): combos[i, j] indexes the function of the j-th
        player in increasing vertex order

    Raises:
        FamilyTooLarge: n > 2 or more than 4 players
    """
    _check_exhaustive_size(inst)
    players = sorted(inst.players)
    tables = np.array([f.accept_set() for f in functions])
    combos = np.array(list(itertools.product(range(len(functions)), repeat=len(players))), dtype=np.int64)
    accept = {v: tables[combos[:, i]] for i, v in enumerate(players)}
    return combos, np.atleast_1d(tree_agreement(inst, accept))


def exhaustive_protocol_search(inst: NicdInstance, functions: Optional[Sequence[BooleanFunction]] = None,
                               allow_unbalanced: bool = False) -> ExhaustiveResult:
    """
    Search every (possibly non-simple) protocol over a list of functions

    Args:
        inst: Instance with n <= 2 and at most 4 players
        functions: Candidate functions; all balanced functions by default

    Raises:
        FamilyTooLarge: n > 2 or more than 4 players
    """
    _check_exhaustive_size(inst)
    if functions is None:
        functions = family_tables(Family.BALANCED, inst.n)[1]
    functions = list(functions)
    players = sorted(inst.players)
    combos, values = exhaustive_protocol_values(inst, functions)
    best = float(values.max())
    winners = [
        Protocol({v: functions[c] for v, c in zip(players, combo)}, allow_unbalanced)
        for combo in combos[values >= best - TIE_TOLERANCE]
    ]
    logger.info(f"Exhaustive search over {len(combos)} protocols: best {best:.12g}, {len(winners)} maximiser(s)")
    return ExhaustiveResult(best, winners, len(combos))


def dictator_class(n: int) -> List[BooleanFunction]:
    """The 2n functions +-x_i"""
    out = []
    for j in range(1, n + 1):
        d = BooleanFunction.dictator(n, j)
        out.extend([d, d.negated()])
    return out


def is_dictator_table(table: np.ndarray, n: int) -> bool:
    points = cube_points(n)
    return any(np.array_equal(table, points[:, j] > 0) or np.array_equal(table, points[:, j] < 0)
               for j in range(n))


# ----------------------------------------------------------------------
# Star-plus-path trees
# ----------------------------------------------------------------------

def _star_path_tables(path_accept: np.ndarray, leaf_accept: np.ndarray, n: int, rho: float,
                      k1_max: int, k2_max: int) -> np.ndarray:
    """
    Success tables for a batch of (path function, leaf function) pairs

    Args:
        path_accept: (F, 2^n) accept tables used on the center and path
        leaf_accept: (F, 2^n) accept tables used on the leaves

    Returns:
        (F, k1_max + 1, k2_max + 1) success probabilities
    """
    batch, size = path_accept.shape
    total = np.zeros((batch, k1_max + 1, k2_max + 1))
    for b in (True, False):
        center = (path_accept == b).astype(float)
        leaf_msg = apply_noise((leaf_accept == b).astype(float), n, rho)
        star = np.empty((batch, k1_max + 1, size))
        star[:, 0, :] = 1.0
        for k1 in range(1, k1_max + 1):
            star[:, k1, :] = star[:, k1 - 1, :] * leaf_msg
        path = np.empty((batch, k2_max + 1, size))
        path[:, 0, :] = 1.0
        for k2 in range(1, k2_max + 1):
            path[:, k2, :] = apply_noise(center * path[:, k2 - 1, :], n, rho)
        total += np.matmul(star * center[:, None, :], np.swapaxes(path, 1, 2)) / size
    return total


def star_path_success_table(f_path: BooleanFunction, f_leaf: BooleanFunction, rho: RhoLike,
                            k1_max: int, k2_max: int) -> np.ndarray:
    """
    Exact success on every star-plus-path tree up to the given sizes

    The protocol uses f_path on the center and path vertices and f_leaf on
    the star leaves; every vertex plays.

    Returns:
        (k1_max + 1, k2_max + 1) array, entry [k1, k2] for the tree built by
        star_plus_path_instance(k1, k2, ...)
    """
    if f_path.n != f_leaf.n:
        raise PreconditionError("path and leaf functions must share n")
    r = CorrelationParam.coerce(rho).rho
    table = _star_path_tables(f_path.accept_set()[None, :], f_leaf.accept_set()[None, :], f_path.n, r,
                              k1_max, k2_max)
    return table[0]


def best_simple_star_path(rho: RhoLike, n: int, k1_max: int, k2_max: int,
                          family: Union[Family, str] = Family.BALANCED, jobs: int = 1,
                          chunk: int = 64) -> Tuple[np.ndarray, np.ndarray, List[BooleanFunction]]:
    """
    Best simple protocol value on every star-plus-path tree

    Returns:
        (best values, argmax candidate indices, candidate functions), the
        first two of shape (k1_max + 1, k2_max + 1)
    """
    r = CorrelationParam.coerce(rho).rho
    tables, functions = family_tables(family, n)

    def evaluate(part: slice) -> Tuple[np.ndarray, np.ndarray]:
        values = _star_path_tables(tables[part], tables[part], n, r, k1_max, k2_max)
        return values.max(axis=0), values.argmax(axis=0) + part.start

    chunks = _in_chunks(len(tables), chunk)
    if jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(evaluate, chunks))
    else:
        results = [evaluate(c) for c in chunks]

    best = np.full((k1_max + 1, k2_max + 1), -1.0)
    arg = np.zeros((k1_max + 1, k2_max + 1), dtype=np.int64)
    # chunks are in truth-table order, so only a strict improvement moves the argmax
    for values, idx in results:
        better = values > best + TIE_TOLERANCE
        best = np.where(better, values, best)
        arg = np.where(better, idx, arg)
    return best, arg, functions


@dataclass
class CounterexampleHit:
    k1: int
    k2: int
    mixed: float
    best_simple: float
    best_function: str

    @property
    def ratio(self) -> float:
        return self.mixed / self.best_simple


@dataclass
class CounterexampleReport:
    """Star-plus-path trees on which the mixed protocol beats every simple one"""
    rho: float
    n: int
    family: str
    k1_values: List[int]
    k2_values: List[int]
    hits: List[CounterexampleHit] = field(default_factory=list)

    @property
    def first(self) -> Optional[CounterexampleHit]:
        """Hit with the fewest vertices, then the fewest leaves"""
        if not self.hits:
            return None
        return min(self.hits, key=lambda h: (h.k1 + h.k2, h.k1))

    def to_dict(self) -> dict:
        first = self.first
        return {
            "rho": self.rho,
            "n": self.n,
            "family": self.family,
            "k1_range": [min(self.k1_values), max(self.k1_values)],
            "k2_range": [min(self.k2_values), max(self.k2_values)],
            "hit_count": len(self.hits),
            "first": None if first is None else vars(first),
            "hits": [vars(h) for h in self.hits],
        }


def mixed_protocol_functions(n: int) -> Tuple[BooleanFunction, BooleanFunction]:
    """Dictator on the center and path, majority of the last three bits on the leaves"""
    return BooleanFunction.dictator(n, 1), BooleanFunction.majority(n, 3, [n - 2, n - 1, n])


def counterexample_search(rho: RhoLike, n: int, k1_range: Iterable[int], k2_range: Iterable[int],
                          family: Union[Family, str] = Family.BALANCED, jobs: int = 1) -> CounterexampleReport:
    """
    Scan star-plus-path trees for instances without a simple optimal protocol

    For every (k1, k2) the mixed protocol (dictator on the center and the
    k2 path vertices, majority of the last three bits on the k1 leaves) is
    compared with the best simple protocol over the family. Pairs where the
    mixed protocol is strictly better are reported.

    Raises:
        PreconditionError: n < 4
    """
    if n < 4:
        raise PreconditionError(f"the mixed protocol needs n >= 4, got {n}")
    r = CorrelationParam.coerce(rho).rho
    k1_values = sorted(set(int(k) for k in k1_range))
    k2_values = sorted(set(int(k) for k in k2_range))
    if not k1_values or not k2_values or k1_values[0] < 0 or k2_values[0] < 0:
        raise PreconditionError("k1 and k2 ranges must be nonempty and nonnegative")
    k1_max, k2_max = k1_values[-1], k2_values[-1]
    family = Family(family) if isinstance(family, str) else family
    logger.info(f"Counterexample scan rho={r}, n={n}, k1<={k1_max}, k2<={k2_max}, family={family.value}")

    f_path, f_leaf = mixed_protocol_functions(n)
    mixed = star_path_success_table(f_path, f_leaf, r, k1_max, k2_max)
    best, arg, functions = best_simple_star_path(r, n, k1_max, k2_max, family, jobs)

    report = CounterexampleReport(r, n, family.value, k1_values, k2_values)
    for k1 in k1_values:
        for k2 in k2_values:
            m, s = float(mixed[k1, k2]), float(best[k1, k2])
            if m > s * (1.0 + 1e-9):
                report.hits.append(CounterexampleHit(k1, k2, m, s, functions[arg[k1, k2]].encoding))
    if report.hits:
        first = report.first
        logger.info(f"{len(report.hits)} counterexample(s); first at k1={first.k1}, k2={first.k2}")
    else:
        logger.warning("No counterexample in the scanned range")
    return report


# ----------------------------------------------------------------------
# Ratio experiments
# ----------------------------------------------------------------------

@dataclass
class PathRatio:
    k: int
    dictator: float
    best_other: float
    best_function: str
    ratio: float


def path_nondictator_ratio(rho: RhoLike, n: int, k: int,
                           family: Union[Family, str] = Family.BALANCED) -> PathRatio:
    """
    Per-edge ratio (P(f)/P(D))^{1/k} of the best non-dictator simple protocol
    on a path with k edges and every vertex playing

    A ratio below 1 is the empirical counterpart of the constant in the
    strict-uniqueness part of the path result.
    """
    inst = path_instance(k, rho, n)
    tables, functions = family_tables(family, n)
    keep = np.array([not is_dictator_table(t, n) for t in tables])
    if not keep.any():
        raise PreconditionError(f"the family has no non-dictator function at n = {n}")
    values = simple_protocol_values(inst, tables[keep])
    index = _pick_best(values, tables[keep])
    dictator = path_closed_form([1] * k, rho)
    other = float(values[index])
    name = [f for f, kept in zip(functions, keep) if kept][index].label
    return PathRatio(k, dictator, other, name, (other / dictator) ** (1.0 / k))


@dataclass
class StarRatio:
    k: int
    best_simple: float
    best_function: str
    limit: float
    ratio: float


def star_ratio_experiment(rho: RhoLike, k_values: Iterable[int], n: int,
                          family: Union[Family, str] = Family.MONOTONE) -> List[StarRatio]:
    """
    Best simple value on Star_k (leaf players) against the majority limit

    The ratio is reported, never asserted.
    """
    rows = []
    for k in k_values:
        inst = star_instance(int(k), rho, n)
        f, value = best_simple_protocol(inst, family)
        limit = star_majority_limit(int(k), CorrelationParam.coerce(rho).rho)
        rows.append(StarRatio(int(k), value, f.label, limit, value / limit))
        logger.debug(f"Star ratio k={k}: best {value:.6g} limit {limit:.6g}")
    return rows
