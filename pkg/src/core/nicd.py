"""
NICD instances on trees

An instance is a tree T, a correlation rho, a string length n and a set S
of player vertices. A uniformly random string sits at an arbitrary vertex
and each edge flips every bit independently with probability
epsilon = 1/2 - rho/2. Each player applies its Boolean function to its own
string; the protocol succeeds when all players output the same bit.

Success probabilities are computed exactly by message passing over the
tree: the message a vertex sends to its parent is T_rho applied to the
pointwise product of its own output indicator and its children's messages.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .cube import BooleanFunction, CorrelationParam, RhoLike, apply_noise, parse_boolean_function
from .errors import (
    ArityMismatch,
    EncodingError,
    InvalidInstance,
    MissingPlayerFunction,
    TooLargeForBruteForce,
    UnbalancedFunction,
)

logger = logging.getLogger(__name__)

BRUTE_FORCE_LIMIT = 24
BRUTE_FORCE_BLOCK = 1 << 16


@dataclass(frozen=True)
class NicdInstance:
    """
    Tree, correlation, string length and player set

    Attributes:
        vertex_count: Number of vertices (ids 0..vertex_count-1)
        edges: Tree edges as (u, v) pairs with u < v
        rho: Correlation across every edge
        n: String length
        players: The player set S
    """
    vertex_count: int
    edges: Tuple[Tuple[int, int], ...]
    rho: CorrelationParam
    n: int
    players: FrozenSet[int]
    _adjacency: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __init__(self, vertex_count: int, edges: Iterable[Sequence[int]], rho: RhoLike,
                 n: int, players: Optional[Iterable[int]] = None):
        normalized = tuple(tuple(sorted((int(u), int(v)))) for u, v in edges)
        object.__setattr__(self, "vertex_count", int(vertex_count))
        object.__setattr__(self, "edges", normalized)
        object.__setattr__(self, "rho", CorrelationParam.coerce(rho))
        object.__setattr__(self, "n", int(n))
        if players is None:
            players = range(int(vertex_count))
        object.__setattr__(self, "players", frozenset(int(p) for p in players))
        object.__setattr__(self, "_adjacency", self._validate())

    def _validate(self) -> Tuple[Tuple[int, ...], ...]:
        """Check the tree and player invariants, returning adjacency lists"""
        count = self.vertex_count
        if count < 1:
            raise InvalidInstance("a tree needs at least one vertex")
        if self.n < 1:
            raise InvalidInstance(f"string length must be positive, got {self.n}")
        if len(self.edges) != count - 1:
            raise InvalidInstance(f"a tree on {count} vertices has {count - 1} edges, got {len(self.edges)}")
        if len(set(self.edges)) != len(self.edges):
            raise InvalidInstance("duplicate edge")
        adjacency: List[List[int]] = [[] for _ in range(count)]
        for u, v in self.edges:
            if u == v:
                raise InvalidInstance(f"self-loop at vertex {u}")
            if u < 0 or v >= count:
                raise InvalidInstance(f"edge ({u}, {v}) outside vertices 0..{count - 1}")
            adjacency[u].append(v)
            adjacency[v].append(u)
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for w in adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != count:
            raise InvalidInstance("edges do not connect every vertex")
        if not self.players:
            raise InvalidInstance("the player set is empty")
        if min(self.players) < 0 or max(self.players) >= count:
            raise InvalidInstance(f"players {sorted(self.players)} outside vertices 0..{count - 1}")
        return tuple(tuple(sorted(a)) for a in adjacency)

    def neighbors(self, v: int) -> Tuple[int, ...]:
        return self._adjacency[v]

    def traversal(self, root: int = 0) -> Tuple[List[int], List[int]]:
        """
        Breadth-first order from the root and the parent of each vertex

        Returns:
            (order, parent) with parent[root] = -1
        """
        parent = [-1] * self.vertex_count
        order = [root]
        seen = {root}
        for u in order:
            for w in self._adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    parent[w] = u
                    order.append(w)
        return order, parent

    def with_players(self, players: Iterable[int]) -> "NicdInstance":
        return NicdInstance(self.vertex_count, self.edges, self.rho, self.n, players)

    def describe(self) -> str:
        return f"tree(V={self.vertex_count}, n={self.n}, rho={self.rho.rho}, |S|={len(self.players)})"


class Protocol:
    """
    Mapping from each player vertex to its Boolean function

    Unbalanced functions are rejected unless allow_unbalanced is set; the
    flag is carried along so reports can show that the run was exploratory.

    Raises:
        InvalidInstance: the mapping is empty
        UnbalancedFunction: an unbalanced function without the override
    """

    def __init__(self, functions: Mapping[int, BooleanFunction], allow_unbalanced: bool = False):
        self.functions: Dict[int, BooleanFunction] = {int(v): f for v, f in functions.items()}
        if not self.functions:
            raise InvalidInstance("a protocol needs at least one player function")
        self.allow_unbalanced = allow_unbalanced
        if not allow_unbalanced:
            for v, f in self.functions.items():
                if not f.is_balanced():
                    raise UnbalancedFunction(f"player {v} uses unbalanced function {f.label}")
        elif any(not f.is_balanced() for f in self.functions.values()):
            logger.warning("Protocol uses unbalanced functions (override flag set)")

    @classmethod
    def simple(cls, players: Iterable[int], f: BooleanFunction, allow_unbalanced: bool = False) -> "Protocol":
        """Every player uses f"""
        return cls({v: f for v in players}, allow_unbalanced)

    @classmethod
    def from_encodings(cls, encodings: Mapping[int, str], n: int, allow_unbalanced: bool = False) -> "Protocol":
        return cls({int(v): parse_boolean_function(text, n) for v, text in encodings.items()},
                   allow_unbalanced)

    @property
    def players(self) -> FrozenSet[int]:
        return frozenset(self.functions)

    def is_simple(self) -> bool:
        tables = [f.values for f in self.functions.values()]
        return all(np.array_equal(tables[0], t) for t in tables[1:])

    def negated(self) -> "Protocol":
        return Protocol({v: f.negated() for v, f in self.functions.items()}, self.allow_unbalanced)

    def permuted(self, perm: Sequence[int]) -> "Protocol":
        return Protocol({v: f.permuted(perm) for v, f in self.functions.items()}, self.allow_unbalanced)

    def is_monotone(self) -> bool:
        return all(f.is_monotone() for f in self.functions.values())

    def encodings(self) -> Dict[int, str]:
        return {v: f.label for v, f in sorted(self.functions.items())}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Protocol):
            return NotImplemented
        return self.functions.keys() == other.functions.keys() and all(
            self.functions[v] == other.functions[v] for v in self.functions)

    def __repr__(self):
        return f"Protocol({self.encodings()})"


def check_protocol(inst: NicdInstance, prot: Protocol):
    """
    Raises:
        MissingPlayerFunction: protocol does not cover exactly the players
        ArityMismatch: a function is not on inst.n coordinates
    """
    if prot.players != inst.players:
        missing = sorted(inst.players - prot.players)
        extra = sorted(prot.players - inst.players)
        raise MissingPlayerFunction(f"players without a function: {missing}; functions for non-players: {extra}")
    for v, f in prot.functions.items():
        if f.n != inst.n:
            raise ArityMismatch(f"player {v} uses a function on {f.n} coordinates, instance has n = {inst.n}")


# ----------------------------------------------------------------------
# Exact evaluation
# ----------------------------------------------------------------------

def tree_agreement(inst: NicdInstance, accept: Mapping[int, np.ndarray], root: int = 0) -> np.ndarray:
    """
    Success probability for player accept tables, batched over leading axes

    Args:
        inst: The instance
        accept: Player vertex -> boolean table of shape (..., 2^n) marking
            the points where the player outputs +1
        root: Vertex the tree is rooted at

    Returns:
        Array of success probabilities with the batch shape
    """
    order, parent = inst.traversal(root)
    n = inst.n
    rho = inst.rho.rho
    total = None
    for b in (True, False):
        incoming: Dict[int, np.ndarray] = {}
        log_scale = None
        for u in reversed(order):
            if u in accept:
                msg = (np.asarray(accept[u]) == b).astype(float)
            else:
                msg = np.ones(1 << n)
            if u in incoming:
                msg = msg * incoming.pop(u)
            if u != root:
                msg = apply_noise(msg, n, rho)
            # rescale so long paths and large stars do not underflow
            scale = msg.max(axis=-1, keepdims=True)
            with np.errstate(divide="ignore"):
                log_part = np.log(scale[..., 0])
            msg = msg / np.where(scale > 0, scale, 1.0)
            log_scale = log_part if log_scale is None else log_scale + log_part
            if u == root:
                with np.errstate(divide="ignore"):
                    value = np.exp(log_scale + np.log(msg.mean(axis=-1)))
                total = value if total is None else total + value
            else:
                p = parent[u]
                incoming[p] = msg if p not in incoming else incoming[p] * msg
    return np.clip(total, 0.0, 1.0)


def success_probability(inst: NicdInstance, prot: Protocol, root: int = 0) -> float:
    """
    Probability that all players output the same bit

    Computed by message passing from the chosen root; the result does not
    depend on the root.

    Raises:
        MissingPlayerFunction, ArityMismatch
    """
    check_protocol(inst, prot)
    accept = {v: f.accept_set() for v, f in prot.functions.items()}
    return float(tree_agreement(inst, accept, root))


def brute_force_success(inst: NicdInstance, prot: Protocol, limit: int = BRUTE_FORCE_LIMIT) -> float:
    """
    Success probability by enumerating every joint labelling

    Each labelling assigns an n-bit string to every vertex and is weighted by
    2^{-n} prod_edges (1-eps)^{agreements} eps^{disagreements}.
    Labellings are visited in blocks of 2^16, so memory stays flat up to the
    limit.

    Raises:
        TooLargeForBruteForce: n * |V| exceeds the limit
    """
    check_protocol(inst, prot)
    total_bits = inst.n * inst.vertex_count
    if total_bits > limit:
        raise TooLargeForBruteForce(f"n*|V| = {total_bits} exceeds the limit {limit}")
    n = inst.n
    mask = (1 << n) - 1
    eps = inst.rho.epsilon
    popcount = np.array([bin(i).count("1") for i in range(1 << n)])
    flips = np.arange(n + 1)
    edge_kernel = (1.0 - eps) ** (n - flips) * eps ** flips
    players = sorted(inst.players)
    tables = [prot.functions[v].values for v in players]
    total = 0.0
    for start in range(0, 1 << total_bits, BRUTE_FORCE_BLOCK):
        labels = np.arange(start, min(start + BRUTE_FORCE_BLOCK, 1 << total_bits), dtype=np.int64)
        strings = [(labels >> (v * n)) & mask for v in range(inst.vertex_count)]
        weight = np.full(labels.shape, 2.0 ** -n)
        for u, v in inst.edges:
            weight *= edge_kernel[popcount[strings[u] ^ strings[v]]]
        first = tables[0][strings[players[0]]]
        agree = np.ones(labels.shape, dtype=bool)
        for v, table in zip(players[1:], tables[1:]):
            agree &= table[strings[v]] == first
        total += float(weight[agree].sum())
    return total


def label_measure(inst: NicdInstance, limit: int = BRUTE_FORCE_LIMIT) -> np.ndarray:
    """
    Joint law of the one-bit labels (x_v) of every vertex

    Index bit v is 0 when x_v = +1. The weight of a labelling is
    1/2 prod_edges (1 + rho x_u x_v)/2, whatever n is set on the instance.

    Raises:
        TooLargeForBruteForce: more vertices than the limit
    """
    if inst.vertex_count > limit:
        raise TooLargeForBruteForce(f"|V| = {inst.vertex_count} exceeds the limit {limit}")
    rho = inst.rho.rho
    labels = np.arange(1 << inst.vertex_count, dtype=np.int64)
    measure = np.full(labels.shape, 0.5)
    for u, v in inst.edges:
        differ = ((labels >> u) ^ (labels >> v)) & 1
        measure *= np.where(differ == 1, 0.5 - 0.5 * rho, 0.5 + 0.5 * rho)
    return measure


# ----------------------------------------------------------------------
# Closed forms
# ----------------------------------------------------------------------

def path_closed_form(gaps: Sequence[int], rho: RhoLike) -> float:
    """
    prod_j (1/2 + rho^{gap_j}/2): the simple dictator value for players at
    the given spacings along a path
    """
    r = CorrelationParam.coerce(rho).rho
    if not gaps or any(int(g) < 1 for g in gaps):
        raise InvalidInstance(f"gaps must be a nonempty list of positive integers, got {list(gaps)}")
    return math.exp(sum(math.log(0.5 + 0.5 * r ** int(g)) for g in gaps))


def star_dictator_closed_form(k: int, rho: RhoLike) -> float:
    """(1/2 + rho/2)^k + (1/2 - rho/2)^k for dictators on the k leaves of a star"""
    r = CorrelationParam.coerce(rho).rho
    if k < 1:
        raise InvalidInstance(f"a star needs at least one leaf, got k = {k}")
    head = k * math.log(0.5 + 0.5 * r)
    if r == 1.0:
        return 1.0
    tail = k * math.log(0.5 - 0.5 * r)
    return float(np.exp(np.logaddexp(head, tail)))


def star_maj3_lower_bound(k: int, rho: RhoLike) -> float:
    """
    1/8 * Pr[Bin(3, eps) <= 1]^k, a lower bound for MAJ_3 on k star leaves

    The center string is (1,1,1) with probability 1/8 and each leaf then
    keeps its majority when at most one of its three bits flipped.
    """
    eps = CorrelationParam.coerce(rho).epsilon
    keep = (1.0 - eps) ** 2 * (1.0 + 2.0 * eps)
    return 0.125 * keep ** k


# ----------------------------------------------------------------------
# Monotone shifting
# ----------------------------------------------------------------------

def _shift_function(f: BooleanFunction, j: int) -> BooleanFunction:
    view = f.values.reshape(1 << (f.n - j), 2, 1 << (j - 1))
    plus = view[:, 0, :]
    minus = view[:, 1, :]
    shifted = np.empty_like(view)
    shifted[:, 0, :] = np.maximum(plus, minus)
    shifted[:, 1, :] = np.minimum(plus, minus)
    if np.array_equal(shifted, view):
        return f
    return BooleanFunction(f.n, shifted.reshape(-1))


def monotone_shift(prot: Protocol, coordinate: int) -> Protocol:
    """
    Down-shift every player's function in one coordinate

    Where f differs between x_j = -1 and x_j = +1 (other coordinates fixed),
    the shifted function outputs -1 at x_j = -1 and +1 at x_j = +1; all
    other points are unchanged. Balance is preserved.
    """
    n = next(iter(prot.functions.values())).n
    if not 1 <= coordinate <= n:
        raise ArityMismatch(f"coordinate {coordinate} outside 1..{n}")
    return Protocol({v: _shift_function(f, coordinate) for v, f in prot.functions.items()},
                    prot.allow_unbalanced)


def monotonize(prot: Protocol) -> Tuple[Protocol, int]:
    """
    Shift in every coordinate until all functions are monotone

    Returns:
        (monotone protocol, number of coordinate passes that changed it)
    """
    n = next(iter(prot.functions.values())).n
    changing = 0
    for _ in range(n + 1):
        before = prot
        for j in range(1, n + 1):
            prot = monotone_shift(prot, j)
        if prot == before:
            break
        changing += 1
    logger.debug(f"Monotonized protocol after {changing} changing pass(es)")
    return prot, changing


# ----------------------------------------------------------------------
# Instance builders
# ----------------------------------------------------------------------

def path_instance(length: int, rho: RhoLike, n: int, players: Optional[Iterable[int]] = None) -> NicdInstance:
    """Path_k with vertices 0..length; all vertices play by default"""
    return NicdInstance(length + 1, [(i, i + 1) for i in range(length)], rho, n, players)


def path_instance_from_gaps(gaps: Sequence[int], rho: RhoLike, n: int) -> NicdInstance:
    """Path with players at positions 0, g1, g1+g2, ..."""
    positions = [0]
    for g in gaps:
        positions.append(positions[-1] + int(g))
    return path_instance(positions[-1], rho, n, positions)


def star_instance(k: int, rho: RhoLike, n: int, include_center: bool = False) -> NicdInstance:
    """Star_k with center 0 and leaves 1..k; the leaves play"""
    players = range(0 if include_center else 1, k + 1)
    return NicdInstance(k + 1, [(0, i) for i in range(1, k + 1)], rho, n, players)


def star_plus_path_instance(k1: int, k2: int, rho: RhoLike, n: int) -> NicdInstance:
    """
    A k1-leaf star with a path of k2 further vertices hanging off its center

    Vertex 0 is the center, 1..k1 the leaves and k1+1..k1+k2 the path, in
    order away from the center. Every vertex plays.
    """
    edges = [(0, i) for i in range(1, k1 + 1)]
    previous = 0
    for v in range(k1 + 1, k1 + k2 + 1):
        edges.append((previous, v))
        previous = v
    return NicdInstance(k1 + k2 + 1, edges, rho, n)


def random_tree_edges(rng: np.random.Generator, vertex_count: int) -> List[Tuple[int, int]]:
    """Each vertex after the first attaches to a uniformly chosen earlier one"""
    return [(int(rng.integers(0, v)), v) for v in range(1, vertex_count)]


def load_protocol(encodings: Mapping, n: int, allow_unbalanced: bool = False) -> Protocol:
    """Protocol from a vertex-id -> encoding mapping with string keys allowed"""
    try:
        return Protocol.from_encodings({int(v): str(e) for v, e in encodings.items()}, n, allow_unbalanced)
    except (TypeError, ValueError) as e:
        if isinstance(e, (EncodingError, UnbalancedFunction)):
            raise
        raise EncodingError(f"bad protocol mapping: {e}") from e
