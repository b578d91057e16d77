"""
Reversible Markov chains

Validation of reversible chains, spectral decomposition in L^2(pi),
spectral gaps, projected operator norms, exact stay-in-set probabilities
for time-inhomogeneous chains and the stay-probability upper bound with
its equality characterisation.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .cube import CorrelationParam, RhoLike, subset_sizes
from .errors import DomainError, InapplicableHypotheses, InvalidInstance, NotErgodic, NotReversible

logger = logging.getLogger(__name__)

CHAIN_TOLERANCE = 1e-12
JACOBI_TOLERANCE = 1e-13
JACOBI_MAX_SWEEPS = 100
EQUALITY_TOLERANCE = 1e-9
MAX_STATES = 4096
SOLVERS = ("jacobi", "lapack")


# ----------------------------------------------------------------------
# Symmetric eigen-solvers
# ----------------------------------------------------------------------

def jacobi_eigh(matrix: np.ndarray, tol: float = JACOBI_TOLERANCE) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations

    Sweeps over every off-diagonal pair until the off-diagonal Frobenius
    norm is at most tol.

    Returns:
        (eigenvalues ascending, orthonormal eigenvectors as columns)
    """
    a = np.array(matrix, dtype=float, copy=True)
    size = a.shape[0]
    v = np.eye(size)
    for sweep in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(max(float(np.sum(a * a) - np.sum(np.diag(a) ** 2)), 0.0))
        if off <= tol:
            logger.debug(f"Jacobi converged after {sweep} sweep(s) on a {size}x{size} matrix")
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q]
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        logger.warning(f"Jacobi stopped after {JACOBI_MAX_SWEEPS} sweeps without reaching {tol}")
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def symmetric_eigh(matrix: np.ndarray, solver: str = "jacobi") -> Tuple[np.ndarray, np.ndarray]:
    """Dispatch to the Jacobi rotation solver or to LAPACK"""
    if solver == "jacobi":
        return jacobi_eigh(matrix)
    if solver == "lapack":
        values, vectors = linalg.eigh(matrix)
        return values, vectors
    raise DomainError(f"unknown eigen solver {solver!r}; expected one of {SOLVERS}")


# ----------------------------------------------------------------------
# Chains
# ----------------------------------------------------------------------

def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Left eigenvector of the transition matrix at eigenvalue 1, normalised"""
    values, vectors = linalg.eig(np.asarray(transition, dtype=float).T)
    idx = int(np.argmin(np.abs(values - 1.0)))
    pi = np.abs(np.real(vectors[:, idx]))
    return pi / pi.sum()


@dataclass(frozen=True)
class SpectralDecomposition:
    """
    Attributes:
        eigenvalues: Ascending real eigenvalues
        basis: Eigenvectors as columns, orthonormal in L^2(pi)
    """
    eigenvalues: np.ndarray
    basis: np.ndarray

    def reconstruct(self, pi: np.ndarray) -> np.ndarray:
        """sum_i lambda_i e_i <e_i, .>_pi as a matrix"""
        return (self.basis * self.eigenvalues) @ self.basis.T @ np.diag(pi)


class ReversibleChain:
    """
    Row-stochastic transition matrix reversible with respect to pi

    Raises:
        NotReversible: negative entries, rows not summing to 1, a bad
            stationary measure or detailed balance violated
    """

    def __init__(self, transition: Sequence[Sequence[float]], stationary: Optional[Sequence[float]] = None,
                 tolerance: float = CHAIN_TOLERANCE, max_states: int = MAX_STATES):
        m = np.array(transition, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise NotReversible(f"transition must be a nonempty square matrix, got shape {m.shape}")
        if m.shape[0] > max_states:
            raise DomainError(f"{m.shape[0]} states exceed the limit of {max_states}")
        if np.any(m < 0.0) or not np.all(np.isfinite(m)):
            raise NotReversible("transition has negative or non-finite entries")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > tolerance:
            raise NotReversible("transition rows do not sum to 1")
        pi = stationary_distribution(m) if stationary is None else np.array(stationary, dtype=float)
        if pi.shape != (m.shape[0],) or np.any(pi < 0.0) or abs(pi.sum() - 1.0) > tolerance:
            raise NotReversible("stationary measure must be a probability vector over the states")
        flow = pi[:, None] * m
        if np.max(np.abs(flow - flow.T)) > tolerance:
            raise NotReversible("detailed balance pi(x)m(x,y) = pi(y)m(y,x) fails")
        if np.any(pi == 0.0):
            raise NotReversible("stationary measure must be positive on every state")
        m.setflags(write=False)
        pi.setflags(write=False)
        self.transition = m
        self.stationary = pi
        self.tolerance = tolerance
        self._spectra = {}

    @classmethod
    def from_weights(cls, weights: np.ndarray) -> "ReversibleChain":
        """
        Random walk on symmetric nonnegative edge weights

        Raises:
            NotReversible: weights are not symmetric
            InvalidInstance: a weight is negative or a state has no weight at all
        """
        w = np.asarray(weights, dtype=float)
        if w.ndim != 2 or not np.allclose(w, w.T, rtol=0.0, atol=1e-15):
            raise NotReversible("weights must be symmetric")
        if np.any(w < 0.0):
            raise InvalidInstance("edge weights must be nonnegative")
        totals = w.sum(axis=1)
        if np.any(totals <= 0.0):
            raise InvalidInstance(f"states {np.flatnonzero(totals <= 0.0).tolist()} have zero total weight")
        return cls(w / totals[:, None], totals / totals.sum())

    @property
    def size(self) -> int:
        return self.transition.shape[0]

    def symmetrized(self) -> np.ndarray:
        """D^{1/2} M D^{-1/2}, symmetric by detailed balance"""
        root = np.sqrt(self.stationary)
        s = root[:, None] * self.transition / root[None, :]
        return 0.5 * (s + s.T)

    def is_irreducible(self) -> bool:
        count, _ = connected_components(csr_matrix(self.transition > 0.0), directed=True, connection="strong")
        return count == 1

    def decomposition(self, solver: str = "jacobi") -> SpectralDecomposition:
        """Cached per solver"""
        if solver not in self._spectra:
            values, vectors = symmetric_eigh(self.symmetrized(), solver)
            basis = vectors / np.sqrt(self.stationary)[:, None]
            values.setflags(write=False)
            basis.setflags(write=False)
            self._spectra[solver] = SpectralDecomposition(values, basis)
        return self._spectra[solver]

    def is_ergodic(self, solver: str = "jacobi") -> bool:
        """Irreducible, with every eigenvalue other than the top one of modulus below 1"""
        if not self.is_irreducible():
            return False
        values = self.decomposition(solver).eigenvalues
        if self.size == 1:
            return True
        return bool(np.max(np.abs(values[:-1])) < 1.0 - CHAIN_TOLERANCE)

    def same_law(self, other: "ReversibleChain") -> bool:
        return self.size == other.size and bool(
            np.max(np.abs(self.stationary - other.stationary)) <= CHAIN_TOLERANCE)

    def measure(self, states: Iterable[int]) -> float:
        return float(self.stationary[indicator(self.size, states)].sum())

    def __repr__(self):
        return f"ReversibleChain(size={self.size})"


def indicator(size: int, states) -> np.ndarray:
    """Boolean mask of a state subset given as indices or as a mask"""
    arr = np.asarray(list(states) if not isinstance(states, np.ndarray) else states)
    if arr.dtype == bool:
        if arr.shape != (size,):
            raise DomainError(f"state mask must have length {size}")
        return arr
    mask = np.zeros(size, dtype=bool)
    if arr.size:
        if arr.min() < 0 or arr.max() >= size:
            raise DomainError(f"state index outside 0..{size - 1}")
        mask[arr.astype(int)] = True
    return mask


def spectral_decomposition(chain: ReversibleChain, solver: str = "jacobi") -> SpectralDecomposition:
    """Eigenvalues ascending with an L^2(pi)-orthonormal eigenbasis"""
    return chain.decomposition(solver)


def spectral_gap(chain: ReversibleChain, solver: str = "jacobi") -> float:
    """
    delta = min(|-1 - lambda_1|, |1 - lambda_{r-1}|)

    Raises:
        NotErgodic: the chain is reducible or periodic
    """
    if not chain.is_ergodic(solver):
        raise NotErgodic(f"{chain} is not ergodic")
    values = chain.decomposition(solver).eigenvalues
    if chain.size == 1:
        return 1.0
    return float(min(abs(-1.0 - values[0]), abs(1.0 - values[-2])))


# ----------------------------------------------------------------------
# Stay queries
# ----------------------------------------------------------------------

class StayQuery:
    """
    Chains M_1..M_k sharing one stationary measure and sets A_0..A_k

    Raises:
        NotReversible: chains differ in size or stationary measure
        DomainError: k < 1 or the number of sets is not k + 1
    """

    def __init__(self, chains: Sequence[ReversibleChain], sets: Sequence):
        chains = list(chains)
        if not chains:
            raise DomainError("a stay query needs at least one chain")
        if len(sets) != len(chains) + 1:
            raise DomainError(f"{len(chains)} chains need {len(chains) + 1} sets, got {len(sets)}")
        for c in chains[1:]:
            if not c.same_law(chains[0]):
                raise NotReversible("chains of a stay query must share size and stationary measure")
        self.chains = chains
        self.sets = [indicator(chains[0].size, s) for s in sets]

    @classmethod
    def constant(cls, chain: ReversibleChain, states, k: int) -> "StayQuery":
        return cls([chain] * k, [states] * (k + 1))

    @property
    def steps(self) -> int:
        return len(self.chains)

    @property
    def stationary(self) -> np.ndarray:
        return self.chains[0].stationary

    def measures(self) -> np.ndarray:
        return np.array([float(self.stationary[s].sum()) for s in self.sets])


def stay_probability_exact(q: StayQuery) -> float:
    """Pr[X_i in A_i for every i] for the chain started from pi"""
    v = np.where(q.sets[0], q.stationary, 0.0)
    for chain, states in zip(q.chains, q.sets[1:]):
        v = np.where(states, v @ chain.transition, 0.0)
    return float(v.sum())


def aks_bound(q: StayQuery, solver: str = "jacobi") -> float:
    """
    sqrt(pi(A_0) pi(A_k)) prod_i [1 - delta_i (1 - sqrt(pi(A_{i-1}) pi(A_i)))]

    Raises:
        NotErgodic: some chain is not ergodic
    """
    root = np.sqrt(q.measures())
    value = root[0] * root[-1]
    for i, chain in enumerate(q.chains, start=1):
        delta = spectral_gap(chain, solver)
        value *= 1.0 - delta * (1.0 - root[i - 1] * root[i])
    return float(value)


def aks_uniform_upper(sigma: float, delta: float, k: int) -> float:
    """sigma [sigma + (1 - delta)(1 - sigma)]^k"""
    return sigma * (sigma + (1.0 - delta) * (1.0 - sigma)) ** k


def projection_operator_norm(chain: ReversibleChain, first, second, solver: str = "jacobi") -> float:
    """
    ||P_2 M P_1|| on L^2(pi) for the coordinate projections onto the sets

    The largest singular value of the conjugated operator, taken as the
    square root of the top eigenvalue of its Gram matrix.
    """
    p1 = indicator(chain.size, first)
    p2 = indicator(chain.size, second)
    if not p1.any() or not p2.any():
        return 0.0
    k = chain.symmetrized()[np.ix_(p2, p1)]
    values, _ = symmetric_eigh(k.T @ k, solver)
    return math.sqrt(max(float(values[-1]), 0.0))


def projection_norm_bound(chain: ReversibleChain, first, second, solver: str = "jacobi") -> float:
    """1 - delta (1 - sqrt(pi(A_1) pi(A_2)))"""
    delta = spectral_gap(chain, solver)
    return 1.0 - delta * (1.0 - math.sqrt(chain.measure(first) * chain.measure(second)))


@dataclass
class EqualityDiagnostics:
    holds: bool
    residual: float
    delta: float
    smallest_eigenvalue: float
    measure: float

    def to_dict(self) -> dict:
        return dict(vars(self))


def equality_case_check(chain: ReversibleChain, states, solver: str = "jacobi",
                        tolerance: float = EQUALITY_TOLERANCE) -> EqualityDiagnostics:
    """
    Whether I_A - pi(A) 1 is an eigenfunction at 1 - delta

    Raises:
        InapplicableHypotheses: delta = 1 or lambda_1 <= -1 + delta
    """
    delta = spectral_gap(chain, solver)
    smallest = float(chain.decomposition(solver).eigenvalues[0])
    if delta >= 1.0 or smallest <= -1.0 + delta:
        raise InapplicableHypotheses(
            f"need delta < 1 and lambda_1 > -1 + delta, got delta={delta}, lambda_1={smallest}")
    mask = indicator(chain.size, states)
    sigma = float(chain.stationary[mask].sum())
    g = mask.astype(float) - sigma
    r = chain.transition @ g - (1.0 - delta) * g
    residual = math.sqrt(float(np.dot(chain.stationary, r * r)))
    return EqualityDiagnostics(residual <= tolerance, residual, delta, smallest, sigma)


@dataclass
class StrictConstant:
    value: Optional[float]
    strict_sets: int
    tested_sets: int


def empirical_strict_constant(chain: ReversibleChain, sets: Iterable, k: int,
                              solver: str = "jacobi") -> StrictConstant:
    """
    max (exact / bound)^{1/k} over the tested sets where the bound is strict

    Reported only; the constant of the strict-inequality statement is not
    computable from its definition.
    """
    best = None
    strict = tested = 0
    for states in sets:
        mask = indicator(chain.size, states)
        if not mask.any():
            continue
        q = StayQuery.constant(chain, mask, k)
        exact, bound = stay_probability_exact(q), aks_bound(q, solver)
        tested += 1
        if exact < bound * (1.0 - 1e-9):
            strict += 1
            ratio = (exact / bound) ** (1.0 / k)
            best = ratio if best is None else max(best, ratio)
    return StrictConstant(best, strict, tested)


# ----------------------------------------------------------------------
# Builders
# ----------------------------------------------------------------------

def _popcount_table(n: int) -> np.ndarray:
    """Hamming distance between every pair of cube points"""
    idx = np.arange(1 << n)
    return subset_sizes(n)[idx[:, None] ^ idx[None, :]]


def product_noise_chain(n: int, rho: RhoLike) -> ReversibleChain:
    """T_rho on the 2^n cube points, uniform stationary measure"""
    r = CorrelationParam.coerce(rho)
    flips = _popcount_table(n)
    m = (0.5 + 0.5 * r.rho) ** (n - flips) * r.epsilon ** flips
    return ReversibleChain(m, np.full(1 << n, 1.0 / (1 << n)))


def lazy_walk_chain(n: int) -> ReversibleChain:
    """Stay with probability 1/2, otherwise flip a uniformly chosen coordinate"""
    flips = _popcount_table(n)
    m = np.where(flips == 0, 0.5, np.where(flips == 1, 0.5 / n, 0.0))
    return ReversibleChain(m, np.full(1 << n, 1.0 / (1 << n)))


def complete_graph_chain(r: int) -> ReversibleChain:
    """Uniform jumps to one of the other r - 1 states"""
    if r < 2:
        raise DomainError(f"the complete-graph walk needs at least 2 states, got {r}")
    m = (np.ones((r, r)) - np.eye(r)) / (r - 1)
    return ReversibleChain(m, np.full(r, 1.0 / r))


def complete_graph_gap(r: int) -> float:
    """Eigenvalues are 1 and -1/(r-1), so delta = (r - 2)/(r - 1)"""
    return (r - 2) / (r - 1)


def path_as_stay_query(gaps: Sequence[int], rho: RhoLike, n: int, accept) -> StayQuery:
    """
    Stay query realising a path instance under a simple protocol

    Consecutive players at distance g are linked by T_{rho^g} on the cube,
    and the set at every step is the protocol's accept set.
    """
    r = CorrelationParam.coerce(rho).rho
    chains = [product_noise_chain(n, r ** int(g)) for g in gaps]
    return StayQuery(chains, [accept] * (len(chains) + 1))


def random_reversible_chain(rng: np.random.Generator, size: int, density: float = 1.0) -> ReversibleChain:
    """
    Chain from random symmetric positive weights

    A positive diagonal keeps the chain aperiodic and a Hamiltonian path of
    weights keeps it irreducible, whatever the density of the other edges.
    """
    w = rng.exponential(size=(size, size))
    if density < 1.0:
        w = np.where(rng.random((size, size)) < density, w, 0.0)
    w = np.triu(w, 1)
    w = w + w.T
    ring = np.arange(size - 1)
    w[ring, ring + 1] += 0.1
    w[ring + 1, ring] += 0.1
    w[np.arange(size), np.arange(size)] += rng.exponential(size=size) + 0.05
    return ReversibleChain.from_weights(w)


def metropolis_chain(rng: np.random.Generator, stationary: np.ndarray) -> ReversibleChain:
    """
    Metropolis chain for a given positive measure from a random symmetric
    proposal

    Proposal rows sum to at most 0.9, so every state keeps some holding
    probability and the chain is aperiodic.
    """
    pi = np.asarray(stationary, dtype=float)
    size = pi.size
    proposal = np.triu(rng.exponential(size=(size, size)), 1)
    proposal = proposal + proposal.T
    if size > 1:
        proposal *= 0.9 / proposal.sum(axis=1).max()
    accept = np.minimum(1.0, pi[None, :] / pi[:, None])
    m = proposal * accept
    m[np.arange(size), np.arange(size)] = 1.0 - m.sum(axis=1)
    return ReversibleChain(m, pi)


def chain_summary(chain: ReversibleChain, solver: str = "jacobi") -> dict:
    decomposition = chain.decomposition(solver)
    return {
        "size": chain.size,
        "eigenvalues": decomposition.eigenvalues.tolist(),
        "ergodic": chain.is_ergodic(solver),
    }


def stay_report(q: StayQuery, solver: str = "jacobi", tolerance: float = 1e-10) -> dict:
    """Exact value, bound and ratio of a stay query; within_bound allows the tolerance"""
    exact = stay_probability_exact(q)
    bound = aks_bound(q, solver)
    return {
        "steps": q.steps,
        "measures": q.measures().tolist(),
        "exact": exact,
        "bound": bound,
        "ratio": exact / bound if bound > 0 else None,
        "within_bound": exact <= bound + tolerance,
    }


def subsets_of(size: int) -> List[np.ndarray]:
    """Every nonempty state subset as a mask (small chains only)"""
    if size > 16:
        raise DomainError(f"subset enumeration needs at most 16 states, got {size}")
    idx = np.arange(1, 1 << size)
    return [((i >> np.arange(size)) & 1).astype(bool) for i in idx]
