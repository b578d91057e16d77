"""
Cube algebra

Real- and Boolean-valued functions on the discrete cube {-1,1}^n, the
Walsh-Hadamard transform, the noise operator T_rho, p-norms for every real
p, correlated-pair expectations and the lazy random walk.

Index convention:
    Entry i of a value table is f(x(i)), where coordinate j (1-based) of
    x(i) is +1 when bit (j-1) of i is 0 and -1 otherwise.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    EmptyStartSet,
    EncodingError,
    NegativeEntryForLowNorm,
    RhoOutOfRange,
)

logger = logging.getLogger(__name__)

MAX_DIMENSION = 24


@dataclass(frozen=True)
class CorrelationParam:
    """Correlation rho of each bit pair across an edge, with epsilon = 1/2 - rho/2"""
    rho: float

    def __post_init__(self):
        if not (0.0 <= float(self.rho) <= 1.0) or math.isnan(self.rho):
            raise RhoOutOfRange(f"rho must lie in [0, 1], got {self.rho}")
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def epsilon(self) -> float:
        """Flip probability of one bit"""
        return 0.5 - 0.5 * self.rho

    @classmethod
    def coerce(cls, value: Union[float, "CorrelationParam"]) -> "CorrelationParam":
        if isinstance(value, CorrelationParam):
            return value
        return cls(float(value))


RhoLike = Union[float, CorrelationParam]


def _rho(value: RhoLike) -> float:
    return CorrelationParam.coerce(value).rho


# ----------------------------------------------------------------------
# Index helpers
# ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def cube_points(n: int) -> np.ndarray:
    """
    All points of {-1,1}^n in table order

    Returns:
        Read-only (2^n, n) int array, row i is x(i)
    """
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> np.arange(n)) & 1
    points = 1 - 2 * bits
    points.setflags(write=False)
    return points


@lru_cache(maxsize=None)
def subset_sizes(n: int) -> np.ndarray:
    """|U| for every subset mask U in table order (read-only)"""
    idx = np.arange(1 << n)
    sizes = ((idx[:, None] >> np.arange(n)) & 1).sum(axis=1)
    sizes.setflags(write=False)
    return sizes


def _dimension_of(length: int) -> int:
    n = length.bit_length() - 1
    if n < 1 or (1 << n) != length:
        raise DimensionMismatch(f"table length {length} is not 2^n for a positive n")
    return n


def fwht(values: np.ndarray) -> np.ndarray:
    """
    Unnormalised Walsh-Hadamard butterfly along the last axis

    Entry U of the result is sum_x v(x) * chi_U(x). Works on stacked tables,
    so a batch of functions is transformed in one call.
    """
    out = np.array(values, dtype=float, copy=True)
    size = out.shape[-1]
    lead = out.shape[:-1]
    h = 1
    while h < size:
        view = out.reshape(*lead, size // (2 * h), 2, h)
        a = view[..., 0, :].copy()
        b = view[..., 1, :]
        view[..., 0, :] = a + b
        view[..., 1, :] = a - b
        h *= 2
    return out


def apply_noise(values: np.ndarray, n: int, rho: float) -> np.ndarray:
    """T_rho on raw value tables along the last axis"""
    coeffs = fwht(values) / float(1 << n)
    coeffs *= np.power(float(rho), subset_sizes(n))
    return fwht(coeffs)


# ----------------------------------------------------------------------
# Function types
# ----------------------------------------------------------------------

class CubeFunction:
    """
    Real-valued table on {-1,1}^n

    Attributes:
        n: Number of coordinates
        values: Read-only float array of length 2^n
    """

    def __init__(self, n: int, values: Iterable[float]):
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise DimensionMismatch(f"n must be a positive integer, got {n!r}")
        if n > MAX_DIMENSION:
            raise DimensionMismatch(f"n = {n} exceeds the supported maximum {MAX_DIMENSION}")
        table = np.array(values, dtype=float)
        if table.ndim != 1 or table.shape[0] != (1 << n):
            raise DimensionMismatch(
                f"expected {1 << n} values for n = {n}, got shape {table.shape}"
            )
        table.setflags(write=False)
        self.n = int(n)
        self.values = table

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "CubeFunction":
        """Build a function, inferring n from the table length"""
        return cls(_dimension_of(len(values)), values)

    @classmethod
    def constant(cls, n: int, c: float) -> "CubeFunction":
        return cls(n, np.full(1 << n, float(c)))

    @classmethod
    def indicator(cls, n: int, members: Iterable[bool]) -> "CubeFunction":
        """Zero-one indicator from a boolean membership table"""
        if not isinstance(members, np.ndarray):
            members = list(members)
        return cls(n, np.asarray(members, dtype=bool).astype(float))

    @classmethod
    def character(cls, n: int, mask: int) -> "CubeFunction":
        """chi_U(x) = prod_{j in U} x_j for the subset encoded by mask"""
        return cls(n, np.prod(np.where((mask >> np.arange(n)) & 1, cube_points(n), 1), axis=1))

    def is_boolean(self) -> bool:
        return bool(np.all(np.abs(self.values) == 1.0))

    def is_zero_one(self) -> bool:
        return bool(np.all((self.values == 0.0) | (self.values == 1.0)))

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0.0))

    def mean(self) -> float:
        return float(self.values.mean())

    def _same_n(self, other: "CubeFunction"):
        if self.n != other.n:
            raise DimensionMismatch(f"functions on n = {self.n} and n = {other.n}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, CubeFunction):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.values, other.values))

    def __hash__(self) -> int:
        return hash((self.n, self.values.tobytes()))

    def __repr__(self):
        return f"CubeFunction(n={self.n}, values={self.values.tolist()})"


class BooleanFunction(CubeFunction):
    """
    Cube function with values in {-1, +1}

    The optional name records how the function was built (for example
    "dict:1" or "maj:3"); two functions with the same table compare equal
    whatever their names.
    """

    def __init__(self, n: int, values: Iterable[float], name: Optional[str] = None):
        super().__init__(n, values)
        if not self.is_boolean():
            raise EncodingError("a Boolean function takes only the values -1 and +1")
        self.name = name

    # Named constructors -------------------------------------------------

    @classmethod
    def dictator(cls, n: int, j: int) -> "BooleanFunction":
        if not 1 <= j <= n:
            raise EncodingError(f"dictator coordinate {j} outside 1..{n}")
        return cls(n, cube_points(n)[:, j - 1], name=f"dict:{j}")

    @classmethod
    def majority(cls, n: int, r: int, coordinates: Optional[Sequence[int]] = None) -> "BooleanFunction":
        """
        Majority of r coordinates

        Args:
            n: Cube dimension
            r: Odd number of voting coordinates
            coordinates: 1-based voters; defaults to the first r
        """
        if coordinates is None:
            coordinates = range(1, r + 1)
        coordinates = list(coordinates)
        if r % 2 == 0 or r < 1 or len(coordinates) != r:
            raise EncodingError(f"majority needs an odd positive number of voters, got {r}")
        if min(coordinates) < 1 or max(coordinates) > n:
            raise EncodingError(f"majority voters {coordinates} outside 1..{n}")
        total = cube_points(n)[:, [c - 1 for c in coordinates]].sum(axis=1)
        name = f"maj:{r}" if coordinates == list(range(1, r + 1)) else \
            "maj:" + ",".join(str(c) for c in coordinates)
        return cls(n, np.sign(total), name=name)

    @classmethod
    def parity(cls, n: int, coordinates: Sequence[int]) -> "BooleanFunction":
        mask = 0
        for j in coordinates:
            if not 1 <= j <= n:
                raise EncodingError(f"parity coordinate {j} outside 1..{n}")
            mask |= 1 << (j - 1)
        chi = CubeFunction.character(n, mask)
        return cls(n, chi.values, name="parity:" + ",".join(str(j) for j in coordinates))

    @classmethod
    def from_truth_table(cls, bits: str) -> "BooleanFunction":
        """Character i is '1' iff f(x(i)) = +1"""
        if not bits or set(bits) - {"0", "1"}:
            raise EncodingError(f"truth table must be a 0/1 string, got {bits!r}")
        try:
            n = _dimension_of(len(bits))
        except DimensionMismatch as e:
            raise EncodingError(f"truth table length {len(bits)} is not a power of two") from e
        values = np.where(np.frombuffer(bits.encode("ascii"), dtype=np.uint8) == ord("1"), 1.0, -1.0)
        return cls(n, values, name=f"tt:{bits}")

    @classmethod
    def from_indicator(cls, n: int, accept: np.ndarray, name: Optional[str] = None) -> "BooleanFunction":
        """+1 on the accepting set, -1 elsewhere"""
        return cls(n, np.where(np.asarray(accept, dtype=bool), 1.0, -1.0), name=name)

    # Predicates ---------------------------------------------------------

    def is_balanced(self) -> bool:
        return int(np.count_nonzero(self.values > 0)) == (1 << (self.n - 1))

    def is_antisymmetric(self) -> bool:
        return bool(np.array_equal(self.values[::-1], -self.values))

    def is_monotone_in(self, j: int) -> bool:
        """f(x with x_j = -1) <= f(x with x_j = +1) for every x"""
        view = self.values.reshape(1 << (self.n - j), 2, 1 << (j - 1))
        return bool(np.all(view[:, 1, :] <= view[:, 0, :]))

    def is_monotone(self) -> bool:
        return all(self.is_monotone_in(j) for j in range(1, self.n + 1))

    # Derived functions --------------------------------------------------

    @property
    def truth_table(self) -> str:
        return "".join("1" if v > 0 else "0" for v in self.values)

    @property
    def encoding(self) -> str:
        return f"tt:{self.truth_table}"

    @property
    def label(self) -> str:
        return self.name or self.encoding

    def accept_set(self) -> np.ndarray:
        """Boolean mask of the points where f = +1"""
        return self.values > 0

    def output_indicator(self, b: int) -> CubeFunction:
        """Zero-one indicator of {x : f(x) = b}"""
        return CubeFunction(self.n, (self.values == b).astype(float))

    def negated(self) -> "BooleanFunction":
        name = None
        if self.name:
            name = self.name[1:] if self.name.startswith("-") else f"-{self.name}"
        return BooleanFunction(self.n, -self.values, name=name)

    def permuted(self, perm: Sequence[int]) -> "BooleanFunction":
        """
        Relabel coordinates: the result g satisfies g(y) = f(x) where
        y_{perm[j]} = x_j (perm is a 0-based permutation of range(n))
        """
        points = cube_points(self.n)
        bits = (1 - points) // 2
        target = np.zeros(1 << self.n, dtype=np.int64)
        for j, pj in enumerate(perm):
            target |= bits[:, j].astype(np.int64) << int(pj)
        values = np.empty_like(self.values)
        values[target] = self.values
        return BooleanFunction(self.n, values)

    def __repr__(self):
        return f"BooleanFunction({self.label})"


def parse_boolean_function(text: str, n: int) -> BooleanFunction:
    """
    Parse a textual encoding

    Accepted forms: "dict:j", "maj:r", "parity:j1,j2,...", "tt:<bits>",
    each optionally prefixed by "-" for the negated function.

    Raises:
        EncodingError: Unknown or malformed encoding
    """
    raw = text.strip()
    if raw.startswith("-"):
        return parse_boolean_function(raw[1:], n).negated()
    kind, sep, arg = raw.partition(":")
    if not sep:
        raise EncodingError(f"missing ':' in function encoding {text!r}")
    try:
        if kind == "dict":
            return BooleanFunction.dictator(n, int(arg))
        if kind == "maj":
            voters = [int(a) for a in arg.split(",")]
            if len(voters) == 1:
                return BooleanFunction.majority(n, voters[0])
            return BooleanFunction.majority(n, len(voters), voters)
        if kind == "parity":
            coords = [int(a) for a in arg.split(",") if a.strip()]
            return BooleanFunction.parity(n, coords)
    except ValueError as e:
        if isinstance(e, EncodingError):
            raise
        raise EncodingError(f"bad argument in {text!r}: {e}") from e
    if kind == "tt":
        f = BooleanFunction.from_truth_table(arg)
        if f.n != n:
            raise EncodingError(f"truth table has n = {f.n}, expected {n}")
        return f
    raise EncodingError(f"unknown function kind {kind!r} in {text!r}")


# ----------------------------------------------------------------------
# Operations
# ----------------------------------------------------------------------

def walsh_hadamard(f: CubeFunction) -> CubeFunction:
    """
    Fourier coefficients of f indexed by subset mask U

    Entry U equals 2^{-n} sum_x f(x) chi_U(x).
    """
    return CubeFunction(f.n, fwht(f.values) / float(1 << f.n))


def inverse_walsh_hadamard(coeffs: CubeFunction) -> CubeFunction:
    """f = sum_U f^(U) chi_U"""
    return CubeFunction(coeffs.n, fwht(coeffs.values))


def noise_operator(f: CubeFunction, rho: RhoLike) -> CubeFunction:
    """
    Bonami-Beckner operator (T_rho f)(x) = E[f(y)], y a rho-correlated copy of x

    Multiplies the coefficient at level |U| by rho^{|U|}.
    """
    return CubeFunction(f.n, apply_noise(f.values, f.n, _rho(rho)))


def p_norm(f: CubeFunction, p: float) -> float:
    """
    (E|f|^p)^{1/p} for every real p

    p = 0 is the geometric mean. For p <= 0 a zero entry gives 0 (the
    limiting value).

    Raises:
        NegativeEntryForLowNorm: p < 1 and f has a negative entry
    """
    v = f.values
    if p < 1 and np.any(v < 0):
        raise NegativeEntryForLowNorm(f"p = {p} needs a nonnegative function")
    v = np.abs(v)
    if p > 0:
        if not np.any(v > 0):
            return 0.0
        # scaled to avoid overflow of large powers
        top = float(v.max())
        return top * float(np.mean((v / top) ** p)) ** (1.0 / p)
    if np.any(v == 0):
        return 0.0
    logs = np.log(v)
    if p == 0:
        return float(np.exp(logs.mean()))
    return float(np.exp((logsumexp(p * logs) - math.log(v.size)) / p))


def correlated_expectation(f: CubeFunction, g: CubeFunction, rho: RhoLike) -> float:
    """
    E[f(x) g(y)] for y a rho-correlated copy of x

    Raises:
        DimensionMismatch: f and g on different cubes
    """
    f._same_n(g)
    weights = np.power(_rho(rho), subset_sizes(f.n))
    fh = fwht(f.values)
    gh = fwht(g.values)
    return float(np.dot(fh * gh, weights)) / float(1 << (2 * f.n))


def lazy_walk_probability(start: CubeFunction, target: CubeFunction, steps: int) -> float:
    """
    Probability that a lazy walk of the given length from a uniform point of
    the start set ends in the target set

    Each step stays put with probability 1/2 and otherwise flips a uniformly
    chosen coordinate, so a level-|U| character is scaled by 1 - |U|/n.

    Raises:
        DimensionMismatch: indicators on different cubes or not zero-one
        EmptyStartSet: the start set is empty
    """
    start._same_n(target)
    if not (start.is_zero_one() and target.is_zero_one()):
        raise DimensionMismatch("lazy walk sets must be zero-one indicators")
    if steps < 0:
        raise DimensionMismatch(f"steps must be nonnegative, got {steps}")
    sigma = start.mean()
    if sigma == 0.0:
        raise EmptyStartSet("the walk start set is empty")
    n = start.n
    decay = np.power(1.0 - subset_sizes(n) / n, int(steps))
    sh = fwht(start.values)
    th = fwht(target.values)
    return float(np.dot(sh * th, decay)) / float(1 << (2 * n)) / sigma
