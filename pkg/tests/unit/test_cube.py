"""
Unit tests for cube algebra
"""

import math

import numpy as np
import pytest

from src.core.cube import (
    BooleanFunction,
    CorrelationParam,
    CubeFunction,
    correlated_expectation,
    cube_points,
    inverse_walsh_hadamard,
    lazy_walk_probability,
    noise_operator,
    p_norm,
    parse_boolean_function,
    walsh_hadamard,
)
from src.core.errors import (
    DimensionMismatch,
    EmptyStartSet,
    EncodingError,
    NegativeEntryForLowNorm,
    RhoOutOfRange,
)


def _half_cube(n):
    return CubeFunction.indicator(n, cube_points(n)[:, 0] > 0)


@pytest.mark.unit
class TestCubeFunction:
    """Test suite for cube function tables"""

    def test_index_convention(self):
        """Test bit j-1 of the index set means x_j = -1"""
        points = cube_points(2)
        assert points.tolist() == [[1, 1], [-1, 1], [1, -1], [-1, -1]]

    def test_wrong_length_rejected(self):
        """Test a table whose length is not 2^n is rejected"""
        with pytest.raises(DimensionMismatch):
            CubeFunction(2, [1.0, 2.0, 3.0])

    def test_from_values_infers_n(self):
        """Test from_values infers the dimension"""
        assert CubeFunction.from_values([0.0] * 8).n == 3
        with pytest.raises(DimensionMismatch):
            CubeFunction.from_values([0.0] * 6)

    def test_values_are_read_only(self):
        """Test tables cannot be modified in place"""
        f = CubeFunction.constant(2, 1.0)
        with pytest.raises(ValueError):
            f.values[0] = 3.0


@pytest.mark.unit
class TestBooleanFunction:
    """Test suite for Boolean functions and encodings"""

    def test_dictator_balanced_and_monotone(self):
        """Test dictators are balanced, antisymmetric and monotone"""
        d = BooleanFunction.dictator(3, 2)
        assert d.is_balanced()
        assert d.is_antisymmetric()
        assert d.is_monotone()

    def test_majority_values(self):
        """Test majority of three on a few points"""
        maj = BooleanFunction.majority(3, 3)
        assert maj.values[0] == 1.0
        assert maj.values[7] == -1.0
        assert maj.values[0b011] == -1.0
        assert maj.values[0b001] == 1.0

    def test_majority_even_rejected(self):
        """Test majority of an even number of voters is rejected"""
        with pytest.raises(EncodingError):
            BooleanFunction.majority(4, 2)

    def test_non_boolean_rejected(self):
        """Test values outside {-1, 1} are rejected"""
        with pytest.raises(EncodingError):
            BooleanFunction(1, [1.0, 0.0])

    def test_anti_dictator_not_monotone(self):
        """Test -x_1 is not monotone"""
        assert not BooleanFunction.dictator(2, 1).negated().is_monotone()

    @pytest.mark.parametrize("text,n", [
        ("dict:1", 2),
        ("maj:3", 3),
        ("maj:2,3,4", 4),
        ("parity:1,2", 2),
        ("tt:1100", 2),
        ("-dict:2", 3),
    ])
    def test_parse_accepts_encodings(self, text, n):
        """Test every supported encoding parses"""
        f = parse_boolean_function(text, n)
        assert f.n == n

    def test_parse_negation(self):
        """Test a leading '-' negates the function"""
        f = parse_boolean_function("-dict:1", 2)
        assert np.array_equal(f.values, -BooleanFunction.dictator(2, 1).values)
        assert f.label == "-dict:1"

    def test_truth_table_matches_dictator(self):
        """Test the truth table of x_1 on n=2"""
        assert parse_boolean_function("tt:1010", 2) == BooleanFunction.dictator(2, 1)

    @pytest.mark.parametrize("text", ["dict", "dict:0", "dict:5", "foo:1", "tt:101", "tt:1100x", "maj:x"])
    def test_parse_rejects_bad_encodings(self, text):
        """Test malformed encodings raise EncodingError"""
        with pytest.raises(EncodingError):
            parse_boolean_function(text, 2)

    def test_truth_table_arity_checked(self):
        """Test a truth table on the wrong cube is rejected"""
        with pytest.raises(EncodingError):
            parse_boolean_function("tt:10", 2)

    def test_permuted_swaps_dictators(self):
        """Test relabelling coordinates maps x_1 to x_2"""
        d1 = BooleanFunction.dictator(2, 1)
        assert d1.permuted([1, 0]) == BooleanFunction.dictator(2, 2)


@pytest.mark.unit
class TestWalshHadamard:
    """Test suite for the Fourier transform"""

    def test_constant(self):
        """Test a constant has all weight on the empty set"""
        coeffs = walsh_hadamard(CubeFunction.constant(2, 1.0))
        assert coeffs.values.tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_dictator(self):
        """Test a dictator is its own character"""
        coeffs = walsh_hadamard(BooleanFunction.dictator(2, 1))
        assert coeffs.values.tolist() == [0.0, 1.0, 0.0, 0.0]

    def test_majority_matches_direct_sum(self):
        """Test MAJ_3 coefficients against direct summation"""
        maj = BooleanFunction.majority(3, 3)
        coeffs = walsh_hadamard(maj)
        points = cube_points(3)
        for mask in range(8):
            chi = np.prod(np.where((mask >> np.arange(3)) & 1, points, 1), axis=1)
            assert coeffs.values[mask] == pytest.approx(float(np.mean(maj.values * chi)), abs=1e-15)
        assert coeffs.values[1] == coeffs.values[2] == coeffs.values[4] == pytest.approx(0.5)
        assert coeffs.values[7] == pytest.approx(-0.5)

    def test_inverse(self, rng):
        """Test the inverse transform recovers the table"""
        f = CubeFunction(4, rng.normal(size=16))
        back = inverse_walsh_hadamard(walsh_hadamard(f))
        np.testing.assert_allclose(back.values, f.values, atol=1e-12)

    def test_parseval(self, rng):
        """Test E[f^2] equals the sum of squared coefficients"""
        f = CubeFunction(5, rng.normal(size=32))
        assert np.sum(walsh_hadamard(f).values ** 2) == pytest.approx(np.mean(f.values ** 2), rel=1e-12)


@pytest.mark.unit
class TestNoiseOperator:
    """Test suite for T_rho"""

    def test_constant_fixed(self):
        """Test constants are fixed by the noise operator"""
        out = noise_operator(CubeFunction.constant(3, 2.5), 0.3)
        np.testing.assert_allclose(out.values, 2.5)

    def test_one_coordinate(self):
        """Test T_0.5 of the zero-one dictator on one coordinate"""
        f = CubeFunction(1, [1.0, 0.0])
        out = noise_operator(f, 0.5)
        assert out.values[0] == pytest.approx(0.75)
        assert out.values[1] == pytest.approx(0.25)

    def test_rho_one_is_identity(self, rng):
        """Test T_1 is the identity"""
        f = CubeFunction(3, rng.normal(size=8))
        np.testing.assert_allclose(noise_operator(f, 1.0).values, f.values, atol=1e-12)

    def test_rho_zero_is_mean(self, rng):
        """Test T_0 replaces f by its mean"""
        f = CubeFunction(3, rng.normal(size=8))
        np.testing.assert_allclose(noise_operator(f, 0.0).values, f.mean(), atol=1e-12)

    def test_semigroup(self, rng):
        """Test T_a T_b = T_ab"""
        f = CubeFunction(4, rng.normal(size=16))
        twice = noise_operator(noise_operator(f, 0.6), 0.5)
        np.testing.assert_allclose(twice.values, noise_operator(f, 0.3).values, atol=1e-12)

    @pytest.mark.parametrize("rho", [-0.1, 1.5, float("nan")])
    def test_bad_rho(self, rho):
        """Test rho outside [0, 1] is rejected"""
        with pytest.raises(RhoOutOfRange):
            noise_operator(CubeFunction.constant(1, 1.0), rho)

    def test_correlation_param_epsilon(self):
        """Test epsilon = 1/2 - rho/2"""
        assert CorrelationParam(0.4).epsilon == pytest.approx(0.3)


@pytest.mark.unit
class TestPNorm:
    """Test suite for p-norms over every real p"""

    @pytest.mark.parametrize("p", [-2.0, 0.0, 0.5, 1.0, 2.0, 7.0])
    def test_constant(self, p):
        """Test the norm of a positive constant is the constant"""
        assert p_norm(CubeFunction.constant(2, 3.0), p) == pytest.approx(3.0)

    def test_geometric_mean(self):
        """Test p=0 is the geometric mean"""
        assert p_norm(CubeFunction(1, [1.0, 3.0]), 0.0) == pytest.approx(math.sqrt(3.0))

    def test_negative_entry_low_p(self):
        """Test p < 1 rejects negative entries"""
        with pytest.raises(NegativeEntryForLowNorm):
            p_norm(CubeFunction(1, [-1.0, 1.0]), 0.5)

    def test_zero_entry_nonpositive_p(self):
        """Test a zero entry gives norm 0 for p <= 0"""
        f = CubeFunction(1, [0.0, 2.0])
        assert p_norm(f, 0.0) == 0.0
        assert p_norm(f, -1.0) == 0.0

    def test_indicator_norm(self):
        """Test ||1_S||_p = |S|^{1/p} for a set of fractional size 1/4"""
        f = CubeFunction(2, [1.0, 0.0, 0.0, 0.0])
        assert p_norm(f, 2.0) == pytest.approx(0.25 ** 0.5)
        assert p_norm(f, 0.5) == pytest.approx(0.25 ** 2.0)

    def test_monotone_in_p(self, rng):
        """Test norms increase with p for a positive function"""
        f = CubeFunction(3, rng.uniform(0.1, 2.0, size=8))
        norms = [p_norm(f, p) for p in (-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 5.0)]
        assert all(a <= b + 1e-12 for a, b in zip(norms, norms[1:]))


@pytest.mark.unit
class TestCorrelatedExpectation:
    """Test suite for E[f(x) g(y)]"""

    def test_constants(self):
        """Test constant one gives one"""
        one = CubeFunction.constant(2, 1.0)
        assert correlated_expectation(one, one, 0.3) == pytest.approx(1.0)

    def test_dictator(self):
        """Test E[x_1 y_1] = rho"""
        d = BooleanFunction.dictator(2, 1)
        assert correlated_expectation(d, d, 0.4) == pytest.approx(0.4)

    def test_half_cube(self):
        """Test the half-cube pair probability 1/4 + rho/4"""
        h = _half_cube(3)
        assert correlated_expectation(h, h, 0.4) == pytest.approx(0.35)

    def test_matches_double_sum(self, rng):
        """Test against the direct sum over all pairs"""
        n, rho = 3, 0.37
        f = CubeFunction(n, rng.normal(size=8))
        g = CubeFunction(n, rng.normal(size=8))
        points = cube_points(n)
        agree = (points[:, None, :] == points[None, :, :]).sum(axis=2)
        weight = ((0.5 + 0.5 * rho) ** agree) * ((0.5 - 0.5 * rho) ** (n - agree)) / (1 << n)
        direct = float(np.sum(weight * f.values[:, None] * g.values[None, :]))
        assert correlated_expectation(f, g, rho) == pytest.approx(direct, abs=1e-12)

    def test_dimension_mismatch(self):
        """Test functions on different cubes are rejected"""
        with pytest.raises(DimensionMismatch):
            correlated_expectation(CubeFunction.constant(1, 1.0), CubeFunction.constant(2, 1.0), 0.5)


@pytest.mark.unit
class TestLazyWalk:
    """Test suite for the lazy random walk"""

    def test_full_cube(self):
        """Test the full cube is never left"""
        full = CubeFunction.constant(3, 1.0)
        assert lazy_walk_probability(full, full, 5) == pytest.approx(1.0)

    def test_zero_steps(self):
        """Test zero steps stay in the start set"""
        h = _half_cube(3)
        assert lazy_walk_probability(h, h, 0) == pytest.approx(1.0)

    def test_half_cube_four_steps(self):
        """Test 1/2 + 1/2 (3/4)^4 for the half-cube on n=4"""
        h = _half_cube(4)
        assert lazy_walk_probability(h, h, 4) == pytest.approx(0.658203125, abs=1e-15)

    def test_matches_matrix_power(self):
        """Test against powers of the explicit walk matrix"""
        from src.core.markov import lazy_walk_chain

        n, steps = 3, 5
        start = CubeFunction.indicator(n, [True, True, False, True, False, False, False, False])
        target = CubeFunction.indicator(n, [False, False, True, False, True, True, False, True])
        m = np.linalg.matrix_power(lazy_walk_chain(n).transition, steps)
        mask_s = start.values > 0
        direct = float(m[np.ix_(mask_s, target.values > 0)].sum() / mask_s.sum())
        assert lazy_walk_probability(start, target, steps) == pytest.approx(direct, abs=1e-12)

    def test_empty_start(self):
        """Test an empty start set is rejected"""
        empty = CubeFunction.constant(2, 0.0)
        with pytest.raises(EmptyStartSet):
            lazy_walk_probability(empty, CubeFunction.constant(2, 1.0), 1)
