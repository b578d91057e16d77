"""
Integration tests for the verification checks
Each check runs end to end on a reduced budget
"""

import math

import numpy as np
import pytest

from src.core.errors import PreconditionError
from src.core.nicd import path_instance
from src.verify import CHECKS, run_check
from src.verify.geometry import (
    check_isoperimetric_sets,
    opposed_ball_rows,
    opposed_balls,
    third_size_example,
    track_opposed_balls,
)
from src.verify.inequalities import sufficient_condition_slacks, two_point_slacks
from src.verify.report import SlackTracker
from src.verify.structure import check_maj_crossover, check_small_player_optimality


@pytest.mark.integration
class TestRandomizedChecks:
    """Integration tests for the sampled checks"""

    @pytest.mark.parametrize("name", [
        "check_forward_bb",
        "check_reverse_bb",
        "check_two_function",
        "check_reverse_holder",
        "check_two_point_coefficients",
        "check_isoperimetric_sets",
    ])
    def test_passes(self, name):
        """Test the check passes on a reduced budget"""
        report = run_check(name, trials=150, seed=20240611)
        assert report.passed, report.witness
        assert report.trials > 0

    def test_walk_bound(self):
        """Test the walk bound on a small cube"""
        report = run_check("check_walk_bound", n=8, trials=40, seed=3)
        assert report.passed, report.witness

    def test_aks_bound(self):
        """Test the stay bound on random chains"""
        report = run_check("check_aks_bound", trials=100, max_states=12, seed=1)
        assert report.passed, report.witness

    def test_jobs_invariance(self):
        """Test a check reports the same worst case for any number of workers"""
        single = run_check("check_forward_bb", trials=1500, seed=42, jobs=1)
        threaded = run_check("check_forward_bb", trials=1500, seed=42, jobs=4)
        assert single.worst_slack == threaded.worst_slack
        assert single.witness == threaded.witness


@pytest.mark.integration
class TestDeterministicChecks:
    """Integration tests for the grid and structural checks"""

    def test_easytosee(self):
        """Test the exponential comparison grid"""
        assert run_check("check_easytosee", trials=100).passed

    def test_hamming_tightness(self):
        """Test the opposed-ball estimate on its grid"""
        assert run_check("check_hamming_tightness", grid=6, n=10).passed

    def test_fkg_measure(self):
        """Test the label measure of a small tree"""
        report = run_check("check_fkg_measure", tree=[[0, 1], [1, 2]], trials=50)
        assert report.passed, report.witness

    def test_conditional_hit(self):
        """Test the majority conditional hits do not decrease"""
        report = run_check("check_conditional_hit_monotonicity", n=5, ell_max=20)
        assert report.passed
        assert report.details["terms"][0] <= report.details["terms"][-1]

    def test_maj_crossover(self):
        """Test the crossover set is upward closed and found"""
        report = check_maj_crossover(rho=0.9, n=5, r=3, k_max=60)
        assert report.passed
        assert report.details["crossover"] is not None

    @pytest.mark.parametrize("ratios,passed", [
        ([0.9, 1.1, 1.05, 1.2], True),
        ([0.9, 1.1, 1.0, 1.2], False),
        ([0.9, 1.0, 0.95, 1.2], False),
    ])
    def test_maj_crossover_closure(self, mocker, ratios, passed):
        """Test ties after a strict win and drops after a tie both fail"""
        mocker.patch("src.verify.structure.log_center_star_success",
                     side_effect=[np.log(ratios), np.zeros(len(ratios))])
        report = check_maj_crossover(rho=0.9, n=5, r=3, k_max=len(ratios), tolerance=0.0)
        assert report.passed is passed

    def test_maj_crossover_preconditions(self):
        """Test even r is refused"""
        with pytest.raises(PreconditionError):
            check_maj_crossover(r=2)

    def test_tpower(self):
        """Test decay slopes of the default candidates"""
        report = run_check("check_tpower_diagnostic", rho=0.5, n=7)
        assert report.passed
        assert set(report.details["slopes"]) == {"dictator_half_cube", "majority", "subcube"}

    def test_small_player(self):
        """Test dictators are the strict maximisers on few players"""
        report = run_check("check_small_player_optimality", random_trees=2)
        assert report.passed, report.witness
        assert report.details["instances"] == 6

    def test_small_player_needs_two_bits(self):
        """Test other string lengths are refused"""
        with pytest.raises(PreconditionError):
            check_small_player_optimality([path_instance(2, 0.5, 3)])



def _opposed_ball_probability(n, s, t, rho):
    """Pr[sum x <= -s sqrt(n), sum y >= t sqrt(n)] by counting flips of each sign"""
    eps = 0.5 - 0.5 * rho
    total = 0.0
    for minus in range(n + 1):
        if n - 2 * minus > -s * math.sqrt(n):
            continue
        hit = 0.0
        for flipped_plus in range(n - minus + 1):
            for flipped_minus in range(minus + 1):
                if n - 2 * (flipped_plus + minus - flipped_minus) >= t * math.sqrt(n):
                    plus_law = math.comb(n - minus, flipped_plus) * eps ** flipped_plus * (1 - eps) ** (n - minus - flipped_plus)
                    minus_law = math.comb(minus, flipped_minus) * eps ** flipped_minus * (1 - eps) ** (minus - flipped_minus)
                    hit += plus_law * minus_law
        total += math.comb(n, minus) / 2 ** n * hit
    return total


@pytest.mark.integration
class TestOpposedBalls:
    """Integration tests for the opposed Hamming-ball comparison"""

    def test_ball_shapes(self):
        """Test the balls are the sum thresholds on each side"""
        first, second = opposed_balls(4, 1.0, 1.0)
        assert first.sum() == 5
        assert second.sum() == 5
        assert not (first & second).any()

    @pytest.mark.parametrize("s,t,expected", [(1.0, 1.0, 0.0100226380421), (2.0, 2.0, 1.37332835948e-05)])
    def test_exact_probability(self, s, t, expected):
        """Test opposed-ball probabilities at n=14 against a binomial count"""
        row = next(r for r in opposed_ball_rows(14, [0.5]) if r["s"] == s and r["t"] == t)
        assert row["exact"] == pytest.approx(_opposed_ball_probability(14, s, t, 0.5), rel=1e-9)
        assert row["exact"] == pytest.approx(expected, rel=1e-9)

    def test_within_factor_four(self):
        """Test every opposed-ball probability sits within four limit estimates"""
        rows = opposed_ball_rows()
        assert len(rows) == 18
        assert max(r["exact_over_upper"] for r in rows) < 4.0
        tracker = SlackTracker()
        track_opposed_balls(tracker)
        assert tracker.worst >= 0.0

    def test_tight_factor_fails(self):
        """Test a factor below the observed ratio is reported as a failure"""
        tracker = SlackTracker()
        track_opposed_balls(tracker, factor=1.0)
        assert tracker.worst < 0.0
        assert tracker.witness["example"] == "opposed balls"

    def test_isoperimetric_check_asserts_balls(self, mocker):
        """Test the isoperimetric check fails when an opposed ball exceeds the estimate"""
        mocker.patch("src.verify.geometry.opposed_ball_rows", return_value=[
            {"n": 14, "s": 1.0, "t": 1.0, "rho": 0.5, "exact": 0.1, "limit_upper": 0.01, "exact_over_upper": 10.0}])
        report = check_isoperimetric_sets(n=6, trials=20, seed=1)
        assert not report.passed
        assert report.witness["example"] == "opposed balls"

    def test_hamming_tightness_reports_coarse_rho(self):
        """Test rho above one half is reported without being asserted"""
        report = run_check("check_hamming_tightness", grid=4)
        assert report.passed
        assert {r["rho"] for r in report.details["opposed_balls"]} == {0.2, 0.5, 0.8}

@pytest.mark.integration
class TestHelpers:
    """Integration tests for check helpers"""

    def test_two_point_slacks(self):
        """Test the series coefficients are nonnegative at a valid pair"""
        assert (two_point_slacks(0.5, 0.2) >= -1e-12).all()
        assert (sufficient_condition_slacks(0.5, 0.2) >= -1e-12).all()

    def test_third_size_example(self):
        """Test opposed third-size sets sit above the conditional bound"""
        example = third_size_example(n=10, rho=0.4)
        assert example["conditional_probability"] >= example["bound_at_sigma"]

    def test_every_check_registered(self):
        """Test every check module function is reachable by name"""
        assert {"check_aks_bound", "check_walk_bound", "check_forward_bb"} <= set(CHECKS)
