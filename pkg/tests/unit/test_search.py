"""
Unit tests for protocol search
"""

import numpy as np
import pytest

from src.core.cube import BooleanFunction
from src.core.errors import FamilyTooLarge, PreconditionError
from src.core.nicd import (
    Protocol,
    path_instance,
    star_dictator_closed_form,
    star_instance,
    star_plus_path_instance,
    success_probability,
)
from src.core.search import (
    Family,
    balanced_tables,
    best_simple_protocol,
    counterexample_search,
    dictator_class,
    exhaustive_protocol_search,
    exhaustive_protocol_values,
    family_tables,
    is_dictator_table,
    mixed_protocol_functions,
    monotone_balanced_tables,
    path_nondictator_ratio,
    star_path_success_table,
    star_ratio_experiment,
)


@pytest.mark.unit
class TestFamilies:
    """Test suite for candidate families"""

    def test_balanced_counts(self):
        """Test C(2^n, 2^{n-1}) balanced functions"""
        assert len(balanced_tables(1)) == 2
        assert len(balanced_tables(2)) == 6
        assert len(balanced_tables(3)) == 70

    def test_balanced_sorted(self):
        """Test tables come in increasing truth-table order"""
        strings = ["".join("1" if b else "0" for b in row) for row in balanced_tables(3)]
        assert strings == sorted(strings)

    def test_monotone_counts(self):
        """Test the monotone balanced families for small n"""
        assert len(monotone_balanced_tables(2)) == 2
        assert len(monotone_balanced_tables(3)) == 4

    def test_monotone_members_are_monotone(self):
        """Test every enumerated function is monotone and balanced"""
        for row in monotone_balanced_tables(4):
            f = BooleanFunction.from_indicator(4, row)
            assert f.is_monotone()
            assert f.is_balanced()

    def test_too_large(self):
        """Test enumeration limits"""
        with pytest.raises(FamilyTooLarge):
            balanced_tables(5)
        with pytest.raises(FamilyTooLarge):
            monotone_balanced_tables(6)

    def test_named_family(self):
        """Test an explicit function list is used as given"""
        tables, functions = family_tables([BooleanFunction.dictator(2, 1)], 2)
        assert tables.shape == (1, 4)
        assert functions[0].label == "dict:1"

    def test_named_family_arity(self):
        """Test named functions must match n"""
        with pytest.raises(PreconditionError):
            family_tables([BooleanFunction.dictator(3, 1)], 2)

    def test_dictator_class(self):
        """Test the 2n signed dictators"""
        functions = dictator_class(3)
        assert len(functions) == 6
        assert all(is_dictator_table(f.accept_set(), 3) for f in functions)
        assert not is_dictator_table(BooleanFunction.majority(3, 3).accept_set(), 3)


@pytest.mark.unit
class TestBestSimpleProtocol:
    """Test suite for the best simple protocol"""

    def test_path_dictator(self):
        """Test a dictator wins on a path"""
        inst = path_instance(2, 0.5, 2)
        f, value = best_simple_protocol(inst, Family.BALANCED)
        assert is_dictator_table(f.accept_set(), 2)
        assert value == pytest.approx(0.5625)

    def test_tie_breaks_to_smallest_table(self):
        """Test ties resolve to the smallest truth table"""
        inst = path_instance(2, 0.5, 2)
        f, _ = best_simple_protocol(inst, Family.BALANCED)
        assert f.truth_table == "0011"

    def test_star_three_leaves(self):
        """Test the dictator class wins on three star leaves"""
        inst = star_instance(3, 0.5, 2)
        f, value = best_simple_protocol(inst, "balanced")
        assert is_dictator_table(f.accept_set(), 2)
        assert value == pytest.approx(star_dictator_closed_form(3, 0.5))

    def test_singleton_family(self, path3_instance):
        """Test a one-function family returns that function"""
        d = BooleanFunction.dictator(1, 1)
        f, value = best_simple_protocol(path3_instance, [d])
        assert f.label == "dict:1"
        assert value == pytest.approx(success_probability(path3_instance, Protocol.simple(path3_instance.players, d)))

    def test_jobs_do_not_change_result(self):
        """Test the argmax is the same for any number of workers"""
        inst = path_instance(2, 0.6, 4)
        single = best_simple_protocol(inst, Family.BALANCED, jobs=1)
        threaded = best_simple_protocol(inst, Family.BALANCED, jobs=4)
        assert single[0] == threaded[0]
        assert single[1] == threaded[1]

    def test_monotone_family_reaches_balanced_optimum(self):
        """Test the best monotone simple protocol matches the best balanced one"""
        inst = star_plus_path_instance(3, 2, 0.7, 3)
        _, balanced = best_simple_protocol(inst, Family.BALANCED)
        _, monotone = best_simple_protocol(inst, Family.MONOTONE)
        assert monotone == pytest.approx(balanced, abs=1e-12)


@pytest.mark.unit
class TestExhaustiveSearch:
    """Test suite for the non-simple protocol search"""

    def test_adjacent_players(self):
        """Test the four simple dictator protocols are the maximisers"""
        inst = path_instance(1, 0.5, 2)
        result = exhaustive_protocol_search(inst)
        assert result.searched == 36
        assert result.value == pytest.approx(0.75)
        assert len(result.protocols) == 4
        assert all(p.is_simple() for p in result.protocols)

    def test_values_shape(self):
        """Test one value per function assignment"""
        inst = path_instance(1, 0.5, 2)
        functions = family_tables(Family.BALANCED, 2)[1]
        combos, values = exhaustive_protocol_values(inst, functions)
        assert combos.shape == (36, 2)
        assert values.shape == (36,)

    def test_too_large(self):
        """Test n > 2 is refused"""
        with pytest.raises(FamilyTooLarge):
            exhaustive_protocol_search(path_instance(1, 0.5, 3))
        with pytest.raises(FamilyTooLarge):
            exhaustive_protocol_search(star_instance(5, 0.5, 1))


@pytest.mark.unit
class TestStarPlusPath:
    """Test suite for star-plus-path tables and the counterexample scan"""

    def test_table_matches_dp(self):
        """Test the batched table against exact evaluation"""
        f_path, f_leaf = mixed_protocol_functions(4)
        table = star_path_success_table(f_path, f_leaf, 0.8, 3, 3)
        inst = star_plus_path_instance(2, 3, 0.8, 4)
        prot = Protocol({v: (f_leaf if 1 <= v <= 2 else f_path) for v in range(inst.vertex_count)})
        assert table[2, 3] == pytest.approx(success_probability(inst, prot), abs=1e-12)

    def test_pure_path_no_counterexample(self):
        """Test a pure path never beats the dictator"""
        report = counterexample_search(0.9, 4, [0], range(0, 6), Family.MONOTONE)
        assert report.hits == []
        assert report.first is None

    def test_pure_star_no_counterexample(self):
        """Test a star with the center playing has no counterexample"""
        report = counterexample_search(0.9, 4, range(0, 6), [0], Family.MONOTONE)
        assert report.hits == []

    def test_needs_four_bits(self):
        """Test n < 4 is refused"""
        with pytest.raises(PreconditionError):
            counterexample_search(0.9, 3, [1], [1])

    def test_report_dict(self):
        """Test the report serializes its ranges"""
        report = counterexample_search(0.9, 4, range(0, 3), range(0, 2), Family.MONOTONE)
        data = report.to_dict()
        assert data["k1_range"] == [0, 2]
        assert data["k2_range"] == [0, 1]
        assert data["hit_count"] == len(data["hits"])


@pytest.mark.unit
class TestRatioExperiments:
    """Test suite for the path and star ratio experiments"""

    def test_path_parity_ratio(self):
        """Test parity on n=2 loses a factor (1/2 + rho^2/2)/(1/2 + rho/2) per edge"""
        ratio = path_nondictator_ratio(0.5, 2, 3)
        assert ratio.ratio == pytest.approx(0.625 / 0.75)
        assert ratio.dictator == pytest.approx(0.75 ** 3)

    def test_path_ratio_below_one(self):
        """Test non-dictators lose on paths"""
        assert path_nondictator_ratio(0.7, 3, 4, Family.MONOTONE).ratio < 1.0

    def test_path_ratio_needs_non_dictator(self):
        """Test n=1 has no non-dictator"""
        with pytest.raises(PreconditionError):
            path_nondictator_ratio(0.5, 1, 2)

    def test_star_ratio_single_leaf(self):
        """Test one leaf always agrees and the limit is one"""
        rows = star_ratio_experiment(0.5, [1, 3], 3)
        assert rows[0].best_simple == pytest.approx(1.0)
        assert rows[0].limit == pytest.approx(1.0, abs=1e-9)
        assert rows[0].ratio == pytest.approx(1.0, abs=1e-9)
        assert np.isfinite(rows[1].ratio)
