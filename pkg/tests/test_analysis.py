import numpy as np
import pytest

from eprsim import analysis, layers, measure

from oracles import brute_conditional_marginal, random_unit_vector

A = measure.as_setting([1.0, 0.0, 0.0])
B60 = measure.as_setting([0.5, np.sqrt(3.0) / 2.0, 0.0], normalize=True)
B = measure.as_setting([0.6, 0.8, 0.0])
C = measure.as_setting([0.0, 0.28, 0.96], normalize=True)


@pytest.fixture(scope="module")
def universe():
    return layers.build_universe(4, 3, 40, np.random.default_rng(101))


@pytest.fixture(scope="module")
def tied_universe():
    return layers.build_universe(4, 3, 40, np.random.default_rng(103), tie_weights=True)


class TestPairExpectation:
    def test_equal_settings(self, universe):
        assert analysis.pair_expectation(universe, A, A) == pytest.approx(-1.0, abs=1e-12)

    def test_orthogonal(self, universe):
        assert analysis.pair_expectation(universe, A, [0, 1, 0]) == pytest.approx(0.0, abs=1e-12)

    def test_sixty_degrees(self, universe):
        assert analysis.pair_expectation(universe, A, B60) == pytest.approx(-0.5, abs=1e-12)

    def test_random_settings_all_pair_counts(self):
        rng = np.random.default_rng(107)
        for pairs in (1, 2, 7):
            uni = layers.build_universe(4, 2, pairs, rng)
            a, b = random_unit_vector(rng), random_unit_vector(rng)
            got = analysis.pair_expectation(uni, a, b)
            assert got == pytest.approx(-float(np.dot(a, b)), abs=1e-12)


class TestConditionalOutcomeBias:
    def test_zero_with_companions(self, universe):
        for side in ("A", "B"):
            assert analysis.conditional_outcome_bias(universe, A, B, side=side) <= 1e-12

    def test_zero_for_single_pair(self):
        uni = layers.build_universe(4, 2, 1, np.random.default_rng(109))
        assert analysis.conditional_outcome_bias(uni, A, B) == 0.0

    def test_source_level_zero(self, universe):
        assert analysis.conditional_outcome_bias(universe, A, B, by="source") <= 1e-12

    def test_witness_without_companions(self, universe):
        # removing the sign-flipped twins breaks the cancellation mechanism
        for side in ("A", "B"):
            value = analysis.conditional_outcome_bias(
                universe, A, B, side=side, drop_companions=True
            )
            assert value > 0.1

    def test_validation(self, universe):
        with pytest.raises(ValueError):
            analysis.conditional_outcome_bias(universe, A, B, side="C")
        with pytest.raises(ValueError):
            analysis.conditional_outcome_bias(universe, A, B, by="half")


class TestDependenceReport:
    def test_fields_in_unit_interval(self, universe):
        rep = analysis.dependence_report(universe, A, B, C)
        for name, value in rep.as_dict().items():
            assert 0.0 <= value <= 1.0, name

    def test_conditional_independence_exact(self, universe):
        rep = analysis.dependence_report(universe, A, B, C)
        assert rep.tv_cond_indep <= 1e-12

    def test_conditional_pair_dependence_positive(self, universe):
        rep = analysis.dependence_report(universe, A, B, C)
        assert rep.cond_pair_dependence > 0.0

    def test_setting_shift_positive_and_matches_oracle(self, universe):
        rep = analysis.dependence_report(universe, A, B, C)
        assert rep.setting_shift > 0.0
        mu_ab = measure.build_measure(A, B, 4)
        mu_ac = measure.build_measure(A, C, 4)
        best = 0.0
        for lay in universe.layers:
            m_ab = brute_conditional_marginal(lay.col_to, mu_ab.cell_masses)
            m_ac = brute_conditional_marginal(lay.col_to, mu_ac.cell_masses)
            best = max(best, 0.5 * float(np.abs(m_ab - m_ac).sum()))
        assert rep.setting_shift == pytest.approx(best, abs=1e-12)

    def test_generic_weights_couple_label_and_source(self, universe):
        rep = analysis.dependence_report(universe, A, B, C)
        assert rep.r_lambda_dependence > 0.0
        assert rep.factorization_defect > 0.0

    def test_tied_weights_decouple_label_and_source(self, tied_universe):
        rep = analysis.dependence_report(tied_universe, A, B, C)
        assert rep.r_lambda_dependence <= 1e-12
        assert rep.factorization_defect <= 1e-12

    def test_joint_vs_product_shrinks_with_pairs(self):
        mu = measure.build_measure(A, B, 4)
        small = layers.build_universe(4, 1, 10, np.random.default_rng(211))
        large = layers.build_universe(4, 1, 2000, np.random.default_rng(211))
        c = measure.as_setting([0, 0, 1.0])
        rep_small = analysis.dependence_report(small, A, B, c)
        rep_large = analysis.dependence_report(large, A, B, c)
        assert rep_large.tv_joint_vs_product < rep_small.tv_joint_vs_product
        assert rep_large.marginal_uniformity < rep_small.marginal_uniformity

    def test_rejects_equal_alternate_setting(self, universe):
        with pytest.raises(ValueError):
            analysis.dependence_report(universe, A, B, B)


class TestStationMarginalSettingDependence:
    def test_marginal_shift_shrinks_with_pairs(self):
        # For the full enumeration the station marginal is exactly uniform by
        # symmetry, hence setting-free; under sampling it is only
        # approximately so, with the defect shrinking as pairs grow.
        def marginal_tv(pairs, seed=509):
            uni = layers.build_universe(4, 1, pairs, np.random.default_rng(seed))
            mu_ab = measure.build_measure(A, B, 4)
            mu_ac = measure.build_measure(A, C, 4)
            pu_ab = analysis.station_pair_joint(uni, mu_ab).sum(axis=1)
            pu_ac = analysis.station_pair_joint(uni, mu_ac).sum(axis=1)
            return 0.5 * float(np.abs(pu_ab - pu_ac).sum())

        coarse = marginal_tv(20)
        fine = marginal_tv(2000)
        assert fine < coarse
        assert fine < 0.05
