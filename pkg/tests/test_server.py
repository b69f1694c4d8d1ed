import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dipps import ldp
from dipps.server import (ClassCounts, ClusterMassEstimate, WeightedDataset,
                          cluster_propensity, direct_counts_to_distribution,
                          invert_exponential_counts, point_propensity,
                          point_propensity_batch, propensity_pipeline,
                          reweight_entire, reweight_nonparticipant,
                          tally_reports)

from conftest import random_simplex


class TestTally:
    def test_basic(self):
        counts = tally_reports([1, 1, 2], 2)
        np.testing.assert_array_equal(counts.counts, [2, 1])

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="no reports"):
            tally_reports([], 3)

    def test_all_same_class(self):
        counts = tally_reports([2] * 7, 3)
        np.testing.assert_array_equal(counts.counts, [0, 7, 0])

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            tally_reports([1, 4], 3)


class TestInversion:
    def test_equal_counts(self):
        U = invert_exponential_counts(ClassCounts([50, 50]), 3.0)
        np.testing.assert_allclose(U.masses, [0.5, 0.5], atol=1e-12)

    def test_hand_computed_example(self):
        # counts (73, 27), eps 2; smoothing shifts to 73.5 / 27.5
        U = invert_exponential_counts(ClassCounts([73, 27]), 2.0)
        d = np.log(73.5 / 27.5)
        assert d == pytest.approx(0.983099, abs=1e-6)
        np.testing.assert_allclose(U.masses, [(1 + d) / 2, (1 - d) / 2],
                                   atol=1e-9)
        np.testing.assert_allclose(U.masses, [0.99155, 0.00845], atol=1e-5)

    def test_exact_inverse_of_softmax(self):
        p = np.array([0.7, 0.2, 0.1])
        eps = 1.0
        expected = 1000 * ldp.exp_mech_distribution(p, eps)
        U = invert_exponential_counts(ClassCounts(expected), eps, smoothing=0.0)
        np.testing.assert_allclose(U.masses, p, atol=1e-6)

    def test_zero_counts_survive_smoothing(self):
        U = invert_exponential_counts(ClassCounts([0, 10, 0]), 1.0)
        assert np.all(U.masses >= 1e-6 - 1e-15)
        assert U.masses.sum() == pytest.approx(1.0)

    def test_clipping_renormalizes(self):
        # extreme ratio at small eps pushes the raw solution off the simplex
        U = invert_exponential_counts(ClassCounts([1000, 1]), 0.1)
        assert np.all(U.masses >= 1e-6 - 1e-15)
        assert U.masses.sum() == pytest.approx(1.0, abs=1e-9)

    def test_requires_k2(self):
        with pytest.raises(ValueError, match="K >= 2"):
            invert_exponential_counts(ClassCounts([10]), 1.0)

    @given(st.integers(min_value=2, max_value=10), st.integers(0, 10**6),
           st.sampled_from([0.5, 1.0, 4.0]))
    @settings(max_examples=100, deadline=None)
    def test_inversion_exactness_property(self, k, seed, eps):
        rng = np.random.default_rng(seed)
        p = random_simplex(rng, k)
        counts = 1000 * ldp.exp_mech_distribution(p, eps)
        U = invert_exponential_counts(ClassCounts(counts), eps, smoothing=0.0)
        assert np.max(np.abs(U.masses - p)) <= 1e-6


class TestDirectCounts:
    def test_frequencies(self):
        U = direct_counts_to_distribution(ClassCounts([2, 1, 1]))
        np.testing.assert_allclose(U.masses, [0.5, 0.25, 0.25])

    def test_onehot(self):
        U = direct_counts_to_distribution(ClassCounts([0, 9, 0]))
        np.testing.assert_allclose(U.masses, [0, 1, 0])

    def test_empty(self):
        with pytest.raises(ValueError, match="empty"):
            direct_counts_to_distribution(ClassCounts([0, 0]))

    def test_ps_sampling_recovers_rho(self):
        rng = np.random.default_rng(0)
        n = 10**5
        draws = ldp.ps_sample([0.3, 0.7], rng, size=n)
        counts = tally_reports(draws.tolist(), 2)
        U = direct_counts_to_distribution(counts)
        sigma = np.sqrt(0.3 * 0.7 / n)
        np.testing.assert_allclose(U.masses, [0.3, 0.7], atol=3 * sigma)


class TestClusterPropensity:
    def test_single_cluster_is_participation_rate(self):
        rho = np.ones((100, 1))
        e = cluster_propensity(rho, ClusterMassEstimate([1.0]), n0=300)
        np.testing.assert_allclose(e, [0.25])

    def test_direct_formula(self):
        rho = np.zeros((100, 2))
        rho[:80, 0] = 1.0
        rho[80:, 1] = 1.0
        e = cluster_propensity(rho, ClusterMassEstimate([0.2, 0.8]), n0=100)
        np.testing.assert_allclose(e, [80 / (80 + 20), 20 / (20 + 80)])

    def test_floor_interaction_stays_below_one(self):
        rho = np.zeros((50, 2))
        rho[:, 0] = 1.0
        U = ClusterMassEstimate([1e-6, 1 - 1e-6])
        e = cluster_propensity(rho, U, n0=100)
        assert e[0] == pytest.approx(50 / (50 + 1e-4))
        assert e[0] < 1.0

    def test_monotone_in_mass(self):
        rng = np.random.default_rng(1)
        rho = rng.dirichlet(np.ones(3), size=40)
        base = np.array([0.2, 0.3, 0.5])
        for bump in (0.1, 0.2):
            u2 = base.copy()
            u2[0] += bump
            u2 /= u2.sum()
            e1 = cluster_propensity(rho, ClusterMassEstimate(base), 100)
            e2 = cluster_propensity(rho, ClusterMassEstimate(u2), 100)
            assert e2[0] <= e1[0] + 1e-12


class TestPointPropensity:
    def test_onehot(self):
        assert point_propensity([1.0, 0.0], np.array([0.8, 0.2])) == 0.8

    def test_dot_product(self):
        assert point_propensity([0.5, 0.5], np.array([0.8, 0.2])) == \
            pytest.approx(0.5)

    def test_constant_scores(self):
        rng = np.random.default_rng(0)
        rho = rng.dirichlet(np.ones(4), size=10)
        e = point_propensity_batch(rho, np.full(4, 0.3))
        np.testing.assert_allclose(e, 0.3, atol=1e-12)

    def test_bounded_by_cluster_scores(self):
        rng = np.random.default_rng(1)
        scores = np.array([0.1, 0.5, 0.9])
        rho = rng.dirichlet(np.ones(3), size=50)
        e = point_propensity_batch(rho, scores)
        assert np.all(e >= scores.min() - 1e-12)
        assert np.all(e <= scores.max() + 1e-12)


class TestReweight:
    def test_constant_propensity_gives_uniform(self):
        X1 = np.zeros((10, 2))
        e = np.full(10, 10 / 14)
        wd = reweight_entire(X1, e, n1=10, n0=4)
        np.testing.assert_allclose(wd.masses, 0.1, atol=1e-12)

    def test_entire_hand_example(self):
        wd = reweight_entire(np.zeros((2, 1)), np.array([0.5, 0.5]), 2, 2)
        np.testing.assert_allclose(wd.masses, [0.5, 0.5])

    def test_entire_unequal(self):
        wd = reweight_entire(np.zeros((2, 1)), np.array([0.25, 0.75]), 2, 2)
        # raw masses (1.0, 1/3) normalize to (0.75, 0.25)
        np.testing.assert_allclose(wd.masses, [0.75, 0.25])

    def test_nonparticipant_uniform_raw(self):
        wd = reweight_nonparticipant(np.zeros((3, 1)), np.full(3, 0.5), 3, 10)
        # raw mass (1/0.5 - 1)/10 = 0.1 per point
        np.testing.assert_allclose(wd.masses, 1 / 3)

    def test_nonparticipant_hand_example(self):
        wd = reweight_nonparticipant(np.zeros((2, 1)), np.array([0.5, 0.25]),
                                     2, 4)
        np.testing.assert_allclose(wd.masses, [0.25, 0.75])

    def test_all_participant_mass_errors(self):
        with pytest.raises(ValueError, match="empty"):
            reweight_nonparticipant(np.zeros((2, 1)), np.ones(2), 2, 4)

    def test_score_above_one_errors(self):
        with pytest.raises(ValueError, match="upstream"):
            reweight_nonparticipant(np.zeros((2, 1)), np.array([0.5, 1.2]),
                                    2, 4)

    def test_zero_score_errors(self):
        with pytest.raises(ValueError, match="positive"):
            reweight_entire(np.zeros((2, 1)), np.array([0.0, 0.5]), 2, 2)

    def test_masses_normalized(self):
        rng = np.random.default_rng(0)
        e = rng.uniform(0.1, 0.9, size=30)
        for wd in (reweight_entire(np.zeros((30, 1)), e, 30, 70),
                   reweight_nonparticipant(np.zeros((30, 1)), e, 30, 70)):
            assert np.all(wd.masses >= 0)
            assert wd.masses.sum() == pytest.approx(1.0, abs=1e-9)


class TestOracleEquivalence:
    """With exact responsibilities and exact class masses, the pipeline must
    reproduce the analytic propensities and the uniform all-sample weights."""

    def test_exact_inputs_recover_analytics(self):
        rng = np.random.default_rng(0)
        K, n1, n0 = 3, 400, 600
        pi1 = np.array([0.5, 0.3, 0.2])
        pi0 = np.array([0.2, 0.3, 0.5])
        # one-hot responsibilities drawn from the participant class masses
        labels1 = rng.choice(K, size=n1, p=pi1)
        rho1 = np.eye(K)[labels1]
        # use exact class masses for the two populations
        sums1 = rho1.sum(axis=0)
        U = ClusterMassEstimate(pi0)
        scores = propensity_pipeline(rho1, U, n0)
        expected_cluster = sums1 / (sums1 + n0 * pi0)
        np.testing.assert_allclose(scores.cluster_scores, expected_cluster,
                                   atol=1e-12)
        # each one-hot point inherits its cluster's score exactly
        np.testing.assert_allclose(scores.point_scores,
                                   expected_cluster[labels1], atol=1e-12)

    def test_no_bias_case_recovers_uniform(self):
        # empirical class masses of the participants used as U with matched
        # scale: every point's propensity is n1 / (n0 + n1), weights uniform
        rng = np.random.default_rng(1)
        K, n1, n0 = 3, 300, 900
        labels = rng.choice(K, size=n1, p=[0.3, 0.4, 0.3])
        rho1 = np.eye(K)[labels]
        sums1 = rho1.sum(axis=0)
        U = ClusterMassEstimate(sums1 / sums1.sum())
        scores = propensity_pipeline(rho1, U, n0)
        np.testing.assert_allclose(scores.point_scores, n1 / (n0 + n1),
                                   atol=1e-12)
        wd = reweight_entire(np.zeros((n1, 1)), scores.point_scores, n1, n0)
        np.testing.assert_allclose(wd.masses, 1 / n1, atol=1e-12)
        assert np.abs(wd.masses - 1 / n1).sum() < 1e-6

    def test_pipeline_deterministic(self):
        rng = np.random.default_rng(2)
        rho1 = rng.dirichlet(np.ones(3), size=100)
        counts = ClassCounts([40, 30, 30])
        results = []
        for _ in range(2):
            U = invert_exponential_counts(counts, 2.0)
            scores = propensity_pipeline(rho1, U, 100)
            wd = reweight_entire(np.zeros((100, 1)), scores.point_scores,
                                 100, 100)
            results.append(wd.masses.copy())
        np.testing.assert_array_equal(results[0], results[1])


class TestWeightedDataset:
    def test_rejects_negative_masses(self):
        with pytest.raises(ValueError):
            WeightedDataset(np.zeros((2, 1)), np.array([-0.5, 1.5]))

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            WeightedDataset(np.zeros((2, 1)), np.array([0.4, 0.4]))
