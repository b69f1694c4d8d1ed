import numpy as np
import pytest

from dipps.data import SyntheticSpec, generate_synthetic
from dipps.model import (ClassAssignmentModel, EmConfig, assign, assign_batch,
                         deserialize_model, fit_gmm, fit_pca, select_k_elbow,
                         serialize_model)


class TestPca:
    def test_prefix_rule(self):
        # construct data with eigenvalue ratios approx (0.6, 0.25, 0.10, 0.05)
        rng = np.random.default_rng(0)
        n = 20000
        scales = np.sqrt(np.array([0.6, 0.25, 0.10, 0.05]))
        X = rng.normal(size=(n, 4)) * scales
        pca = fit_pca(X, 0.8)
        assert pca.components.shape[0] == 2

    def test_full_rank_at_target_one(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(50, 4))
        pca = fit_pca(X, 1.0)
        assert pca.components.shape[0] == 4

    def test_collinear_data(self):
        t = np.linspace(-1, 1, 30)
        X = np.column_stack([t, 2 * t])  # exactly on a line
        pca = fit_pca(X, 0.8)
        assert pca.components.shape[0] == 1
        assert pca.explained_variance_ratio[0] == pytest.approx(1.0)
        # the surviving direction is (1, 2) / sqrt(5)
        np.testing.assert_allclose(np.abs(pca.components[0]),
                                   np.array([1, 2]) / np.sqrt(5), atol=1e-12)

    def test_components_orthonormal(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(100, 5)) @ rng.normal(size=(5, 5))
        pca = fit_pca(X, 1.0)
        gram = pca.components @ pca.components.T
        np.testing.assert_allclose(gram, np.eye(pca.components.shape[0]),
                                   atol=1e-8)

    def test_reconstruction_with_all_components(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(60, 4))
        pca = fit_pca(X, 1.0)
        Y = pca.project(X)
        back = Y @ pca.components + pca.mean
        np.testing.assert_allclose(back, X, atol=1e-8)

    def test_ratios_bounded(self):
        rng = np.random.default_rng(4)
        pca = fit_pca(rng.normal(size=(40, 6)), 1.0)
        assert pca.explained_variance_ratio.sum() <= 1 + 1e-9
        assert np.all(np.diff(pca.explained_variance_ratio) <= 1e-12)

    def test_degenerate_input(self):
        X = np.zeros((10, 3))
        with pytest.raises(ValueError, match="positive variance"):
            fit_pca(X, 0.8)

    def test_invalid_target(self):
        with pytest.raises(ValueError):
            fit_pca(np.random.default_rng(0).normal(size=(10, 2)), 1.5)


class TestGmm:
    def test_k1_closed_form(self):
        rng = np.random.default_rng(0)
        Y = rng.normal(size=(200, 2))
        gmm = fit_gmm(Y, 1)
        np.testing.assert_allclose(gmm.weights, [1.0])
        np.testing.assert_allclose(gmm.means[0], Y.mean(axis=0), atol=1e-12)
        diff = Y - Y.mean(axis=0)
        np.testing.assert_allclose(gmm.covariances[0],
                                   diff.T @ diff / 200 + 1e-6 * np.eye(2),
                                   atol=1e-10)

    def test_two_separated_blobs(self):
        rng = np.random.default_rng(1)
        Y = np.vstack([rng.normal(-5, 0.5, size=(300, 2)),
                       rng.normal(5, 0.5, size=(300, 2))])
        gmm = fit_gmm(Y, 2, EmConfig(seed=3))
        centers = sorted(gmm.means[:, 0])
        assert abs(centers[0] - (-5)) < 0.1
        assert abs(centers[1] - 5) < 0.1

    def test_loglik_monotone(self):
        rng = np.random.default_rng(2)
        Y = np.vstack([rng.normal(-2, 1, size=(150, 2)),
                       rng.normal(2, 1, size=(150, 2))])
        gmm = fit_gmm(Y, 3, EmConfig(seed=0))
        diffs = np.diff(gmm.log_likelihoods)
        assert np.all(diffs >= -1e-8)

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(3)
        Y = rng.normal(size=(100, 2))
        g1 = fit_gmm(Y, 2, EmConfig(seed=9))
        g2 = fit_gmm(Y, 2, EmConfig(seed=9))
        np.testing.assert_array_equal(g1.means, g2.means)
        np.testing.assert_array_equal(g1.covariances, g2.covariances)

    def test_k_exceeds_n(self):
        with pytest.raises(ValueError, match="exceeds"):
            fit_gmm(np.zeros((3, 2)), 5)

    def test_k_below_one(self):
        with pytest.raises(ValueError):
            fit_gmm(np.zeros((3, 2)), 0)


class TestElbow:
    def test_hand_computed_second_differences(self, monkeypatch):
        lls = {1: -1000.0, 2: -700.0, 3: -600.0, 4: -580.0, 5: -575.0}

        class Fake:
            def __init__(self, k):
                self.log_likelihoods = np.array([lls[k]])

        monkeypatch.setattr("dipps.model.fit_gmm",
                            lambda Y, k, config: Fake(k))
        assert select_k_elbow(None, [1, 2, 3, 4, 5]) == 2

    def test_linear_curve_ties_to_smallest(self, monkeypatch):
        class Fake:
            def __init__(self, k):
                self.log_likelihoods = np.array([-100.0 + 10.0 * k])

        monkeypatch.setattr("dipps.model.fit_gmm",
                            lambda Y, k, config: Fake(k))
        assert select_k_elbow(None, [1, 2, 3, 4]) == 2

    def test_short_grid_errors(self):
        with pytest.raises(ValueError, match="3 grid points"):
            select_k_elbow(np.zeros((10, 2)), [2, 3])

    def test_recovers_true_component_count(self):
        rng = np.random.default_rng(5)
        Y = np.vstack([rng.normal(c, 0.4, size=(200, 2))
                       for c in (-6, 0, 6)])
        k = select_k_elbow(Y, [1, 2, 3, 4, 5], EmConfig(seed=1))
        assert k == 3


def _fitted_model(seed=0, K=3):
    spec = SyntheticSpec(
        means=[[-5.0, 0.0], [5.0, 0.0], [0.0, 6.0]][:K],
        covariances=[np.eye(2) * 0.4] * K,
        pi_participant=np.full(K, 1.0 / K),
        pi_non_participant=np.full(K, 1.0 / K),
        n_participant=400, n_non_participant=10, seed=seed)
    draw = generate_synthetic(spec)
    pca = fit_pca(draw.split.participants.values, 1.0)
    gmm = fit_gmm(pca.project(draw.split.participants.values), K,
                  EmConfig(seed=seed))
    return ClassAssignmentModel(pca=pca, gmm=gmm), draw


class TestAssign:
    def test_probability_vector(self):
        model, draw = _fitted_model()
        rho = assign_batch(model, draw.split.participants.values)
        assert np.all(rho >= 0)
        np.testing.assert_allclose(rho.sum(axis=1), 1.0, atol=1e-9)

    def test_symmetric_midpoint(self):
        from dipps.model import GmmModel, PcaModel
        pca = PcaModel(mean=np.zeros(1), components=np.eye(1),
                       explained_variance_ratio=np.array([1.0]))
        gmm = GmmModel(weights=np.array([0.5, 0.5]),
                       means=np.array([[-1.0], [1.0]]),
                       covariances=np.array([[[1.0]], [[1.0]]]))
        rho = assign(ClassAssignmentModel(pca=pca, gmm=gmm), [0.0])
        np.testing.assert_allclose(rho, [0.5, 0.5], atol=1e-12)

    def test_point_at_far_component_mean(self):
        model, _ = _fitted_model()
        for mean in model.gmm.means:
            d = mean @ model.pca.components + model.pca.mean
            rho = assign(model, d)
            assert rho.max() > 0.99

    def test_k1_always_one(self):
        model, draw = _fitted_model(K=1)
        rho = assign(model, draw.split.participants.values[0])
        np.testing.assert_allclose(rho, [1.0])

    def test_dimension_mismatch(self):
        model, _ = _fitted_model()
        with pytest.raises(ValueError):
            assign(model, [0.0, 0.0, 0.0])

    def test_matches_true_labels_when_separated(self):
        model, draw = _fitted_model()
        rho = assign_batch(model, draw.split.participants.values)
        onehot = np.eye(3)[_match_components(model, draw)]
        tv = 0.5 * np.abs(rho - onehot).sum(axis=1).mean()
        assert tv < 0.05

    def test_serialization_round_trip(self):
        model, draw = _fitted_model()
        rng = np.random.default_rng(0)
        records = rng.uniform(-8, 8, size=(100, 2))
        back = deserialize_model(serialize_model(model))
        np.testing.assert_allclose(assign_batch(back, records),
                                   assign_batch(model, records), atol=1e-12)

    def test_truncated_document(self):
        model, _ = _fitted_model()
        with pytest.raises(ValueError, match="malformed"):
            deserialize_model(serialize_model(model)[:40])

    def test_wrong_version(self):
        model, _ = _fitted_model()
        doc = serialize_model(model).replace('"version": "1"', '"version": "99"')
        with pytest.raises(ValueError, match="version"):
            deserialize_model(doc)


def _match_components(model, draw):
    # map each true component to the fitted component nearest its mean
    fitted_means = model.gmm.means @ model.pca.components + model.pca.mean
    spec_means = np.array([[-5.0, 0.0], [5.0, 0.0], [0.0, 6.0]])
    mapping = np.argmin(
        np.linalg.norm(spec_means[:, None] - fitted_means[None], axis=2), axis=1)
    return mapping[draw.participant_labels]
