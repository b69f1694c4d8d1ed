"""Class-assignment model: PCA projection followed by a Gaussian mixture.

The fitted model maps a record to a posterior probability vector over the K
mixture components.  That vector is the only thing clients ever compute from
their raw data, so the model must serialize into an exact, versioned JSON
document for broadcast.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

MODEL_DOC_VERSION = "1"

_COV_RIDGE = 1e-6  # added to covariance diagonals to keep EM non-singular


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray                      # (m,)
    components: np.ndarray                # (q, m), orthonormal rows
    explained_variance_ratio: np.ndarray  # (q,)

    def project(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.mean.shape[0]:
            raise ValueError("record dimension does not match PCA model")
        return (X - self.mean) @ self.components.T


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray      # (K,)
    means: np.ndarray        # (K, q)
    covariances: np.ndarray  # (K, q, q)
    log_likelihoods: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def K(self):
        return self.weights.shape[0]

    def log_prob(self, Y):
        """Per-point, per-component joint log density log w_k + log N(y)."""
        Y = np.atleast_2d(Y)
        n, q = Y.shape
        out = np.empty((n, self.K))
        for k in range(self.K):
            L = np.linalg.cholesky(self.covariances[k])
            diff = Y - self.means[k]
            sol = np.linalg.solve(L, diff.T)
            out[:, k] = (
                np.log(self.weights[k])
                - np.sum(np.log(np.diag(L)))
                - 0.5 * q * np.log(2 * np.pi)
                - 0.5 * np.sum(sol ** 2, axis=0)
            )
        return out

    def responsibilities(self, Y):
        lp = self.log_prob(Y)
        return np.exp(lp - logsumexp(lp, axis=1, keepdims=True))


@dataclass(frozen=True)
class ClassAssignmentModel:
    pca: PcaModel
    gmm: GmmModel
    version: str = MODEL_DOC_VERSION

    @property
    def K(self):
        return self.gmm.K

    @property
    def m(self):
        return self.pca.mean.shape[0]


@dataclass(frozen=True)
class EmConfig:
    tol: float = 1e-4        # relative log-likelihood change
    max_iter: int = 200
    n_restarts: int = 5
    seed: int = 0


def fit_pca(X, variance_target=0.8):
    """Keep the smallest prefix of principal directions reaching the target
    cumulative explained-variance ratio."""
    vals = X.values if hasattr(X, "values") else np.atleast_2d(np.asarray(X, dtype=float))
    n, m = vals.shape
    if n < 2:
        raise ValueError("need at least two rows to fit a PCA")
    if not 0.0 < variance_target <= 1.0:
        raise ValueError("variance_target must lie in (0, 1]")
    mean = vals.mean(axis=0)
    centered = vals - mean
    cov = centered.T @ centered / (n - 1)
    eigval, eigvec = np.linalg.eigh(cov)
    order = np.argsort(eigval)[::-1]
    eigval = np.clip(eigval[order], 0.0, None)
    eigvec = eigvec[:, order]
    total = eigval.sum()
    if total <= 0:
        raise ValueError("no direction with positive variance")
    ratios = eigval / total
    positive = ratios > 1e-12
    cum = np.cumsum(ratios)
    q = int(np.searchsorted(cum, variance_target - 1e-12) + 1)
    q = min(q, int(positive.sum()))
    components = eigvec[:, :q].T.copy()
    # fix each component's sign so serialization is stable
    for r in range(q):
        j = np.argmax(np.abs(components[r]))
        if components[r, j] < 0:
            components[r] = -components[r]
    return PcaModel(mean=mean, components=components,
                    explained_variance_ratio=ratios[:q])


def _init_means(Y, K, rng):
    """k-means++-style seeding: first center uniform, then distance-weighted."""
    n = Y.shape[0]
    centers = [Y[rng.integers(n)]]
    for _ in range(K - 1):
        d2 = np.min(
            np.sum((Y[:, None, :] - np.asarray(centers)[None, :, :]) ** 2, axis=2),
            axis=1)
        tot = d2.sum()
        if tot <= 0:
            centers.append(Y[rng.integers(n)])
        else:
            centers.append(Y[rng.choice(n, p=d2 / tot)])
    return np.asarray(centers)


def _em_run(Y, K, config, rng):
    n, q = Y.shape
    means = _init_means(Y, K, rng)
    covariances = np.tile(np.cov(Y.T).reshape(q, q) + _COV_RIDGE * np.eye(q), (K, 1, 1))
    weights = np.full(K, 1.0 / K)
    model = GmmModel(weights, means, covariances)
    history = []
    prev = -np.inf
    for _ in range(config.max_iter):
        lp = model.log_prob(Y)
        per_point = logsumexp(lp, axis=1)
        ll = per_point.sum()
        history.append(ll)
        resp = np.exp(lp - per_point[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk < 1e-10):
            raise FloatingPointError("empty component")
        weights = nk / n
        means = (resp.T @ Y) / nk[:, None]
        covariances = np.empty((K, q, q))
        for k in range(K):
            diff = Y - means[k]
            covariances[k] = (resp[:, k, None] * diff).T @ diff / nk[k]
            covariances[k] += _COV_RIDGE * np.eye(q)
        model = GmmModel(weights, means, covariances)
        if np.isfinite(prev) and abs(ll - prev) <= config.tol * abs(prev):
            break
        prev = ll
    final = logsumexp(model.log_prob(Y), axis=1).sum()
    history.append(final)
    return GmmModel(weights, means, covariances, log_likelihoods=np.asarray(history))


def fit_gmm(Y, K, config=EmConfig()):
    """EM with restarts; returns the restart with the best final log-likelihood."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Y.shape[0]
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > n:
        raise ValueError(f"K={K} exceeds the number of rows n={n}")
    if K == 1:
        # closed form: single Gaussian at the sample moments
        q = Y.shape[1]
        mean = Y.mean(axis=0)
        diff = Y - mean
        cov = diff.T @ diff / n + _COV_RIDGE * np.eye(q)
        model = GmmModel(np.array([1.0]), mean[None, :], cov[None, :, :])
        ll = logsumexp(model.log_prob(Y), axis=1).sum()
        return GmmModel(model.weights, model.means, model.covariances,
                        log_likelihoods=np.array([ll]))
    root = np.random.SeedSequence(config.seed)
    best = None
    for ss in root.spawn(config.n_restarts):
        rng = np.random.default_rng(ss)
        try:
            model = _em_run(Y, K, config, rng)
        except (FloatingPointError, np.linalg.LinAlgError):
            continue
        if best is None or model.log_likelihoods[-1] > best.log_likelihoods[-1]:
            best = model
    if best is None:
        raise RuntimeError("all EM restarts degenerated")
    return best


def select_k_elbow(Y, k_grid=range(2, 11), config=EmConfig()):
    """Pick the interior grid point with the largest curvature drop of the
    log-likelihood; ties go to the smallest K."""
    k_grid = list(k_grid)
    if len(k_grid) < 3:
        raise ValueError("elbow selection needs at least 3 grid points")
    if any(b <= a for a, b in zip(k_grid, k_grid[1:])):
        raise ValueError("k_grid must be strictly ascending")
    lls = [fit_gmm(Y, k, config).log_likelihoods[-1] for k in k_grid]
    best_k, best_curv = None, -np.inf
    for i in range(1, len(k_grid) - 1):
        curv = 2 * lls[i] - lls[i - 1] - lls[i + 1]
        if curv > best_curv + 1e-12:
            best_k, best_curv = k_grid[i], curv
    return best_k


def assign(model, d):
    """Posterior class probabilities rho_d of a single record."""
    y = model.pca.project(np.asarray(d, dtype=float).reshape(1, -1))
    return model.gmm.responsibilities(y)[0]


def assign_batch(model, X):
    vals = X.values if hasattr(X, "values") else np.atleast_2d(np.asarray(X, dtype=float))
    return model.gmm.responsibilities(model.pca.project(vals))


def serialize_model(model):
    """Versioned JSON document; this is the exact broadcast payload."""
    return json.dumps({
        "version": model.version,
        "pca": {
            "mean": model.pca.mean.tolist(),
            "components": model.pca.components.tolist(),
            "explained_variance_ratio": model.pca.explained_variance_ratio.tolist(),
        },
        "gmm": {
            "weights": model.gmm.weights.tolist(),
            "means": model.gmm.means.tolist(),
            "covariances": model.gmm.covariances.tolist(),
        },
    })


def deserialize_model(doc):
    try:
        d = json.loads(doc)
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed model document: {e}")
    version = d.get("version")
    if version != MODEL_DOC_VERSION:
        raise ValueError(
            f"unsupported model document version {version!r}, "
            f"expected {MODEL_DOC_VERSION!r}")
    try:
        pca = PcaModel(
            mean=np.asarray(d["pca"]["mean"], dtype=float),
            components=np.asarray(d["pca"]["components"], dtype=float),
            explained_variance_ratio=np.asarray(
                d["pca"]["explained_variance_ratio"], dtype=float),
        )
        gmm = GmmModel(
            weights=np.asarray(d["gmm"]["weights"], dtype=float),
            means=np.asarray(d["gmm"]["means"], dtype=float),
            covariances=np.asarray(d["gmm"]["covariances"], dtype=float),
        )
    except KeyError as e:
        raise ValueError(f"malformed model document: missing {e}")
    return ClassAssignmentModel(pca=pca, gmm=gmm, version=version)
