"""Evaluation metrics: exact Wasserstein-1 distance, weighted statistics,
per-attribute mean absolute error, and the naive participant-only estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .transport import solve_transport


@dataclass(frozen=True)
class DiscreteDistribution:
    points: np.ndarray  # (n, m) support
    masses: np.ndarray  # (n,) probabilities

    def __post_init__(self):
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, dtype=float)))
        object.__setattr__(self, "masses", np.asarray(self.masses, dtype=float))
        if self.masses.shape[0] != self.points.shape[0]:
            raise ValueError("one mass per support point required")
        if np.any(self.masses < 0) or abs(self.masses.sum() - 1.0) > 1e-9:
            raise ValueError("masses must be non-negative and sum to 1")

    @property
    def m(self):
        return self.points.shape[1]


def empirical(points):
    """Uniform masses over the given rows."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    return DiscreteDistribution(points, np.full(n, 1.0 / n))


def from_weighted(weighted):
    """DiscreteDistribution view of a server-side WeightedDataset."""
    return DiscreteDistribution(weighted.records, weighted.masses)


def naive_estimate(X1):
    """Ignore the non-participants: uniform masses over participant records."""
    vals = X1.values if hasattr(X1, "values") else X1
    return empirical(vals)


def merge_duplicates(dist):
    """Collapse identical support points, dropping zero-mass points."""
    keep = dist.masses > 0
    pts, masses = dist.points[keep], dist.masses[keep]
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inv, masses)
    return DiscreteDistribution(uniq, merged / merged.sum())


def wasserstein1(A, B):
    """Exact order-1 optimal transport cost with Euclidean ground distance."""
    if A.m != B.m:
        raise ValueError("distributions have different dimensionality")
    A = merge_duplicates(A)
    B = merge_duplicates(B)
    if A.points.shape[0] == 0 or B.points.shape[0] == 0:
        raise ValueError("empty support")
    C = cdist(A.points, B.points)
    return solve_transport(A.masses, B.masses, C)


def subsample(dist, size, rng):
    """Uniform-mass empirical approximation: size i.i.d. draws from dist.

    Keeps exact OT tractable on large supports; a no-op when the support is
    already small enough.
    """
    n = dist.points.shape[0]
    if n <= size:
        return dist
    idx = rng.choice(n, size=size, p=dist.masses / dist.masses.sum())
    return empirical(dist.points[idx])


def mix(A, B, weight_a):
    """Mixture weight_a * A + (1 - weight_a) * B on the union support."""
    pts = np.vstack([A.points, B.points])
    masses = np.concatenate([weight_a * A.masses, (1.0 - weight_a) * B.masses])
    return DiscreteDistribution(pts, masses / masses.sum())


def weighted_mean(dist):
    return dist.masses @ dist.points


def weighted_variance(dist):
    """Population form: sum w (x - mean)^2 with weights summing to 1."""
    mean = weighted_mean(dist)
    return dist.masses @ (dist.points - mean) ** 2


def weighted_median(dist):
    """Lower weighted median per attribute: smallest support value whose
    cumulative weight reaches 1/2."""
    out = np.empty(dist.m)
    for j in range(dist.m):
        order = np.argsort(dist.points[:, j], kind="stable")
        cum = np.cumsum(dist.masses[order])
        i = int(np.searchsorted(cum, 0.5 - 1e-9))
        out[j] = dist.points[order[i], j]
    return out


@dataclass(frozen=True)
class StatReport:
    mean: np.ndarray
    variance: np.ndarray
    median: np.ndarray


def stat_report(dist):
    return StatReport(
        mean=weighted_mean(dist),
        variance=weighted_variance(dist),
        median=weighted_median(dist),
    )


def mae_per_attribute(estimate, truth):
    """Mean absolute deviation across attributes, one value per statistic."""
    out = {}
    for name in ("mean", "variance", "median"):
        a = getattr(estimate, name)
        b = getattr(truth, name)
        if a.shape != b.shape:
            raise ValueError("statistic dimension mismatch")
        out[name] = float(np.abs(a - b).mean())
    return out


def mae(estimate_vec, truth_vec):
    estimate_vec = np.asarray(estimate_vec, dtype=float)
    truth_vec = np.asarray(truth_vec, dtype=float)
    if estimate_vec.shape != truth_vec.shape:
        raise ValueError("dimension mismatch")
    return float(np.abs(estimate_vec - truth_vec).mean())
