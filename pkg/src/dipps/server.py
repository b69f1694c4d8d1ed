"""Server-side aggregation: count inversion, propensity scores, reweighting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COUNT_SMOOTHING = 0.5   # Jeffreys-style, keeps log ratios finite at zero counts
MASS_FLOOR = 1e-6       # post-inversion clip so propensities stay positive


@dataclass(frozen=True)
class ClassCounts:
    counts: np.ndarray  # (K,), how often each cluster index was reported

    def __post_init__(self):
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=float))
        if self.counts.ndim != 1 or np.any(self.counts < 0):
            raise ValueError("counts must be a non-negative vector")

    @property
    def K(self):
        return self.counts.shape[0]

    @property
    def n_reports(self):
        return float(self.counts.sum())


@dataclass(frozen=True)
class ClusterMassEstimate:
    """Estimated class-mass vector of the non-participant population."""

    masses: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "masses", np.asarray(self.masses, dtype=float))
        if abs(self.masses.sum() - 1.0) > 1e-9:
            raise ValueError("class masses must sum to 1")


@dataclass(frozen=True)
class PropensityScores:
    cluster_scores: np.ndarray  # (K,), in (0, 1)
    point_scores: np.ndarray    # (n1,), in (0, 1]


@dataclass(frozen=True)
class WeightedDataset:
    """Participant records with per-record probability masses."""

    records: np.ndarray  # (n1, m)
    masses: np.ndarray   # (n1,), non-negative, sums to 1

    def __post_init__(self):
        object.__setattr__(self, "records", np.atleast_2d(np.asarray(self.records, dtype=float)))
        object.__setattr__(self, "masses", np.asarray(self.masses, dtype=float))
        if self.masses.shape[0] != self.records.shape[0]:
            raise ValueError("one mass per record required")
        if np.any(self.masses < 0) or abs(self.masses.sum() - 1.0) > 1e-9:
            raise ValueError("masses must be non-negative and sum to 1")


def tally_reports(reports, K):
    """Count the 1-based cluster indices."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports")
    counts = np.zeros(K)
    for r in reports:
        r = int(r)
        if not 1 <= r <= K:
            raise ValueError(f"report {r} outside 1..{K}")
        counts[r - 1] += 1
    return ClassCounts(counts)


def invert_exponential_counts(counts, eps, smoothing=COUNT_SMOOTHING,
                              mass_floor=MASS_FLOOR):
    """Undo the softmax distortion of the exponential mechanism.

    The class masses U satisfy U_k - U_l = (2/eps) log(c_k / c_l) on expected
    counts, together with sum U = 1.  Sampling noise can push the solution
    outside the simplex, so entries below mass_floor are clipped and the
    vector renormalized.  Pass smoothing=0 to invert exact expected counts.
    """
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    c = counts.counts + smoothing
    if counts.K < 2:
        raise ValueError("count inversion needs K >= 2")
    if np.any(c <= 0):
        raise ValueError("non-positive counts; enable smoothing")
    log_c = np.log(c)
    # U_1 = (1/K) (1 + sum_{k>=2} (U_1 - U_k)), then U_k from the pair equations
    diffs = (2.0 / eps) * (log_c[0] - log_c[1:])
    u1 = (1.0 + diffs.sum()) / counts.K
    u = np.concatenate([[u1], u1 - diffs])
    low = u < mass_floor
    if np.any(low):
        # pin the floored entries and rescale the rest so the floor survives
        # the return to the simplex
        u[low] = mass_floor
        u[~low] *= (1.0 - low.sum() * mass_floor) / u[~low].sum()
    return ClusterMassEstimate(u)


def direct_counts_to_distribution(counts):
    """PS baseline: reports were drawn from rho directly, so plain frequencies
    estimate the class masses."""
    total = counts.n_reports
    if total <= 0:
        raise ValueError("empty counts")
    return ClusterMassEstimate(counts.counts / total)


def cluster_propensity(rho_participants, U, n0):
    """Per-cluster participation probability.

    e~(k) = sum_{d in X1} rho_d(k) / (sum_{d in X1} rho_d(k) + n0 * U_k),
    with the non-participant class mass expressed on the count scale.
    """
    rho = np.atleast_2d(np.asarray(rho_participants, dtype=float))
    if rho.shape[0] < 1:
        raise ValueError("need at least one participant")
    sums = rho.sum(axis=0)
    denom = sums + n0 * U.masses
    if np.any(denom <= 0):
        raise ValueError("cluster with zero mass on both sides")
    return sums / denom


def point_propensity(rho_d, cluster_scores):
    """e(d) = sum_k e~(k) rho_d(k)."""
    rho_d = np.asarray(rho_d, dtype=float)
    return float(np.dot(cluster_scores, rho_d))


def point_propensity_batch(rho, cluster_scores):
    return np.atleast_2d(np.asarray(rho, dtype=float)) @ np.asarray(cluster_scores)


def reweight_entire(X1, point_scores, n1, n0):
    """Estimate the entire-population distribution on the participant support.

    Inverse-propensity masses 1 / ((n0 + n1) e(d)), renormalized to sum 1.
    """
    e = np.asarray(point_scores, dtype=float)
    if np.any(e <= 0):
        raise ValueError("propensity scores must be positive")
    raw = 1.0 / ((n0 + n1) * e)
    vals = X1.values if hasattr(X1, "values") else X1
    return WeightedDataset(records=vals, masses=raw / raw.sum())


def reweight_nonparticipant(X1, point_scores, n1, n0):
    """Estimate the non-participant distribution on the participant support.

    Raw mass per point is (1/e(d) - 1) / n0; a propensity of exactly 1 for
    every point leaves nothing to renormalize.
    """
    e = np.asarray(point_scores, dtype=float)
    if np.any(e <= 0):
        raise ValueError("propensity scores must be positive")
    if np.any(e > 1.0 + 1e-9):
        raise ValueError("propensity score above 1 signals an upstream bug")
    raw = (1.0 / np.minimum(e, 1.0) - 1.0) / n0
    total = raw.sum()
    if total <= 0:
        raise ValueError("estimated non-participant distribution is empty")
    vals = X1.values if hasattr(X1, "values") else X1
    return WeightedDataset(records=vals, masses=raw / total)


def propensity_pipeline(rho_participants, U, n0):
    """Cluster scores plus per-participant point scores in one step."""
    cluster_scores = cluster_propensity(rho_participants, U, n0)
    point_scores = point_propensity_batch(rho_participants, cluster_scores)
    return PropensityScores(cluster_scores=cluster_scores, point_scores=point_scores)
