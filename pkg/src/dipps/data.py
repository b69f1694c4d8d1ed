"""Dataset loading, normalization, splitting and the synthetic generator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd


@dataclass(frozen=True)
class RecordMatrix:
    """An n x m numeric dataset."""

    values: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", np.atleast_2d(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        if self.values.shape[1] != len(self.feature_names):
            raise ValueError("feature_names length does not match number of columns")
        if self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise ValueError("need at least one row and one column")
        if np.isnan(self.values).any():
            raise ValueError("missing values present; drop them at load time")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]

    def column(self, name):
        return self.values[:, self.feature_names.index(name)]


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-feature affine map x -> 2 (x - lo) / (hi - lo) - 1."""

    lo: np.ndarray
    hi: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if np.any(self.hi <= self.lo):
            raise ValueError("every feature needs hi > lo")

    def to_json(self):
        return json.dumps({
            "feature_names": list(self.feature_names),
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
        })

    @classmethod
    def from_json(cls, doc):
        d = json.loads(doc)
        return cls(lo=d["lo"], hi=d["hi"], feature_names=d["feature_names"])


@dataclass(frozen=True)
class SplitDataset:
    """Participant rows (direct access) and non-participant rows (private)."""

    participants: RecordMatrix
    non_participants: RecordMatrix

    def __post_init__(self):
        if self.participants.feature_names != self.non_participants.feature_names:
            raise ValueError("participant and non-participant schemas differ")


@dataclass(frozen=True)
class SyntheticSpec:
    """Shared mixture components, two sets of mixture weights (Assumption: the
    two populations differ only in the weights)."""

    means: np.ndarray          # (K, m)
    covariances: np.ndarray    # (K, m, m)
    pi_participant: np.ndarray
    pi_non_participant: np.ndarray
    n_participant: int
    n_non_participant: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "means", np.atleast_2d(np.asarray(self.means, dtype=float)))
        object.__setattr__(self, "covariances", np.asarray(self.covariances, dtype=float))
        object.__setattr__(self, "pi_participant", np.asarray(self.pi_participant, dtype=float))
        object.__setattr__(self, "pi_non_participant", np.asarray(self.pi_non_participant, dtype=float))
        K, m = self.means.shape
        if self.covariances.shape != (K, m, m):
            raise ValueError("covariances must have shape (K, m, m)")
        for pi in (self.pi_participant, self.pi_non_participant):
            if pi.shape != (K,) or np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-9:
                raise ValueError("mixture weights must be a length-K probability vector")
        for S in self.covariances:
            if not np.allclose(S, S.T):
                raise ValueError("covariance not symmetric")
            if np.linalg.eigvalsh(S)[0] <= 0:
                raise ValueError("covariance not positive definite")

    @property
    def K(self):
        return self.means.shape[0]

    def to_json(self):
        return json.dumps({
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "pi_participant": self.pi_participant.tolist(),
            "pi_non_participant": self.pi_non_participant.tolist(),
            "n_participant": self.n_participant,
            "n_non_participant": self.n_non_participant,
            "seed": self.seed,
        })

    @classmethod
    def from_json(cls, doc):
        return cls(**json.loads(doc))


@dataclass(frozen=True)
class SyntheticDraw:
    """A synthetic split plus the true component labels.

    The labels exist only so tests can compare against ground truth; nothing
    on the protocol path may read them.
    """

    split: SplitDataset
    participant_labels: np.ndarray = field(repr=False)
    non_participant_labels: np.ndarray = field(repr=False)


def load_csv(path, feature_columns, drop_missing=True, encodings=None):
    """Read the named columns of a CSV file into a RecordMatrix.

    encodings maps a column name to a {cell value -> float} dict for
    categorical columns; all other columns must parse as numbers.
    """
    try:
        df = pd.read_csv(path)
    except FileNotFoundError:
        raise FileNotFoundError(f"no such file: {path}")
    missing_cols = [c for c in feature_columns if c not in df.columns]
    if missing_cols:
        raise ValueError(f"columns not present in {path}: {missing_cols}")
    df = df[list(feature_columns)]
    encodings = encodings or {}
    for col, mapping in encodings.items():
        df[col] = df[col].map(mapping)
    for col in feature_columns:
        df[col] = pd.to_numeric(df[col], errors="raise")
    if drop_missing:
        df = df.dropna()
    if len(df) == 0:
        raise ValueError("empty result: no complete rows after load")
    return RecordMatrix(df.to_numpy(dtype=float), tuple(feature_columns))


def fit_normalizer(X):
    """Per-feature bounds from observed min/max of X."""
    lo = X.values.min(axis=0)
    hi = X.values.max(axis=0)
    const = np.flatnonzero(hi <= lo)
    if const.size:
        names = [X.feature_names[i] for i in const]
        raise ValueError(f"constant feature(s), cannot normalize: {names}")
    return NormalizationSpec(lo=lo, hi=hi, feature_names=X.feature_names)


def apply_normalizer(spec, X):
    """Map to [-1, 1]; values outside the fitted bounds are clipped."""
    if X.feature_names != spec.feature_names:
        raise ValueError("schema mismatch between normalizer and data")
    scaled = 2.0 * (X.values - spec.lo) / (spec.hi - spec.lo) - 1.0
    return RecordMatrix(np.clip(scaled, -1.0, 1.0), X.feature_names)


def invert_normalizer(spec, X):
    """Inverse of apply_normalizer for in-range values."""
    if X.feature_names != spec.feature_names:
        raise ValueError("schema mismatch between normalizer and data")
    raw = (X.values + 1.0) / 2.0 * (spec.hi - spec.lo) + spec.lo
    return RecordMatrix(raw, X.feature_names)


def split_by_predicate(X, column, predicate, drop_column=True):
    """Rows where predicate(column value) holds become participants."""
    if column not in X.feature_names:
        raise ValueError(f"no such column: {column}")
    col = X.column(column)
    mask = np.asarray([bool(predicate(v)) for v in col])
    if mask.all() or not mask.any():
        raise ValueError("split predicate leaves one side empty")
    if drop_column:
        keep = [i for i, name in enumerate(X.feature_names) if name != column]
        names = tuple(X.feature_names[i] for i in keep)
        vals = X.values[:, keep]
    else:
        names, vals = X.feature_names, X.values
    return SplitDataset(
        participants=RecordMatrix(vals[mask], names),
        non_participants=RecordMatrix(vals[~mask], names),
    )


def generate_synthetic(spec):
    """Draw the two samples from the shared-component mixture."""
    rng = np.random.default_rng(spec.seed)
    K, m = spec.means.shape
    names = tuple(f"x{j}" for j in range(m))

    def draw(pi, n):
        labels = rng.choice(K, size=n, p=pi)
        rows = np.empty((n, m))
        for k in range(K):
            idx = np.flatnonzero(labels == k)
            if idx.size:
                rows[idx] = rng.multivariate_normal(
                    spec.means[k], spec.covariances[k], size=idx.size)
        return RecordMatrix(rows, names), labels

    X1, lab1 = draw(spec.pi_participant, spec.n_participant)
    X0, lab0 = draw(spec.pi_non_participant, spec.n_non_participant)
    return SyntheticDraw(
        split=SplitDataset(participants=X1, non_participants=X0),
        participant_labels=lab1,
        non_participant_labels=lab0,
    )
