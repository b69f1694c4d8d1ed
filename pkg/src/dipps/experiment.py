"""Batch experiment runner: data -> model -> round -> aggregation -> metrics.

Reproduces the evaluation protocol end to end: every (mechanism, epsilon,
repetition) cell runs the full pipeline with its own derived seed, so results
are deterministic under the master seed regardless of execution order.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np

from . import ldp, metrics, protocol, server
from .data import (RecordMatrix, SyntheticSpec, apply_normalizer, fit_normalizer,
                   generate_synthetic, load_csv, split_by_predicate)
from .model import ClassAssignmentModel, EmConfig, assign_batch, fit_gmm, fit_pca, select_k_elbow

log = logging.getLogger(__name__)

ALL_MECHANISMS = ("naive", "ps", "dipps", "laplace", "hybrid")
ALL_STATISTICS = ("wasserstein", "mean", "variance", "median")
ALL_POPULATIONS = ("entire", "nonparticipant")

_OPS = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    # CSV source (set csv_path) or synthetic source (set synthetic)
    csv_path: str = None
    feature_columns: tuple = ()
    encodings: dict = None
    split_column: str = None
    split_op: str = ">="
    split_value: float = 1.0
    drop_split_column: bool = True
    synthetic: SyntheticSpec = None

    eps_list: tuple = (0.5, 1.0, 2.0, 4.0, 8.0)
    mechanisms: tuple = ("naive", "ps", "dipps")
    repetitions: int = 5
    master_seed: int = 0
    variance_target: float = 0.8
    k: int = None                 # None -> elbow selection over k_grid
    k_grid: tuple = tuple(range(2, 11))
    statistics: tuple = ALL_STATISTICS
    populations: tuple = ALL_POPULATIONS
    wasserstein_eps: tuple = (1.0,)  # OT is costly; restrict to these eps
    ot_subsample: int = 400

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(e <= 0 for e in self.eps_list):
            raise ValueError("all epsilon values must be positive")
        if not self.mechanisms or not self.statistics or not self.populations:
            raise ValueError("need at least one mechanism, statistic and population")
        bad = set(self.mechanisms) - set(ALL_MECHANISMS)
        if bad:
            raise ValueError(f"unknown mechanisms: {sorted(bad)}")
        if self.csv_path is None and self.synthetic is None:
            raise ValueError("configure either csv_path or synthetic")


def load_config(path, **overrides):
    path = Path(path)
    if path.suffix == ".toml":
        raw = tomllib.loads(path.read_text())
    else:
        raw = json.loads(path.read_text())
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if "synthetic" in raw and raw["synthetic"] is not None:
        raw["synthetic"] = SyntheticSpec(**raw["synthetic"])
    for key in ("feature_columns", "eps_list", "mechanisms", "statistics",
                "populations", "wasserstein_eps", "k_grid"):
        if key in raw and raw[key] is not None:
            raw[key] = tuple(raw[key])
    return ExperimentConfig(**raw)


def prepare_data(config):
    """Load or generate, split, and normalize on participant bounds."""
    if config.synthetic is not None:
        spec = replace(config.synthetic, seed=config.master_seed)
        split = generate_synthetic(spec).split
    else:
        X = load_csv(config.csv_path, config.feature_columns,
                     encodings=config.encodings)
        op = _OPS[config.split_op]
        split = split_by_predicate(
            X, config.split_column,
            lambda v: op(v, config.split_value),
            drop_column=config.drop_split_column)
    norm = fit_normalizer(split.participants)
    X1 = apply_normalizer(norm, split.participants)
    X0 = apply_normalizer(norm, split.non_participants)
    return X1, X0, norm


def fit_model(X1, config, rep=0):
    """PCA + GMM for one repetition; the EM seed varies with the repetition."""
    pca = fit_pca(X1, config.variance_target)
    Y = pca.project(X1.values)
    em_seed = int(np.random.SeedSequence(
        (config.master_seed, 100, rep)).generate_state(1)[0])
    em = EmConfig(seed=em_seed)
    k = config.k if config.k is not None else select_k_elbow(Y, config.k_grid, em)
    gmm = fit_gmm(Y, k, em)
    return ClassAssignmentModel(pca=pca, gmm=gmm)


def _round_seed(config, mechanism, eps, rep):
    key = (config.master_seed, 200, ALL_MECHANISMS.index(mechanism),
           int(eps * 10**6), rep)
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def estimate_from_counts(model, X1, counts, n0, invert_eps=None):
    """Common tail of the dipps/ps paths: counts -> class masses ->
    propensities -> reweighted distributions for both targets."""
    if invert_eps is not None:
        U = server.invert_exponential_counts(counts, invert_eps)
    else:
        U = server.direct_counts_to_distribution(counts)
    rho1 = assign_batch(model, X1)
    scores = server.propensity_pipeline(rho1, U, n0)
    n1 = X1.n
    entire = metrics.from_weighted(
        server.reweight_entire(X1, scores.point_scores, n1, n0))
    nonpart = metrics.from_weighted(
        server.reweight_nonparticipant(X1, scores.point_scores, n1, n0))
    return {"entire": entire, "nonparticipant": nonpart, "U": U, "scores": scores}


def _hybrid_mean(reports, m, n0):
    est = np.zeros(m)
    for j, value in reports:
        est[j] += value
    return est / n0


def run_experiment(config, out_dir=None):
    """Execute the configured grid; returns the long-format result rows.

    Rows are dicts with keys dataset, method, eps, statistic, target, rep,
    value.  Naive rows carry eps="" (the method ignores epsilon).
    """
    X1, X0, _ = prepare_data(config)
    n1, n0 = X1.n, X0.n

    truth = {
        "nonparticipant": metrics.empirical(X0.values),
        "entire": metrics.empirical(np.vstack([X1.values, X0.values])),
    }
    truth_stats = {p: metrics.stat_report(truth[p]) for p in config.populations}

    ot_rng_seed = int(np.random.SeedSequence((config.master_seed, 300)).generate_state(1)[0])

    def evaluate(rows, method, eps, rep, dists):
        """Append one row per (statistic, population) for this cell."""
        for pop in config.populations:
            dist = dists.get(pop)
            if dist is None:
                continue
            est_stats = metrics.stat_report(dist)
            for stat in config.statistics:
                if stat == "wasserstein":
                    if eps is not None and eps not in config.wasserstein_eps:
                        continue
                    rng = np.random.default_rng((ot_rng_seed, rep))
                    a = metrics.subsample(dist, config.ot_subsample, rng)
                    b = metrics.subsample(truth[pop], config.ot_subsample, rng)
                    value = metrics.wasserstein1(a, b)
                else:
                    value = metrics.mae(getattr(est_stats, stat),
                                        getattr(truth_stats[pop], stat))
                rows.append({
                    "dataset": config.name, "method": method,
                    "eps": "" if eps is None else eps,
                    "statistic": stat, "target": pop, "rep": rep,
                    "value": value,
                })

    def evaluate_mean_only(rows, method, eps, rep, mean_by_pop):
        for pop, est_mean in mean_by_pop.items():
            if pop not in config.populations or "mean" not in config.statistics:
                continue
            rows.append({
                "dataset": config.name, "method": method, "eps": eps,
                "statistic": "mean", "target": pop, "rep": rep,
                "value": metrics.mae(est_mean, truth_stats[pop].mean),
            })

    rows = []
    if "naive" in config.mechanisms:
        naive = metrics.naive_estimate(X1)
        evaluate(rows, "naive", None, 0, {p: naive for p in config.populations})

    needs_model = {"ps", "dipps"} & set(config.mechanisms)
    for rep in range(config.repetitions):
        model = fit_model(X1, config, rep) if needs_model else None

        if "ps" in config.mechanisms:
            seed = _round_seed(config, "ps", 1.0, rep)
            # the PS round carries no privacy mechanism; eps only tags the broadcast
            transcript = protocol.run_round(model, X0, 1.0, "ps", seed)
            counts = protocol.transcript_to_counts(transcript, model.K)
            dists = estimate_from_counts(model, X1, counts, n0)
            evaluate(rows, "ps", None, rep, dists)

        for eps in config.eps_list:
            if "dipps" in config.mechanisms:
                seed = _round_seed(config, "dipps", eps, rep)
                transcript = protocol.run_round(model, X0, eps, "dipps", seed)
                counts = protocol.transcript_to_counts(transcript, model.K)
                dists = estimate_from_counts(model, X1, counts, n0, invert_eps=eps)
                evaluate(rows, "dipps", eps, rep, dists)

            if "laplace" in config.mechanisms:
                seed = _round_seed(config, "laplace", eps, rep)
                noisy = np.vstack([
                    ldp.laplace_perturb_record(
                        X0.values[i], eps, protocol._client_rng(seed, i))
                    for i in range(n0)])
                nonpart = metrics.empirical(noisy)
                entire = metrics.mix(metrics.empirical(X1.values), nonpart,
                                     n1 / (n1 + n0))
                evaluate(rows, "laplace", eps, rep,
                         {"entire": entire, "nonparticipant": nonpart})

            if "hybrid" in config.mechanisms:
                seed = _round_seed(config, "hybrid", eps, rep)
                reports = [
                    ldp.hybrid_perturb_record(
                        X0.values[i], eps, protocol._client_rng(seed, i))
                    for i in range(n0)]
                mean0 = _hybrid_mean(reports, X0.m, n0)
                mean_all = (n1 * X1.values.mean(axis=0) + n0 * mean0) / (n1 + n0)
                evaluate_mean_only(rows, "hybrid", eps, rep,
                                   {"nonparticipant": mean0, "entire": mean_all})

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_report_csv(rows, out_dir / "report.csv")
        emit_plotdata(rows, out_dir / "plotdata.csv")
        (out_dir / "report.md").write_text(emit_tables(rows))
        (out_dir / "config.json").write_text(_config_doc(config))
    return rows


def _config_doc(config):
    d = {k: v for k, v in vars(config).items()}
    if d.get("synthetic") is not None:
        d["synthetic"] = json.loads(d["synthetic"].to_json())
    return json.dumps(d, default=list, indent=2)


def summarize(rows):
    """Mean and std of the repetitions for each (method, eps, statistic, target)."""
    groups = {}
    for r in rows:
        key = (r["dataset"], r["method"], r["eps"], r["statistic"], r["target"])
        groups.setdefault(key, []).append(r["value"])
    out = []
    for key, values in sorted(groups.items(), key=lambda kv: tuple(map(str, kv[0]))):
        dataset, method, eps, stat, target = key
        out.append({
            "dataset": dataset, "method": method, "eps": eps,
            "statistic": stat, "target": target,
            "mean": float(np.mean(values)),
            "std": float(np.std(values)),
            "n": len(values),
        })
    return out


def write_report_csv(rows, path):
    fields = ["dataset", "method", "eps", "statistic", "target", "rep", "value"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)


def emit_plotdata(rows, path):
    """Long-format CSV keyed by eps, one row per summary cell."""
    fields = ["dataset", "method", "eps", "statistic", "target", "value"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for s in summarize(rows):
            w.writerow({k: s[k] for k in fields[:-1]} | {"value": s["mean"]})


def emit_tables(rows):
    """One markdown table per (statistic, target): methods x epsilon."""
    summary = summarize(rows)
    by_table = {}
    for s in summary:
        by_table.setdefault((s["statistic"], s["target"]), []).append(s)
    lines = []
    for (stat, target), cells in sorted(by_table.items()):
        eps_values = sorted({c["eps"] for c in cells}, key=str)
        methods = sorted({c["method"] for c in cells})
        lines.append(f"## {stat} ({target})\n")
        header = "| method | " + " | ".join(str(e) if e != "" else "-" for e in eps_values) + " |"
        lines.append(header)
        lines.append("|" + "---|" * (len(eps_values) + 1))
        for method in methods:
            row = [method]
            for e in eps_values:
                match = [c for c in cells if c["method"] == method and c["eps"] == e]
                if not match:
                    row.append("")
                    continue
                c = match[0]
                row.append(f"{c['mean']:.3f} ± {c['std']:.3f}" if c["n"] > 1
                           else f"{c['mean']:.3f}")
            lines.append("| " + " | ".join(row) + " |")
        lines.append("")
    return "\n".join(lines)


def write_weighted_csv(weighted, feature_names, path):
    """WeightedDataset export: feature columns plus a trailing mass column."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(feature_names) + ["mass"])
        for row, mass in zip(weighted.records, weighted.masses):
            w.writerow([repr(float(v)) for v in row] + [repr(float(mass))])
