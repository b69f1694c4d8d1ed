"""Command-line entry points: fit, round, run, eval.

Every verb reads the shared experiment config (JSON or TOML) and writes
file-addressable artifacts so the steps compose into a pipeline:
model JSON -> transcript JSONL -> weighted CSV -> report CSV/markdown.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiment, metrics, protocol, server
from .model import assign_batch, deserialize_model, serialize_model


def _add_common(p):
    p.add_argument("--config", required=True, help="experiment config (.json or .toml)")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")


def build_parser():
    parser = argparse.ArgumentParser(prog="dipps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the class-assignment model only")
    _add_common(p)
    p.add_argument("--out", default="model.json")

    p = sub.add_parser("round", help="run one protocol round, emit a transcript")
    _add_common(p)
    p.add_argument("--model", required=True, help="model JSON from `fit`")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mechanism", default="dipps", choices=protocol.MECHANISMS)
    p.add_argument("--out", default="transcript.jsonl")

    p = sub.add_parser("run", help="full experiment grid")
    _add_common(p)
    p.add_argument("--eps", type=float, nargs="+", default=None,
                   help="override the epsilon grid")
    p.add_argument("--mechanisms", nargs="+", default=None)
    p.add_argument("--out-dir", default="out")

    p = sub.add_parser("eval", help="metrics from a saved transcript")
    _add_common(p)
    p.add_argument("--transcript", required=True)
    p.add_argument("--out-dir", default="out")
    return parser


def _load_config(args, **extra):
    overrides = {"master_seed": args.seed}
    overrides.update(extra)
    return experiment.load_config(args.config, **overrides)


def cmd_fit(args):
    config = _load_config(args)
    X1, _, norm = experiment.prepare_data(config)
    model = experiment.fit_model(X1, config)
    Path(args.out).write_text(serialize_model(model))
    Path(args.out).with_suffix(".normalizer.json").write_text(norm.to_json())
    print(f"wrote {args.out} (K={model.K}, q={model.pca.components.shape[0]})")


def cmd_round(args):
    config = _load_config(args)
    _, X0, _ = experiment.prepare_data(config)
    model = deserialize_model(Path(args.model).read_text())
    transcript = protocol.run_round(model, X0, args.eps, args.mechanism,
                                    config.master_seed)
    protocol.write_transcript(transcript, args.out)
    print(f"wrote {args.out} ({transcript.n_clients} reports, "
          f"mechanism={args.mechanism}, eps={args.eps})")


def cmd_run(args):
    config = _load_config(
        args,
        eps_list=tuple(args.eps) if args.eps else None,
        mechanisms=tuple(args.mechanisms) if args.mechanisms else None,
    )
    rows = experiment.run_experiment(config, out_dir=args.out_dir)
    print(f"wrote {args.out_dir}/report.csv ({len(rows)} result rows)")
    for s in experiment.summarize(rows):
        eps = s["eps"] if s["eps"] != "" else "-"
        print(f"  {s['method']:8s} eps={eps!s:>4} {s['statistic']:11s} "
              f"{s['target']:14s} {s['mean']:.4f} ± {s['std']:.4f}")


def cmd_eval(args):
    config = _load_config(args)
    X1, X0, _ = experiment.prepare_data(config)
    transcript = protocol.read_transcript(args.transcript)
    model = deserialize_model(transcript.broadcast.model_document)
    counts = protocol.transcript_to_counts(transcript, model.K)
    eps = transcript.broadcast.epsilon if transcript.mechanism == "dipps" else None
    dists = experiment.estimate_from_counts(model, X1, counts, X0.n, invert_eps=eps)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for pop in ("entire", "nonparticipant"):
        dist = dists[pop]
        experiment.write_weighted_csv(
            server.WeightedDataset(dist.points, dist.masses),
            X1.feature_names, out_dir / f"weights_{pop}.csv")
    diagnostics = {
        "class_masses": dists["U"].masses.tolist(),
        "cluster_propensity": dists["scores"].cluster_scores.tolist(),
    }
    (out_dir / "diagnostics.json").write_text(json.dumps(diagnostics, indent=2))

    truth = metrics.empirical(X0.values)
    est_stats = metrics.stat_report(dists["nonparticipant"])
    truth_stats = metrics.stat_report(truth)
    report = metrics.mae_per_attribute(est_stats, truth_stats)
    (out_dir / "metrics.json").write_text(json.dumps(report, indent=2))
    print(f"wrote {out_dir}/weights_*.csv, diagnostics.json, metrics.json")
    for stat, value in report.items():
        print(f"  {stat:9s} MAE {value:.4f}")


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    handler = {
        "fit": cmd_fit, "round": cmd_round, "run": cmd_run, "eval": cmd_eval,
    }[args.command]
    try:
        handler(args)
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
