"""Single-round protocol: broadcast the model, collect one report per client.

Clients are simulated in-process but speak the same message schema a
networked deployment would: the broadcast is the model module's JSON
document, each client answers with exactly one report, and the whole round
serializes to a JSON Lines transcript (first line broadcast metadata, then
one line per client).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import ldp
from .model import assign_batch, deserialize_model, serialize_model

PROTOCOL_VERSION = "1"

MECHANISMS = ("dipps", "ps", "laplace", "hybrid")
CATEGORICAL_MECHANISMS = ("dipps", "ps")


@dataclass(frozen=True)
class ModelBroadcast:
    model_document: str
    epsilon: float
    version: str = PROTOCOL_VERSION

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        deserialize_model(self.model_document)  # must be a valid payload


@dataclass(frozen=True)
class RoundTranscript:
    broadcast: ModelBroadcast
    mechanism: str
    reports: tuple          # one entry per client, shuffled
    client_seeds: tuple     # (master_seed, client_index) pairs, shuffled alike

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if len(self.reports) != len(self.client_seeds):
            raise ValueError("one seed identifier per report required")

    @property
    def n_clients(self):
        return len(self.reports)


def _client_rng(master_seed, client_index):
    # splittable stream: independent per client, deterministic in the pair
    return np.random.default_rng(np.random.SeedSequence((master_seed, 0, client_index)))


def run_round(model, clients, eps, mechanism, master_seed):
    """Simulate one full round and return its transcript.

    clients is an (n0, m) array (or RecordMatrix) of non-participant records.
    Reports are shuffled before aggregation so downstream counts see an
    i.i.d.-ordered sample.
    """
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    vals = clients.values if hasattr(clients, "values") else np.atleast_2d(np.asarray(clients, dtype=float))
    if vals.shape[0] == 0:
        raise ValueError("no clients")
    if vals.shape[1] != model.m:
        raise ValueError("client record dimension does not match the model")

    broadcast = ModelBroadcast(model_document=serialize_model(model), epsilon=eps)

    if mechanism in CATEGORICAL_MECHANISMS:
        rho = assign_batch(model, vals)  # computed client-side in deployment

    reports = []
    for i in range(vals.shape[0]):
        rng = _client_rng(master_seed, i)
        if mechanism == "dipps":
            reports.append(ldp.exp_mech_sample(rho[i], eps, rng))
        elif mechanism == "ps":
            reports.append(ldp.ps_sample(rho[i], rng))
        elif mechanism == "laplace":
            reports.append(ldp.laplace_perturb_record(vals[i], eps, rng).tolist())
        else:  # hybrid
            j, value = ldp.hybrid_perturb_record(vals[i], eps, rng)
            reports.append((j, value))

    order = np.random.default_rng(
        np.random.SeedSequence((master_seed, 1))
    ).permutation(len(reports))
    return RoundTranscript(
        broadcast=broadcast,
        mechanism=mechanism,
        reports=tuple(reports[i] for i in order),
        client_seeds=tuple((master_seed, int(i)) for i in order),
    )


def transcript_to_counts(transcript, K):
    """Tally a categorical (dipps/ps) transcript into class counts."""
    from .server import tally_reports

    if transcript.mechanism not in CATEGORICAL_MECHANISMS:
        raise ValueError(
            f"not a categorical round: mechanism {transcript.mechanism!r}")
    return tally_reports(transcript.reports, K)


def write_transcript(transcript, path):
    with open(path, "w") as fh:
        fh.write(json.dumps({
            "version": transcript.broadcast.version,
            "mechanism": transcript.mechanism,
            "epsilon": transcript.broadcast.epsilon,
            "model": json.loads(transcript.broadcast.model_document),
        }) + "\n")
        for (seed, idx), report in zip(transcript.client_seeds, transcript.reports):
            fh.write(json.dumps({"client_id": idx, "report": report}) + "\n")


def read_transcript(path):
    with open(path) as fh:
        header = json.loads(fh.readline())
        broadcast = ModelBroadcast(
            model_document=json.dumps(header["model"]),
            epsilon=header["epsilon"],
            version=header["version"],
        )
        reports, seeds = [], []
        for line in fh:
            msg = json.loads(line)
            report = msg["report"]
            if isinstance(report, list) and header["mechanism"] == "hybrid":
                report = (report[0], report[1])
            reports.append(report)
            seeds.append((None, msg["client_id"]))
    return RoundTranscript(
        broadcast=broadcast,
        mechanism=header["mechanism"],
        reports=tuple(reports),
        client_seeds=tuple(seeds),
    )
