"""Drives the real transformer worker through the same conformance suite as
the mocks.  Skipped when the worker has not been built (see worker/README.md)."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

import driver_conformance
from bugprio import bridge, cli, synth

WORKER_MAIN = Path(__file__).resolve().parent.parent / "worker" / "dist" / "main.js"

pytestmark = pytest.mark.skipif(
    not WORKER_MAIN.exists() or shutil.which("node") is None,
    reason="transformer worker not built (cd worker && npm run build)",
)


def spawn_real_worker(*extra: str) -> bridge.WorkerHandle:
    return bridge.spawn_worker(
        ["node", str(WORKER_MAIN), "--seed", "7", *extra],
        handshake_timeout=60.0,
        request_timeout=600.0,
    )


@pytest.mark.parametrize(
    "scenario", driver_conformance.ALL_SCENARIOS, ids=lambda s: s.__name__
)
def test_driver_conformance_against_real_worker(scenario):
    scenario(spawn_real_worker)


def test_cli_pipeline_with_real_worker(tmp_path):
    import csv

    priors = [(0.7, 0.1, 0.1, 0.05, 0.05), (0.05, 0.05, 0.1, 0.1, 0.7)]
    planted = synth.planted_topic_corpus(
        n_docs=80, n_topics=2, lexicon_size=8, doc_length=12, seed=3,
        label_priors=priors,
    )
    dataset = tmp_path / "bugs.csv"
    with open(dataset, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bug_id", "summary", "description", "product", "component",
                        "status", "resolution", "priority"])
        for r in planted.reports:
            writer.writerow([r.bug_id, r.summary, r.description, r.product, r.component,
                            r.status.value, r.resolution.value, r.priority.value])

    cache_dir = tmp_path / "worker-cache"
    config = {
        "seed": 7,
        "dataset": {"path": str(dataset), "format": "csv"},
        "vocabulary": {"min_count": 1},
        "lda": {"topics": 2, "iterations": 25, "burn_in": 5, "inference_iterations": 15},
        "classifier": {
            "kind": "external",
            "min_topic_size": 5,
            "worker_command": ["node", str(WORKER_MAIN), "--seed", "7",
                               "--cache-dir", str(cache_dir)],
            "handshake_timeout": 60.0,
            "epochs_default": 3,
            "epochs_overrides": {"1": 1},
        },
        "split": {"train_fraction": 0.8},
        "output_dir": str(tmp_path / "run"),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))

    assert cli.main(["ingest", "-c", str(config_path)]) == 0
    assert cli.main(["train", "-c", str(config_path)]) == 0
    assert (cache_dir / "topic_-1.json").exists()
    assert cli.main(["evaluate", "-c", str(config_path)]) == 0
    metrics = json.loads((tmp_path / "run" / "metrics.json").read_text())
    assert 0.0 <= metrics["micro"]["accuracy"] <= 1.0
