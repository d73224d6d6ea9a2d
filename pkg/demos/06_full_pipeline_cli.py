#!/usr/bin/env python3
"""The whole pipeline through the command-line surface.

Writes a synthetic export and a config file into a scratch directory, then
drives ingest -> train -> evaluate -> report -> predict exactly as a shell
session would.  Every artifact lands under the run directory with its hash
in the manifest; rerunning with the same seed reproduces metrics.json byte
for byte.
"""

import csv
import json
import tempfile
from pathlib import Path

from bugprio import cli, synth

scratch = Path(tempfile.mkdtemp(prefix="bugprio-demo-"))
print(f"working under {scratch}")

priors = [(0.7, 0.1, 0.1, 0.05, 0.05), (0.05, 0.05, 0.1, 0.1, 0.7)]
planted = synth.planted_topic_corpus(
    n_docs=150, n_topics=2, lexicon_size=8, doc_length=15, seed=3,
    label_priors=priors,
)
dataset = scratch / "bugs.csv"
with open(dataset, "w", newline="", encoding="utf-8") as fh:
    writer = csv.writer(fh)
    writer.writerow(["bug_id", "summary", "description", "product", "component",
                     "status", "resolution", "priority"])
    for r in planted.reports:
        writer.writerow([r.bug_id, r.summary, r.description, r.product, r.component,
                         r.status.value, r.resolution.value, r.priority.value])

config = {
    "seed": 7,
    "dataset": {"path": str(dataset), "format": "csv"},
    "vocabulary": {"min_count": 1},
    "lda": {"topics": 2, "iterations": 40, "burn_in": 10, "inference_iterations": 20},
    "classifier": {"kind": "multinomial_nb", "min_topic_size": 5},
    "split": {"train_fraction": 0.8},
    "output_dir": str(scratch / "run"),
}
config_path = scratch / "config.json"
config_path.write_text(json.dumps(config, indent=2))

for command in (["ingest"], ["train"], ["evaluate"]):
    print(f"\n$ bugprio {command[0]} -c config.json")
    code = cli.main(command + ["-c", str(config_path)])
    assert code == 0, f"{command} exited {code}"

print("\n$ bugprio report --run run")
cli.main(["report", "--run", str(scratch / "run")])

incoming = scratch / "incoming.jsonl"
incoming.write_text(
    json.dumps({"bug_id": 9001, "summary": "t0w01 t0w02 t0w03 crash"}) + "\n"
    + json.dumps({"bug_id": 9002, "summary": "t1w04 t1w05 slow"}) + "\n"
)
print("\n$ bugprio predict -c config.json --input incoming.jsonl")
cli.main(["predict", "-c", str(config_path), "--input", str(incoming)])

manifest = json.loads((scratch / "run" / "manifest.json").read_text())
print(f"\nmanifest bundle hash: {manifest['bundle_hash'][:16]}…")
print(f"artifacts: {', '.join(sorted(manifest['artifacts']))}")
