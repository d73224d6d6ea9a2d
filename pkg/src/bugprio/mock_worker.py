"""Mock worker speaking protocol v1 with a trivial per-topic classifier.

TRAIN remembers each topic's label distribution; PREDICT answers with the
majority label (ties toward P1) and the normalized label counts as scores.
With ``--fixed P3`` every prediction is the given label instead, which
turns the pipeline into a majority-class baseline.  Runs both in-process
(see :func:`bugprio.bridge.in_process_worker`) and as a subprocess via
``python -m bugprio.mock_worker``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import IO

from .bridge import PROTOCOL_VERSION
from .corpus import PRIORITY_INDEX, PRIORITY_LEVELS


def serve(
    stdin: IO[str],
    stdout: IO[str],
    fixed_label: str | None = None,
    state_file: str | None = None,
) -> None:
    def send(payload: dict) -> None:
        stdout.write(json.dumps(payload) + "\n")
        stdout.flush()

    send({"protocol_version": PROTOCOL_VERSION})
    label_counts: dict[int, list[int]] = {}
    if state_file and os.path.exists(state_file):
        with open(state_file, "r", encoding="utf-8") as fh:
            label_counts = {int(k): v for k, v in json.load(fh).items()}

    def persist() -> None:
        if state_file:
            with open(state_file, "w", encoding="utf-8") as fh:
                json.dump({str(k): v for k, v in label_counts.items()}, fh)

    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            send({"v": PROTOCOL_VERSION, "id": None, "status": "ERROR",
                  "error": "malformed request line"})
            continue

        base = {
            "v": PROTOCOL_VERSION,
            "id": request.get("id"),
            "op": request.get("op"),
            "topic_id": request.get("topic_id"),
        }
        op = request.get("op")
        topic = request.get("topic_id")

        if op == "SHUTDOWN":
            send({**base, "status": "OK"})
            return

        if op == "TRAIN":
            records = request.get("records", [])
            if not records:
                send({**base, "status": "ERROR", "error": "no training records"})
                continue
            counts = label_counts.setdefault(int(topic), [0] * len(PRIORITY_LEVELS))
            try:
                for record in records:
                    counts[PRIORITY_INDEX[_parse_label(record["label"])]] += 1
            except (KeyError, ValueError) as exc:
                send({**base, "status": "ERROR", "error": f"bad record: {exc}"})
                continue
            print(
                f"[mock-worker] TRAIN topic={topic} epochs={request.get('epochs')} "
                f"records={len(records)}",
                file=sys.stderr,
                flush=True,
            )
            persist()
            send({**base, "status": "OK"})
            continue

        if op == "PREDICT":
            records = request.get("records", [])
            if fixed_label is not None:
                scores = [1.0 if p.value == fixed_label else 0.0 for p in PRIORITY_LEVELS]
                label = fixed_label
            elif int(topic) in label_counts:
                counts = label_counts[int(topic)]
                total = sum(counts)
                scores = [c / total for c in counts]
                label = PRIORITY_LEVELS[max(range(len(counts)), key=lambda i: (counts[i], -i))].value
            else:
                send({**base, "status": "ERROR", "error": f"untrained topic {topic}"})
                continue
            send({
                **base,
                "status": "OK",
                "predictions": [
                    {"bug_id": record["bug_id"], "priority": label, "scores": scores}
                    for record in records
                ],
            })
            continue

        send({**base, "status": "ERROR", "error": f"unknown op {op!r}"})


def _parse_label(raw: str):
    for level in PRIORITY_LEVELS:
        if level.value == raw:
            return level
    raise ValueError(f"unknown label {raw!r}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="protocol v1 mock worker")
    parser.add_argument("--fixed", choices=[p.value for p in PRIORITY_LEVELS], default=None,
                        help="always predict this label")
    parser.add_argument("--state-file", default=None,
                        help="persist per-topic label counts between runs")
    parser.add_argument("--bad-version", action="store_true",
                        help="advertise a wrong protocol version (for driver tests)")
    args = parser.parse_args(argv)
    if args.bad_version:
        sys.stdout.write(json.dumps({"protocol_version": "0"}) + "\n")
        sys.stdout.flush()
        sys.stdin.readline()
        return 1
    serve(sys.stdin, sys.stdout, fixed_label=args.fixed, state_file=args.state_file)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
