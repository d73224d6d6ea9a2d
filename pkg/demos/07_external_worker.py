#!/usr/bin/env python3
"""Driving an external classifier over the line protocol.

Any process that speaks protocol v1 on its standard streams can serve as
the per-topic classifier.  This demo uses the bundled mock worker; swap the
command for ["node", "worker/dist/main.js"] to drive the transformer worker
instead (see worker/README.md for building it).
"""

import sys

from bugprio import bridge
from bugprio.bridge import EpochPolicy, WorkerRecord
from bugprio.corpus import Priority

command = [sys.executable, "-m", "bugprio.mock_worker"]
if len(sys.argv) > 1:
    command = sys.argv[1:]
print(f"spawning worker: {' '.join(command)}")

handle = bridge.spawn_worker(command, handshake_timeout=30.0)

training = [
    WorkerRecord(1, "crash on startup, data loss", Priority.P1),
    WorkerRecord(2, "crash when saving large files", Priority.P1),
    WorkerRecord(3, "menu label slightly misaligned", Priority.P5),
    WorkerRecord(4, "crash loop in the indexer", Priority.P1),
    WorkerRecord(5, "typo in tooltip", Priority.P5),
]

# the dominant topic gets a single fine-tuning epoch; the others get 15
policy = EpochPolicy(default_epochs=15, overrides={9: 1})
for topic in (0, 9):
    epochs = bridge.train_remote(handle, topic, training, policy)
    print(f"trained topic {topic} with {epochs} epochs")

predictions = bridge.predict_remote(handle, 0, [
    WorkerRecord(100, "crash right after launch"),
    WorkerRecord(101, "cosmetic issue in the preferences"),
])
for p in predictions:
    print(f"bug {p.bug_id}: {p.priority.value}  scores={[round(s, 3) for s in p.scores]}")

bridge.shutdown_worker(handle)
print("worker shut down cleanly")
