"""Driver side of the external-classifier protocol (v1).

The protocol is newline-delimited JSON over the worker's standard streams.
On startup the worker writes a handshake line ``{"protocol_version": "1"}``.
After that the driver sends one request at a time and waits for the
matching response (same ``id``, strictly in order):

  request:  {"v": "1", "id": N, "op": "TRAIN" | "PREDICT" | "SHUTDOWN",
             "topic_id": T, "epochs": E,              # TRAIN only
             "records": [{"bug_id": B, "text": S, "label": "P1".."P5"?}]}
  response: {"v": "1", "id": N, "op": <echo>, "topic_id": <echo>,
             "status": "OK" | "ERROR",
             "predictions": [{"bug_id": B, "priority": "P1".."P5",
                              "scores": [5 floats]}],   # PREDICT OK only
             "error": "message"}                        # ERROR only

TRAIN records must all carry labels, PREDICT records must carry none, and
an OK PREDICT response covers every requested bug_id exactly once.  The
worker receives raw concatenated text (summary, description, component);
none of the count-vector preprocessing crosses this boundary.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from dataclasses import dataclass, field
from typing import IO, Callable, Sequence

from .classify import Prediction
from .corpus import Priority

PROTOCOL_VERSION = "1"


class BridgeError(Exception):
    """Spawn, handshake, or stream failure."""


class ProtocolError(BridgeError):
    """The worker answered, but not with what the protocol demands."""


class WorkerTrainingError(BridgeError):
    """The worker reported ERROR for a TRAIN request."""


@dataclass(frozen=True, slots=True)
class WorkerRecord:
    bug_id: int
    text: str
    label: Priority | None = None

    def to_wire(self) -> dict:
        wire: dict = {"bug_id": self.bug_id, "text": self.text}
        if self.label is not None:
            wire["label"] = self.label.value
        return wire


@dataclass(frozen=True, slots=True)
class EpochPolicy:
    """Default fine-tuning epochs with per-topic overrides."""

    default_epochs: int = 15
    overrides: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.default_epochs < 1 or any(e < 1 for e in self.overrides.values()):
            raise ValueError("epochs must be >= 1")

    def epochs_for(self, topic_id: int) -> int:
        return self.overrides.get(topic_id, self.default_epochs)


class _LineReader:
    """Background reader so stream reads can honor a timeout."""

    _EOF = object()

    def __init__(self, stream: IO[str]):
        self._queue: queue.Queue = queue.Queue()
        self._thread = threading.Thread(target=self._pump, args=(stream,), daemon=True)
        self._thread.start()

    def _pump(self, stream: IO[str]) -> None:
        try:
            for line in stream:
                self._queue.put(line)
        except ValueError:
            pass  # stream closed under us
        self._queue.put(self._EOF)

    def read_line(self, timeout: float | None) -> str | None:
        """One line, or None on EOF; raises BridgeError on timeout."""
        try:
            item = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise BridgeError(f"worker produced no output within {timeout}s") from None
        if item is self._EOF:
            return None
        return item


class WorkerHandle:
    """One worker connection; requests are serialized FIFO by construction."""

    def __init__(
        self,
        reader: IO[str],
        writer: IO[str],
        process: subprocess.Popen | None = None,
        request_timeout: float | None = None,
    ):
        self._reader = _LineReader(reader)
        self._writer = writer
        self._process = process
        self._request_timeout = request_timeout
        self._next_id = 0
        self._closed = False

    def handshake(self, timeout: float) -> None:
        line = self._reader.read_line(timeout)
        if line is None:
            raise BridgeError("worker exited before the handshake")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeError(f"malformed handshake line: {line!r}") from exc
        version = message.get("protocol_version")
        if version != PROTOCOL_VERSION:
            raise BridgeError(
                f"protocol version mismatch: worker speaks {version!r}, "
                f"driver speaks {PROTOCOL_VERSION!r}"
            )

    def request(self, op: str, topic_id: int, *, epochs: int | None = None,
                records: Sequence[WorkerRecord] = (), timeout: float | None = None) -> dict:
        if self._closed:
            raise BridgeError("worker handle is closed")
        request_id = self._next_id
        self._next_id += 1
        payload: dict = {
            "v": PROTOCOL_VERSION,
            "id": request_id,
            "op": op,
            "topic_id": topic_id,
            "records": [r.to_wire() for r in records],
        }
        if epochs is not None:
            payload["epochs"] = epochs
        try:
            self._writer.write(json.dumps(payload) + "\n")
            self._writer.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise BridgeError("worker stream closed while sending") from exc

        line = self._reader.read_line(timeout if timeout is not None else self._request_timeout)
        if line is None:
            raise BridgeError(f"worker stream ended while awaiting response {request_id}")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed response line: {line!r}") from exc
        if response.get("v") != PROTOCOL_VERSION:
            raise ProtocolError(f"response with wrong protocol version: {response.get('v')!r}")
        if response.get("id") != request_id:
            raise ProtocolError(
                f"out-of-order response: expected id {request_id}, got {response.get('id')!r}"
            )
        if response.get("status") not in ("OK", "ERROR"):
            raise ProtocolError(f"response with invalid status: {response.get('status')!r}")
        return response

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._writer.close()
        except Exception:
            pass
        if self._process is not None:
            try:
                self._process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._process.kill()
                self._process.wait()

    def terminate(self) -> None:
        self._closed = True
        try:
            self._writer.close()
        except Exception:
            pass
        if self._process is not None and self._process.poll() is None:
            self._process.kill()
            self._process.wait()


def spawn_worker(
    command: Sequence[str],
    handshake_timeout: float = 10.0,
    request_timeout: float | None = None,
) -> WorkerHandle:
    """Start the worker process and validate its handshake."""
    try:
        process = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
    except (OSError, ValueError) as exc:
        raise BridgeError(f"failed to spawn worker {command!r}: {exc}") from exc
    assert process.stdout is not None and process.stdin is not None
    handle = WorkerHandle(
        reader=process.stdout,
        writer=process.stdin,
        process=process,
        request_timeout=request_timeout,
    )
    try:
        handle.handshake(handshake_timeout)
    except BridgeError:
        handle.terminate()
        raise
    return handle


def in_process_worker(
    serve: Callable[[IO[str], IO[str]], None],
    request_timeout: float | None = None,
    handshake_timeout: float = 10.0,
) -> WorkerHandle:
    """Run a serve loop on an in-process thread behind the same handle API."""
    import os

    req_read_fd, req_write_fd = os.pipe()
    resp_read_fd, resp_write_fd = os.pipe()
    worker_in = os.fdopen(req_read_fd, "r", encoding="utf-8")
    worker_out = os.fdopen(resp_write_fd, "w", encoding="utf-8")
    driver_in = os.fdopen(resp_read_fd, "r", encoding="utf-8")
    driver_out = os.fdopen(req_write_fd, "w", encoding="utf-8")

    def run() -> None:
        try:
            serve(worker_in, worker_out)
        finally:
            try:
                worker_out.close()
            except Exception:
                pass

    threading.Thread(target=run, daemon=True).start()
    handle = WorkerHandle(reader=driver_in, writer=driver_out, request_timeout=request_timeout)
    handle.handshake(handshake_timeout)
    return handle


def train_remote(
    handle: WorkerHandle,
    topic_id: int,
    records: Sequence[WorkerRecord],
    policy: EpochPolicy,
    timeout: float | None = None,
) -> int:
    """TRAIN one topic; returns the epochs requested.  Blocks until OK."""
    if not records:
        raise BridgeError("cannot train on an empty record batch")
    if any(r.label is None for r in records):
        raise BridgeError("every TRAIN record must carry a label")
    epochs = policy.epochs_for(topic_id)
    response = handle.request(
        "TRAIN", topic_id, epochs=epochs, records=records, timeout=timeout
    )
    if response["status"] != "OK":
        raise WorkerTrainingError(
            f"worker failed to train topic {topic_id}: {response.get('error')!r}"
        )
    return epochs


def predict_remote(
    handle: WorkerHandle,
    topic_id: int,
    records: Sequence[WorkerRecord],
    timeout: float | None = None,
) -> list[Prediction]:
    """PREDICT a batch; responses are realigned to the request order."""
    if any(r.label is not None for r in records):
        raise BridgeError("PREDICT records must not carry labels")
    response = handle.request("PREDICT", topic_id, records=records, timeout=timeout)
    if response["status"] != "OK":
        raise ProtocolError(
            f"worker failed to predict topic {topic_id}: {response.get('error')!r}"
        )
    rows = response.get("predictions")
    if not isinstance(rows, list):
        raise ProtocolError("OK PREDICT response carries no predictions list")

    by_id: dict[int, Prediction] = {}
    for row in rows:
        try:
            bug_id = int(row["bug_id"])
            priority = Priority(row["priority"])
            scores = tuple(float(s) for s in row["scores"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed prediction row {row!r}") from exc
        if bug_id in by_id:
            raise ProtocolError(f"duplicate prediction for bug {bug_id}")
        by_id[bug_id] = Prediction(
            bug_id=bug_id, priority=priority, scores=scores, topic=topic_id
        )
    requested = [r.bug_id for r in records]
    missing = [b for b in requested if b not in by_id]
    if missing:
        raise ProtocolError(f"predictions missing for bugs {missing}")
    if len(by_id) != len(requested):
        extra = sorted(set(by_id) - set(requested))
        raise ProtocolError(f"predictions for unrequested bugs {extra}")
    return [by_id[b] for b in requested]


def shutdown_worker(handle: WorkerHandle, timeout: float | None = 10.0) -> None:
    """Polite SHUTDOWN followed by stream close and process reap."""
    try:
        handle.request("SHUTDOWN", -1, timeout=timeout)
    except BridgeError:
        pass  # a worker that dies on shutdown is still shut down
    handle.close()


class RemoteTextClassifier:
    """Adapter exposing the worker as a per-topic text classifier."""

    def __init__(self, handle: WorkerHandle, timeout: float | None = None):
        self._handle = handle
        self._timeout = timeout

    def predict_text(self, topic: int, bug_id: int, text: str) -> Prediction:
        [prediction] = predict_remote(
            self._handle, topic, [WorkerRecord(bug_id=bug_id, text=text)],
            timeout=self._timeout,
        )
        return prediction
