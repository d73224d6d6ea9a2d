"""Pipeline orchestration: ingest -> train -> evaluate -> predict -> report.

Every command reads one JSON config file (seed mandatory) and writes its
artifacts under the configured run directory, together with a manifest
listing each artifact's SHA-256.  All randomness flows from the config
seed, so rerunning a command over identical inputs reproduces identical
model files and metrics bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import bridge, classify, corpus, evaluate, textprep, topics

MANIFEST_NAME = "manifest.json"

# artifacts whose hashes define the model-bundle identity
BUNDLE_FILES = ("vocabulary.jsonl", "lda_model.npz", "classifiers.npz", "external_router.json")


class ConfigError(Exception):
    """Bad or missing configuration; exits with code 2."""


class PipelineError(Exception):
    """Runtime pipeline failure; exits with code 1."""


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    dataset_path: Path
    dataset_format: corpus.DatasetFormat
    columns: corpus.ColumnMap
    order_key_min: int | None
    order_key_max: int | None
    tokenizer: textprep.TokenizerConfig
    min_count: int
    lda: topics.LdaConfig
    kind: classify.ClassifierKind
    laplace: float
    variance_floor: float | None
    min_topic_size: int
    worker_command: list[str] | None
    handshake_timeout: float
    epoch_policy: bridge.EpochPolicy
    split: corpus.SplitSpec
    output_dir: Path
    raw: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        if "seed" not in raw:
            raise ConfigError("config must set a seed; reproducibility is not optional")
        seed = int(raw["seed"])

        dataset = raw.get("dataset", {})
        tokenizer_cfg = raw.get("tokenizer", {})
        vocab_cfg = raw.get("vocabulary", {})
        lda_cfg = dict(raw.get("lda", {}))
        cls_cfg = raw.get("classifier", {})
        split_cfg = raw.get("split", {})

        try:
            fmt = corpus.DatasetFormat(dataset.get("format", "csv"))
        except ValueError:
            raise ConfigError(f"unknown dataset format {dataset.get('format')!r}") from None

        stopword_file = tokenizer_cfg.get("stopword_file")
        stopwords = (
            textprep.load_stopwords(stopword_file)
            if stopword_file
            else textprep.load_default_stopwords()
        )
        try:
            tokenizer = textprep.TokenizerConfig(
                lowercase=bool(tokenizer_cfg.get("lowercase", True)),
                remove_stopwords=bool(tokenizer_cfg.get("remove_stopwords", True)),
                stopword_list=stopwords,
                min_token_length=int(tokenizer_cfg.get("min_token_length", 2)),
                fields_used=tuple(
                    tokenizer_cfg.get("fields", ("summary", "description", "component"))
                ),
            )
            lda_cfg.setdefault("seed", seed)
            lda = topics.LdaConfig(
                topics=int(lda_cfg.get("topics", 10)),
                alpha=lda_cfg.get("alpha"),
                beta=float(lda_cfg.get("beta", 0.01)),
                iterations=int(lda_cfg.get("iterations", 1000)),
                burn_in=int(lda_cfg.get("burn_in", 200)),
                inference_iterations=int(lda_cfg.get("inference_iterations", 100)),
                seed=int(lda_cfg["seed"]),
            )
            kind = classify.ClassifierKind(cls_cfg.get("kind", "multinomial_nb"))
            epoch_policy = bridge.EpochPolicy(
                default_epochs=int(cls_cfg.get("epochs_default", 15)),
                overrides={int(k): int(v) for k, v in cls_cfg.get("epochs_overrides", {}).items()},
            )
            split = corpus.SplitSpec(
                train_fraction=float(split_cfg.get("train_fraction", 0.8)),
                ordering=corpus.Ordering(split_cfg.get("ordering", "by_order_key")),
            )
            columns = corpus.ColumnMap.from_dict(dataset.get("columns", {}))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        worker_command = cls_cfg.get("worker_command")
        if worker_command is not None and not isinstance(worker_command, list):
            raise ConfigError("classifier.worker_command must be a list of strings")

        return cls(
            seed=seed,
            dataset_path=Path(dataset.get("path", "")),
            dataset_format=fmt,
            columns=columns,
            order_key_min=dataset.get("order_key_min"),
            order_key_max=dataset.get("order_key_max"),
            tokenizer=tokenizer,
            min_count=int(vocab_cfg.get("min_count", 2)),
            lda=lda,
            kind=kind,
            laplace=float(cls_cfg.get("laplace", 1.0)),
            variance_floor=cls_cfg.get("variance_floor"),
            min_topic_size=int(cls_cfg.get("min_topic_size", 25)),
            worker_command=worker_command,
            handshake_timeout=float(cls_cfg.get("handshake_timeout", 10.0)),
            epoch_policy=epoch_policy,
            split=split,
            output_dir=Path(raw.get("output_dir", "run")),
            raw=raw,
        )


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _update_manifest(run_dir: Path) -> None:
    """Recompute artifact hashes; the bundle hash ties the model files together."""
    artifacts = {}
    for path in sorted(run_dir.iterdir()):
        if path.is_file() and path.name != MANIFEST_NAME:
            artifacts[path.name] = _sha256(path)
    bundle_parts = [artifacts[n] for n in BUNDLE_FILES if n in artifacts]
    bundle_hash = (
        hashlib.sha256("".join(bundle_parts).encode("ascii")).hexdigest()
        if bundle_parts
        else None
    )
    with open(run_dir / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        evaluate.dump_json({"artifacts": artifacts, "bundle_hash": bundle_hash}, fh)


def _peak_mem_mb() -> float | None:
    try:
        import resource

        peak_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        return peak_kb / 1024.0
    except Exception:
        return None


class _PhaseTimer:
    """Collects wall-clock phase records; memory is best-effort process peak."""

    def __init__(self) -> None:
        self.records: list[evaluate.PhaseRecord] = []

    def run(self, phase: str, fn, items: int = 0):
        start = time.perf_counter()
        result = fn()
        self.records.append(
            evaluate.PhaseRecord(
                phase=phase,
                seconds=time.perf_counter() - start,
                items=items,
                peak_mem_mb=_peak_mem_mb(),
            )
        )
        return result

    def write(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(evaluate.timing_report(self.records), fh, indent=2)
            fh.write("\n")


class _OutputTracker:
    """Removes this command's partial outputs when a stage fails."""

    def __init__(self) -> None:
        self.paths: list[Path] = []

    def add(self, path: Path) -> Path:
        self.paths.append(path)
        return path

    def cleanup(self) -> None:
        for path in self.paths:
            try:
                path.unlink()
            except FileNotFoundError:
                pass


def cmd_ingest(config: PipelineConfig) -> int:
    run_dir = config.output_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    try:
        with open(config.dataset_path, "rb") as fh:
            result = corpus.parse_dataset(fh, config.dataset_format, config.columns)
    except FileNotFoundError:
        raise ConfigError(f"dataset not found: {config.dataset_path}") from None
    except corpus.DatasetError as exc:
        raise PipelineError(str(exc)) from exc

    reports = corpus.filter_order_key_range(
        result.reports, config.order_key_min, config.order_key_max
    )
    if not reports:
        raise ConfigError(f"dataset {config.dataset_path} produced no records")

    with open(run_dir / "corpus.jsonl", "w", encoding="utf-8") as fh:
        corpus.write_canonical_jsonl(reports, fh)
    with open(run_dir / "rejects.jsonl", "w", encoding="utf-8") as fh:
        corpus.write_rejects_jsonl(result.rejects, fh)
    with open(run_dir / "distribution.json", "w", encoding="utf-8") as fh:
        evaluate.dump_json(evaluate.distribution_report(reports), fh)
    _update_manifest(run_dir)
    print(f"ingested {len(reports)} reports ({len(result.rejects)} rejected)")
    return 0


def _load_corpus(run_dir: Path) -> list[corpus.BugReport]:
    path = run_dir / "corpus.jsonl"
    if not path.exists():
        raise ConfigError(f"no canonical corpus at {path}; run ingest first")
    with open(path, "r", encoding="utf-8") as fh:
        return corpus.read_canonical_jsonl(fh)


def cmd_train(config: PipelineConfig) -> int:
    run_dir = config.output_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    if config.kind is classify.ClassifierKind.EXTERNAL and not config.worker_command:
        raise ConfigError("classifier.kind is 'external' but no worker_command is configured")

    reports = _load_corpus(run_dir)
    eligible = corpus.filter_training_eligible(reports)
    if len(eligible) < 2:
        raise PipelineError(f"only {len(eligible)} training-eligible reports; cannot split")
    train, test = corpus.chronological_split(eligible, config.split)

    tracker = _OutputTracker()
    timer = _PhaseTimer()
    try:
        with open(tracker.add(run_dir / "train.jsonl"), "w", encoding="utf-8") as fh:
            corpus.write_canonical_jsonl(train, fh)
        with open(tracker.add(run_dir / "test.jsonl"), "w", encoding="utf-8") as fh:
            corpus.write_canonical_jsonl(test, fh)

        token_lists = timer.run(
            "tokenize",
            lambda: [textprep.tokenize(r, config.tokenizer) for r in train],
            items=len(train),
        )
        vocab = timer.run(
            "vocabulary",
            lambda: textprep.build_vocabulary(token_lists, min_count=config.min_count),
        )
        with open(tracker.add(run_dir / "vocabulary.jsonl"), "w", encoding="utf-8") as fh:
            vocab.to_jsonl(fh)

        vectors = [textprep.vectorize(tokens, vocab) for tokens in token_lists]
        model = timer.run(
            "lda_fit", lambda: topics.fit_lda(vectors, config.lda, vocab), items=len(train)
        )
        topics.save_model(model, tracker.add(run_dir / "lda_model.npz"))

        assignments = topics.assign_topics(model, [r.bug_id for r in train], vectors)
        histogram = topics.topic_histogram(assignments, model.topics)
        with open(tracker.add(run_dir / "topic_histogram.json"), "w", encoding="utf-8") as fh:
            evaluate.dump_json({"counts": histogram}, fh)

        lda_hash = _sha256(run_dir / "lda_model.npz")
        if config.kind is classify.ClassifierKind.EXTERNAL:
            trained = timer.run(
                "classifier_train",
                lambda: _train_external(config, assignments, train),
                items=len(train),
            )
            with open(tracker.add(run_dir / "external_router.json"), "w", encoding="utf-8") as fh:
                evaluate.dump_json(
                    {
                        "kind": config.kind.value,
                        "trained_topics": sorted(trained),
                        "vocab_hash": model.vocab_hash,
                        "lda_hash": lda_hash,
                        "epochs_default": config.epoch_policy.default_epochs,
                        "epochs_overrides": {
                            str(k): v for k, v in config.epoch_policy.overrides.items()
                        },
                    },
                    fh,
                )
        else:
            router = timer.run(
                "classifier_train",
                lambda: classify.train_topic_routed(
                    [a.topic for a in assignments],
                    vectors,
                    [r.priority for r in train],
                    config.kind,
                    topics=model.topics,
                    min_topic_size=config.min_topic_size,
                    laplace=config.laplace,
                    variance_floor=config.variance_floor,
                    vocab_size=vocab.size,
                ),
                items=len(train),
            )
            classify.save_router(
                router,
                tracker.add(run_dir / "classifiers.npz"),
                vocab_hash=model.vocab_hash,
                lda_hash=lda_hash,
            )

        timer.write(tracker.add(run_dir / "timing_train.json"))
        _update_manifest(run_dir)
    except (textprep.VocabularyError, topics.LdaError, classify.TrainingError,
            bridge.BridgeError) as exc:
        tracker.cleanup()
        raise PipelineError(str(exc)) from exc
    except Exception:
        tracker.cleanup()
        raise

    print(f"trained on {len(train)} reports, held out {len(test)}; "
          f"topics={model.topics} vocab={vocab.size}")
    return 0


def _train_external(
    config: PipelineConfig,
    assignments: Sequence[topics.TopicAssignment],
    train: Sequence[corpus.BugReport],
) -> set[int]:
    """TRAIN per populated topic plus the pooled fallback topic (-1)."""
    by_topic: dict[int, list[corpus.BugReport]] = {}
    for assignment, report in zip(assignments, train):
        by_topic.setdefault(assignment.topic, []).append(report)

    handle = bridge.spawn_worker(config.worker_command, config.handshake_timeout)
    trained: set[int] = set()
    try:
        def records_for(reports: Sequence[corpus.BugReport]) -> list[bridge.WorkerRecord]:
            return [
                bridge.WorkerRecord(
                    bug_id=r.bug_id, text=classify.classifier_text(r), label=r.priority
                )
                for r in reports
            ]

        for topic, reports in sorted(by_topic.items()):
            if len(reports) < config.min_topic_size:
                continue
            try:
                bridge.train_remote(handle, topic, records_for(reports), config.epoch_policy)
                trained.add(topic)
            except bridge.WorkerTrainingError as exc:
                print(f"warning: {exc}; topic {topic} falls back", file=sys.stderr)
        bridge.train_remote(
            handle, -1, records_for(list(train)), bridge.EpochPolicy(
                default_epochs=config.epoch_policy.default_epochs,
                overrides={**config.epoch_policy.overrides},
            )
        )
    finally:
        bridge.shutdown_worker(handle)
    return trained


@dataclass(frozen=True)
class _Bundle:
    vocab: textprep.Vocabulary
    lda_model: topics.LdaModel
    router: classify.TopicRoutedClassifier | None   # None for external kind
    external_meta: dict | None


def _load_bundle(config: PipelineConfig, run_dir: Path) -> _Bundle:
    vocab_path = run_dir / "vocabulary.jsonl"
    lda_path = run_dir / "lda_model.npz"
    if not vocab_path.exists() or not lda_path.exists():
        raise ConfigError(f"no model bundle under {run_dir}; run train first")
    with open(vocab_path, "r", encoding="utf-8") as fh:
        vocab = textprep.Vocabulary.from_jsonl(fh, min_count=config.min_count)
    lda_model = topics.load_model(lda_path)
    if lda_model.vocab_hash != topics.vocabulary_hash(vocab):
        raise PipelineError("vocabulary hash mismatch between bundle files; refusing to run")
    lda_hash = _sha256(lda_path)

    external_path = run_dir / "external_router.json"
    if external_path.exists():
        with open(external_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        if meta["vocab_hash"] != lda_model.vocab_hash or meta["lda_hash"] != lda_hash:
            raise PipelineError("external router hashes do not match bundle; refusing to run")
        return _Bundle(vocab=vocab, lda_model=lda_model, router=None, external_meta=meta)

    router = classify.load_router(
        run_dir / "classifiers.npz",
        expect_vocab_hash=lda_model.vocab_hash,
        expect_lda_hash=lda_hash,
    )
    return _Bundle(vocab=vocab, lda_model=lda_model, router=router, external_meta=None)


def cmd_evaluate(config: PipelineConfig, bundle_dir: Path | None = None) -> int:
    run_dir = config.output_dir
    bundle_dir = bundle_dir or run_dir
    try:
        bundle = _load_bundle(config, bundle_dir)
    except classify.TrainingError as exc:
        raise PipelineError(str(exc)) from exc

    test_path = bundle_dir / "test.jsonl"
    if not test_path.exists():
        raise ConfigError(f"no test split at {test_path}; run train first")
    with open(test_path, "r", encoding="utf-8") as fh:
        test = corpus.read_canonical_jsonl(fh)
    test = [r for r in test if r.priority is not corpus.Priority.UNKNOWN]
    if not test:
        raise PipelineError("test split has no evaluable reports")

    timer = _PhaseTimer()
    if bundle.external_meta is not None:
        predictions = timer.run(
            "predict", lambda: _predict_external(config, bundle, test), items=len(test)
        )
    else:
        predictions = timer.run(
            "predict",
            lambda: [
                classify.predict_routed(
                    bundle.router, bundle.lda_model, bundle.vocab, r, config.tokenizer
                )
                for r in test
            ],
            items=len(test),
        )

    golds = [r.priority for r in test]
    preds = [p.priority for p in predictions]
    cm = evaluate.confusion(golds, preds)
    report = evaluate.metrics_report(cm)

    with open(run_dir / "confusion.json", "w", encoding="utf-8") as fh:
        evaluate.dump_json(cm.to_json(), fh)
    with open(run_dir / "metrics.json", "w", encoding="utf-8") as fh:
        evaluate.dump_json(report.to_json(), fh)
    timer.write(run_dir / "timing_eval.json")
    _update_manifest(run_dir)
    print(evaluate.render_metrics_table(report))
    return 0


def _predict_external(
    config: PipelineConfig, bundle: _Bundle, test: Sequence[corpus.BugReport]
) -> list[classify.Prediction]:
    """Batch PREDICT per routed topic; untrained topics go to fallback (-1)."""
    trained = set(bundle.external_meta["trained_topics"])
    routed: dict[int, list[corpus.BugReport]] = {}
    topic_of: dict[int, int] = {}
    for report in test:
        vector = textprep.vectorize(
            textprep.tokenize(report, config.tokenizer), bundle.vocab
        )
        topic = topics.assign_topic(topics.infer_theta(bundle.lda_model, vector))
        topic_of[report.bug_id] = topic
        routed.setdefault(topic if topic in trained else -1, []).append(report)

    if not config.worker_command:
        raise ConfigError("classifier.kind is 'external' but no worker_command is configured")
    handle = bridge.spawn_worker(config.worker_command, config.handshake_timeout)
    by_id: dict[int, classify.Prediction] = {}
    try:
        for topic, reports in sorted(routed.items()):
            records = [
                bridge.WorkerRecord(bug_id=r.bug_id, text=classify.classifier_text(r))
                for r in reports
            ]
            for pred in bridge.predict_remote(handle, topic, records):
                by_id[pred.bug_id] = pred
    finally:
        bridge.shutdown_worker(handle)
    return [
        classify.Prediction(
            bug_id=r.bug_id,
            priority=by_id[r.bug_id].priority,
            scores=by_id[r.bug_id].scores,
            topic=topic_of[r.bug_id],
        )
        for r in test
    ]


def cmd_predict(config: PipelineConfig, bundle_dir: Path | None = None,
                input_stream=None, output_stream=None) -> int:
    """Streaming JSONL in, JSONL out; never trains, bundle opened read-only."""
    bundle = _load_bundle(config, bundle_dir or config.output_dir)
    stdin = input_stream if input_stream is not None else sys.stdin
    stdout = output_stream if output_stream is not None else sys.stdout

    handle = None
    if bundle.external_meta is not None:
        if not config.worker_command:
            raise ConfigError("classifier.kind is 'external' but no worker_command is configured")
        handle = bridge.spawn_worker(config.worker_command, config.handshake_timeout)
        trained = set(bundle.external_meta["trained_topics"])

    try:
        for line_no, line in enumerate(stdin, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                report = _loose_report(record)
            except (ValueError, KeyError) as exc:
                stdout.write(json.dumps(
                    {"line": line_no, "error": str(exc)}, sort_keys=True) + "\n")
                continue
            if handle is not None:
                vector = textprep.vectorize(
                    textprep.tokenize(report, config.tokenizer), bundle.vocab
                )
                topic = topics.assign_topic(topics.infer_theta(bundle.lda_model, vector))
                wire_topic = topic if topic in trained else -1
                [pred] = bridge.predict_remote(
                    handle, wire_topic,
                    [bridge.WorkerRecord(bug_id=report.bug_id,
                                         text=classify.classifier_text(report))],
                )
                pred = classify.Prediction(
                    bug_id=pred.bug_id, priority=pred.priority, scores=pred.scores, topic=topic
                )
            else:
                pred = classify.predict_routed(
                    bundle.router, bundle.lda_model, bundle.vocab, report, config.tokenizer
                )
            stdout.write(json.dumps(
                {
                    "bug_id": pred.bug_id,
                    "priority": pred.priority.value,
                    "topic": pred.topic,
                    "scores": list(pred.scores),
                },
                sort_keys=True,
            ) + "\n")
    finally:
        if handle is not None:
            bridge.shutdown_worker(handle)
    return 0


def _loose_report(record: dict) -> corpus.BugReport:
    """Prediction-time records need an id and text; labels are optional."""
    if "bug_id" not in record:
        raise KeyError("missing bug_id")
    return corpus.BugReport(
        bug_id=int(record["bug_id"]),
        summary=str(record.get("summary", "")),
        description=str(record.get("description", "")),
        product=str(record.get("product", "")),
        component=str(record.get("component", "")),
        status=corpus.Status(record.get("status", "NEW")),
        resolution=corpus.Resolution(record.get("resolution", "NONE")),
        priority=corpus.Priority.parse(record.get("priority")),
        order_key=int(record.get("order_key", record["bug_id"])),
    )


def cmd_report(run_dir: Path, csv_dir: Path | None = None) -> int:
    """Human-readable summary of a run directory, with optional CSV export."""
    def load(name: str) -> dict | list | None:
        path = run_dir / name
        if not path.exists():
            return None
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    metrics = load("metrics.json")
    if metrics is not None:
        report = evaluate.MetricsReport(
            micro=evaluate.Metrics(**metrics["micro"]),
            macro=evaluate.Metrics(**metrics["macro"]),
            per_class=metrics["per_class"],
            zero_division=evaluate.ZeroDivision(metrics["zero_division"]),
        )
        print("== metrics ==")
        print(evaluate.render_metrics_table(report))
        print()
        if csv_dir is not None:
            csv_dir.mkdir(parents=True, exist_ok=True)
            with open(csv_dir / "metrics.csv", "w", encoding="utf-8") as fh:
                evaluate.metrics_to_csv(report, fh)

    confusion_data = load("confusion.json")
    if confusion_data is not None:
        print("== confusion (rows gold, cols predicted) ==")
        labels = confusion_data["labels"]
        print(" " * 6 + "".join(f"{l:>8}" for l in labels))
        for label, row in zip(labels, confusion_data["rows_gold_cols_pred"]):
            print(f"{label:<6}" + "".join(f"{c:>8}" for c in row))
        print()
        if csv_dir is not None:
            with open(csv_dir / "confusion.csv", "w", encoding="utf-8") as fh:
                fh.write("gold," + ",".join(labels) + "\n")
                for label, row in zip(labels, confusion_data["rows_gold_cols_pred"]):
                    fh.write(label + "," + ",".join(str(c) for c in row) + "\n")

    distribution = load("distribution.json")
    if distribution is not None:
        print("== priority distribution ==")
        for label, share in distribution["shares"].items():
            print(f"{label:<6}{distribution['counts'][label]:>8}  {share:>8.4f}")
        print()

    histogram = load("topic_histogram.json")
    if histogram is not None:
        print("== topic histogram ==")
        for topic, count in enumerate(histogram["counts"]):
            print(f"topic {topic:<3}{count:>8}")
        print()

    for name in ("timing_train.json", "timing_eval.json"):
        rows = load(name)
        if rows:
            print(f"== {name.removesuffix('.json')} ==")
            for row in rows:
                per_item = row.get("per_item_seconds")
                extra = f"  ({per_item:.6f} s/item)" if per_item else ""
                print(f"{row['phase']:<18}{row['seconds']:>10.3f} s{extra}")
            print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bugprio",
        description="topic-routed priority prediction for bug reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p: argparse.ArgumentParser) -> None:
        p.add_argument("-c", "--config", required=True, help="pipeline config JSON")

    p_ingest = sub.add_parser("ingest", help="parse a dataset into the canonical corpus")
    add_config(p_ingest)

    p_train = sub.add_parser("train", help="split, fit topics, train classifiers")
    add_config(p_train)

    p_eval = sub.add_parser("evaluate", help="score the held-out split")
    add_config(p_eval)
    p_eval.add_argument("--bundle", default=None, help="bundle directory (default: output_dir)")

    p_pred = sub.add_parser("predict", help="stream JSONL reports to predictions")
    add_config(p_pred)
    p_pred.add_argument("--bundle", default=None)
    p_pred.add_argument("--input", default=None, help="JSONL file (default: stdin)")

    p_report = sub.add_parser("report", help="render run artifacts as tables")
    p_report.add_argument("--run", required=True, help="run directory")
    p_report.add_argument("--csv", default=None, help="directory for CSV exports")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(Path(args.run), Path(args.csv) if args.csv else None)
        config = PipelineConfig.from_file(args.config)
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "evaluate":
            return cmd_evaluate(config, Path(args.bundle) if args.bundle else None)
        if args.command == "predict":
            if args.input:
                with open(args.input, "r", encoding="utf-8") as fh:
                    return cmd_predict(
                        config, Path(args.bundle) if args.bundle else None, input_stream=fh
                    )
            return cmd_predict(config, Path(args.bundle) if args.bundle else None)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "kind": "config"}), file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(json.dumps({"error": str(exc), "kind": "pipeline"}), file=sys.stderr)
        return 1
    except bridge.BridgeError as exc:
        print(json.dumps({"error": str(exc), "kind": "bridge"}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
