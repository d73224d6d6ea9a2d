from __future__ import annotations

import csv
import io
import json
import sys

import pytest

from bugprio import cli, synth
from bugprio.cli import PipelineConfig


def write_corpus_csv(path, reports):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bug_id", "summary", "description", "product", "component",
                        "status", "resolution", "priority"])
        for r in reports:
            writer.writerow([r.bug_id, r.summary, r.description, r.product,
                            r.component, r.status.value, r.resolution.value,
                            r.priority.value])


def base_config(tmp_path, dataset, **overrides):
    config = {
        "seed": 123,
        "dataset": {"path": str(dataset), "format": "csv"},
        "tokenizer": {"fields": ["summary", "description", "component"]},
        "vocabulary": {"min_count": 1},
        "lda": {"topics": 2, "iterations": 30, "burn_in": 5, "inference_iterations": 20},
        "classifier": {"kind": "multinomial_nb", "min_topic_size": 5},
        "split": {"train_fraction": 0.8},
        "output_dir": str(tmp_path / "run"),
    }
    config.update(overrides)
    return config


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


@pytest.fixture()
def pipeline(tmp_path):
    """Small end-to-end setup: CSV dataset + config file."""
    priors = [(0.7, 0.1, 0.1, 0.05, 0.05), (0.05, 0.05, 0.1, 0.1, 0.7)]
    corpus = synth.planted_topic_corpus(
        n_docs=120, n_topics=2, lexicon_size=8, doc_length=15, seed=3,
        label_priors=priors,
    )
    dataset = tmp_path / "bugs.csv"
    write_corpus_csv(dataset, corpus.reports)
    config = base_config(tmp_path, dataset)
    return {"tmp": tmp_path, "dataset": dataset, "config": config,
            "config_path": write_config(tmp_path, config)}


class TestConfig:
    def test_seed_is_mandatory(self, tmp_path):
        with pytest.raises(cli.ConfigError, match="seed"):
            PipelineConfig.from_dict({"dataset": {}})

    def test_missing_file(self):
        with pytest.raises(cli.ConfigError):
            PipelineConfig.from_file("/nonexistent/config.json")

    def test_main_exit_code_for_config_errors(self, tmp_path, capsys):
        path = write_config(tmp_path, {"dataset": {}})
        assert cli.main(["ingest", "-c", path]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["kind"] == "config"

    def test_unknown_classifier_kind(self, tmp_path):
        with pytest.raises(cli.ConfigError):
            PipelineConfig.from_dict({"seed": 1, "classifier": {"kind": "svm"}})

    def test_seed_propagates_to_lda(self):
        config = PipelineConfig.from_dict({"seed": 99})
        assert config.lda.seed == 99


class TestIngest:
    def test_writes_canonical_outputs(self, pipeline, capsys):
        assert cli.main(["ingest", "-c", pipeline["config_path"]]) == 0
        run = pipeline["tmp"] / "run"
        assert (run / "corpus.jsonl").exists()
        assert (run / "rejects.jsonl").exists()
        distribution = json.loads((run / "distribution.json").read_text())
        assert distribution["total"] == 120
        manifest = json.loads((run / "manifest.json").read_text())
        assert "corpus.jsonl" in manifest["artifacts"]

    def test_rerun_is_byte_identical(self, pipeline):
        cli.main(["ingest", "-c", pipeline["config_path"]])
        run = pipeline["tmp"] / "run"
        first = {p.name: p.read_bytes() for p in run.iterdir()}
        cli.main(["ingest", "-c", pipeline["config_path"]])
        second = {p.name: p.read_bytes() for p in run.iterdir()}
        assert first == second

    def test_empty_dataset_exits_2(self, tmp_path, capsys):
        dataset = tmp_path / "empty.csv"
        dataset.write_text("bug_id,summary,description,product,component,"
                           "status,resolution,priority\n")
        path = write_config(tmp_path, base_config(tmp_path, dataset))
        assert cli.main(["ingest", "-c", path]) == 2

    def test_missing_dataset_exits_2(self, tmp_path):
        path = write_config(tmp_path, base_config(tmp_path, tmp_path / "nope.csv"))
        assert cli.main(["ingest", "-c", path]) == 2

    def test_rejects_report_lines(self, tmp_path, pipeline):
        with open(pipeline["dataset"], "a", encoding="utf-8") as fh:
            fh.write("not-an-int,s,d,p,c,NEW,,P3\n")
        cli.main(["ingest", "-c", pipeline["config_path"]])
        rejects = (pipeline["tmp"] / "run" / "rejects.jsonl").read_text().splitlines()
        assert len(rejects) == 1
        assert json.loads(rejects[0])["line"] == 122


class TestTrainEvaluate:
    def test_full_pipeline(self, pipeline, capsys):
        assert cli.main(["ingest", "-c", pipeline["config_path"]]) == 0
        assert cli.main(["train", "-c", pipeline["config_path"]]) == 0
        run = pipeline["tmp"] / "run"
        for name in ("train.jsonl", "test.jsonl", "vocabulary.jsonl", "lda_model.npz",
                     "classifiers.npz", "topic_histogram.json", "timing_train.json"):
            assert (run / name).exists(), name
        manifest = json.loads((run / "manifest.json").read_text())
        assert manifest["bundle_hash"]

        assert cli.main(["evaluate", "-c", pipeline["config_path"]]) == 0
        metrics = json.loads((run / "metrics.json").read_text())
        assert 0.0 <= metrics["micro"]["accuracy"] <= 1.0
        assert metrics["micro"]["precision"] == metrics["micro"]["recall"]
        confusion = json.loads((run / "confusion.json").read_text())
        total = sum(sum(row) for row in confusion["rows_gold_cols_pred"])
        test_lines = (run / "test.jsonl").read_text().splitlines()
        assert total == len(test_lines)

    def test_train_before_ingest_fails(self, pipeline):
        assert cli.main(["train", "-c", pipeline["config_path"]]) == 2

    def test_same_seed_same_bundle_hash(self, pipeline, tmp_path):
        cli.main(["ingest", "-c", pipeline["config_path"]])
        cli.main(["train", "-c", pipeline["config_path"]])
        manifest1 = json.loads((pipeline["tmp"] / "run" / "manifest.json").read_text())

        other = dict(pipeline["config"], output_dir=str(tmp_path / "run2"))
        other_path = write_config(tmp_path, other, "config2.json")
        cli.main(["ingest", "-c", other_path])
        cli.main(["train", "-c", other_path])
        manifest2 = json.loads((tmp_path / "run2" / "manifest.json").read_text())
        assert manifest1["bundle_hash"] == manifest2["bundle_hash"]

    def test_vocabulary_tamper_refused(self, pipeline, capsys):
        cli.main(["ingest", "-c", pipeline["config_path"]])
        cli.main(["train", "-c", pipeline["config_path"]])
        vocab_path = pipeline["tmp"] / "run" / "vocabulary.jsonl"
        lines = vocab_path.read_text().splitlines()
        row = json.loads(lines[0])
        row["doc_freq"] += 1
        lines[0] = json.dumps(row, sort_keys=True)
        vocab_path.write_text("\n".join(lines) + "\n")
        assert cli.main(["evaluate", "-c", pipeline["config_path"]]) == 1
        err = json.loads(capsys.readouterr().err)
        assert "hash" in err["error"]

    def test_external_kind_without_worker_is_config_error(self, pipeline, tmp_path):
        config = dict(pipeline["config"])
        config["classifier"] = {"kind": "external"}
        path = write_config(tmp_path, config, "external.json")
        cli.main(["ingest", "-c", path])
        assert cli.main(["train", "-c", path]) == 2

    def test_external_kind_with_mock_worker(self, pipeline, tmp_path):
        state = tmp_path / "worker_state.json"
        config = dict(pipeline["config"])
        config["classifier"] = {
            "kind": "external",
            "min_topic_size": 5,
            "worker_command": [sys.executable, "-m", "bugprio.mock_worker",
                               "--state-file", str(state)],
            "epochs_default": 15,
            "epochs_overrides": {"1": 1},
        }
        path = write_config(tmp_path, config, "external.json")
        assert cli.main(["ingest", "-c", path]) == 0
        assert cli.main(["train", "-c", path]) == 0
        run = pipeline["tmp"] / "run"
        meta = json.loads((run / "external_router.json").read_text())
        assert meta["kind"] == "external"
        assert state.exists()
        assert cli.main(["evaluate", "-c", path]) == 0
        metrics = json.loads((run / "metrics.json").read_text())
        assert metrics["micro"]["accuracy"] > 0.0


class TestPredict:
    def test_stream_with_malformed_line(self, pipeline):
        cli.main(["ingest", "-c", pipeline["config_path"]])
        cli.main(["train", "-c", pipeline["config_path"]])
        config = PipelineConfig.from_dict(pipeline["config"])
        stdin = io.StringIO(
            json.dumps({"bug_id": 900, "summary": "t0w01 t0w02 t0w03"}) + "\n"
            + "{broken\n"
            + json.dumps({"bug_id": 901, "summary": "t1w04 t1w05"}) + "\n"
        )
        out = io.StringIO()
        assert cli.cmd_predict(config, input_stream=stdin, output_stream=out) == 0
        lines = [json.loads(l) for l in out.getvalue().splitlines()]
        assert len(lines) == 3
        assert lines[0]["bug_id"] == 900 and lines[0]["priority"].startswith("P")
        assert lines[1]["error"] and lines[1]["line"] == 2
        assert lines[2]["bug_id"] == 901
        assert isinstance(lines[0]["topic"], int) and len(lines[0]["scores"]) == 5

    def test_predict_is_deterministic(self, pipeline):
        cli.main(["ingest", "-c", pipeline["config_path"]])
        cli.main(["train", "-c", pipeline["config_path"]])
        config = PipelineConfig.from_dict(pipeline["config"])
        payload = json.dumps({"bug_id": 1, "summary": "t0w01 t0w02"}) + "\n"
        outs = []
        for _ in range(2):
            out = io.StringIO()
            cli.cmd_predict(config, input_stream=io.StringIO(payload), output_stream=out)
            outs.append(out.getvalue())
        assert outs[0] == outs[1]

    def test_file_input_via_main(self, pipeline, tmp_path):
        cli.main(["ingest", "-c", pipeline["config_path"]])
        cli.main(["train", "-c", pipeline["config_path"]])
        stream = tmp_path / "incoming.jsonl"
        stream.write_text(json.dumps({"bug_id": 77, "summary": "t0w01"}) + "\n")
        assert cli.main(["predict", "-c", pipeline["config_path"],
                         "--input", str(stream)]) == 0


class TestReport:
    def test_renders_and_exports_csv(self, pipeline, tmp_path, capsys):
        cli.main(["ingest", "-c", pipeline["config_path"]])
        cli.main(["train", "-c", pipeline["config_path"]])
        cli.main(["evaluate", "-c", pipeline["config_path"]])
        capsys.readouterr()
        csv_dir = tmp_path / "csv"
        assert cli.main(["report", "--run", str(pipeline["tmp"] / "run"),
                         "--csv", str(csv_dir)]) == 0
        out = capsys.readouterr().out
        assert "== metrics ==" in out
        assert "== topic histogram ==" in out
        assert (csv_dir / "metrics.csv").exists()
        assert (csv_dir / "confusion.csv").exists()
