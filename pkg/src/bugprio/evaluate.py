"""Confusion matrices and micro/macro-averaged classification metrics.

All metrics are defined over the fixed five-level priority universe,
per class i with one-vs-rest counts TP_i, FP_i, FN_i, TN_i:

  accuracy        = (sum TP_i + sum TN_i) / sum (TP_i + FP_i + FN_i + TN_i)
  micro precision = sum TP_i / sum (TP_i + FP_i)
  micro recall    = sum TP_i / sum (TP_i + FN_i)
  micro F1        = 2 sum TP_i / (2 sum TP_i + sum FP_i + sum FN_i)
  macro precision = (1/5) sum_i TP_i / (TP_i + FP_i)
  macro recall    = (1/5) sum_i TP_i / (TP_i + FN_i)
  macro F1        = (1/5) sum_i harmonic_mean(P_i, R_i)

The macro mean always divides by 5, even when a class never occurs.  The
accuracy formula is shared by both averaging modes.  Note that for
single-label data where every report gets exactly one of the five labels,
micro precision, recall, and F1 all collapse to correct/total, and accuracy
equals (3N + 2C) / 5N; published result tables in which micro precision and
recall differ cannot have come from these formulas.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import PRIORITY_INDEX, PRIORITY_LEVELS, BugReport, Priority

N_CLASSES = len(PRIORITY_LEVELS)


class ZeroDivision(enum.Enum):
    """How a 0/0 per-class term enters the macro mean."""

    ZERO = "zero"          # count the term as 0 (default, conservative)
    EXCLUDE = "exclude"    # drop the class from the mean entirely


class MetricsError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class ConfusionMatrix:
    """5x5 counts; rows are gold priority, columns are predicted priority."""

    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.counts) != N_CLASSES or any(len(r) != N_CLASSES for r in self.counts):
            raise MetricsError("confusion matrix must be 5x5")
        if any(c < 0 for row in self.counts for c in row):
            raise MetricsError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def per_class(self) -> list[tuple[int, int, int, int]]:
        """One-vs-rest (TP, FP, FN, TN) for each of the five classes."""
        total = self.total
        out = []
        for i in range(N_CLASSES):
            tp = self.counts[i][i]
            fn = sum(self.counts[i]) - tp
            fp = sum(self.counts[g][i] for g in range(N_CLASSES)) - tp
            tn = total - tp - fp - fn
            out.append((tp, fp, fn, tn))
        return out

    def to_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    def to_json(self) -> dict:
        return {
            "labels": [p.value for p in PRIORITY_LEVELS],
            "rows_gold_cols_pred": [list(row) for row in self.counts],
        }


def confusion(golds: Sequence[Priority], preds: Sequence[Priority]) -> ConfusionMatrix:
    """Count (gold, predicted) pairs into a 5x5 matrix."""
    if len(golds) != len(preds):
        raise MetricsError(f"length mismatch: {len(golds)} golds vs {len(preds)} preds")
    counts = [[0] * N_CLASSES for _ in range(N_CLASSES)]
    for gold, pred in zip(golds, preds):
        counts[PRIORITY_INDEX[gold]][PRIORITY_INDEX[pred]] += 1
    return ConfusionMatrix(counts=tuple(tuple(row) for row in counts))


@dataclass(frozen=True, slots=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def _accuracy(cm: ConfusionMatrix) -> float:
    per_class = cm.per_class()
    num = sum(tp + tn for tp, _, _, tn in per_class)
    den = sum(tp + fp + fn + tn for tp, fp, fn, tn in per_class)
    return num / den


def micro_metrics(cm: ConfusionMatrix) -> Metrics:
    """Metrics from globally summed one-vs-rest counts."""
    if cm.total == 0:
        raise MetricsError("cannot compute metrics for an empty confusion matrix")
    per_class = cm.per_class()
    tp = sum(t for t, _, _, _ in per_class)
    fp = sum(f for _, f, _, _ in per_class)
    fn = sum(f for _, _, f, _ in per_class)
    return Metrics(
        accuracy=_accuracy(cm),
        precision=tp / (tp + fp),
        recall=tp / (tp + fn),
        f1=2 * tp / (2 * tp + fp + fn),
    )


def _safe_ratio(num: int, den: int) -> float | None:
    """None encodes an undefined 0/0 term."""
    if den == 0:
        return None
    return num / den


def macro_metrics(cm: ConfusionMatrix, zero_division: ZeroDivision = ZeroDivision.ZERO) -> Metrics:
    """Uniform mean of per-class metrics over the full label universe."""
    if cm.total == 0:
        raise MetricsError("cannot compute metrics for an empty confusion matrix")
    precisions: list[float | None] = []
    recalls: list[float | None] = []
    f1s: list[float | None] = []
    for tp, fp, fn, _ in cm.per_class():
        p = _safe_ratio(tp, tp + fp)
        r = _safe_ratio(tp, tp + fn)
        precisions.append(p)
        recalls.append(r)
        if p is None or r is None:
            f1s.append(None)
        elif p + r == 0.0:
            f1s.append(0.0)
        else:
            f1s.append(2 * p * r / (p + r))
    return Metrics(
        accuracy=_accuracy(cm),
        precision=_macro_mean(precisions, zero_division),
        recall=_macro_mean(recalls, zero_division),
        f1=_macro_mean(f1s, zero_division),
    )


def _macro_mean(terms: Sequence[float | None], policy: ZeroDivision) -> float:
    if policy is ZeroDivision.ZERO:
        return sum(t if t is not None else 0.0 for t in terms) / N_CLASSES
    defined = [t for t in terms if t is not None]
    if not defined:
        return 0.0
    return sum(defined) / len(defined)


def per_class_metrics(
    cm: ConfusionMatrix, zero_division: ZeroDivision = ZeroDivision.ZERO
) -> dict[str, dict[str, float | None]]:
    """Per-class P/R/F1; undefined 0/0 terms are 0.0 or null per policy."""
    out: dict[str, dict[str, float | None]] = {}
    for label, (tp, fp, fn, _) in zip(PRIORITY_LEVELS, cm.per_class()):
        p = _safe_ratio(tp, tp + fp)
        r = _safe_ratio(tp, tp + fn)
        if zero_division is ZeroDivision.ZERO:
            p = 0.0 if p is None else p
            r = 0.0 if r is None else r
        if p is None or r is None:
            f1 = None
        elif p + r == 0.0:
            f1 = 0.0
        else:
            f1 = 2 * p * r / (p + r)
        out[label.value] = {"precision": p, "recall": r, "f1": f1}
    return out


@dataclass(frozen=True, slots=True)
class MetricsReport:
    micro: Metrics
    macro: Metrics
    per_class: dict[str, dict[str, float | None]]
    zero_division: ZeroDivision

    def to_json(self) -> dict:
        return {
            "micro": self.micro.to_dict(),
            "macro": self.macro.to_dict(),
            "per_class": self.per_class,
            "zero_division": self.zero_division.value,
        }


def metrics_report(
    cm: ConfusionMatrix, zero_division: ZeroDivision = ZeroDivision.ZERO
) -> MetricsReport:
    return MetricsReport(
        micro=micro_metrics(cm),
        macro=macro_metrics(cm, zero_division),
        per_class=per_class_metrics(cm, zero_division),
        zero_division=zero_division,
    )


def distribution_report(reports: Sequence[BugReport]) -> dict:
    """Share of each priority level among reports with a known priority."""
    counts = {p.value: 0 for p in PRIORITY_LEVELS}
    unknown = 0
    for report in reports:
        if report.priority is Priority.UNKNOWN:
            unknown += 1
        else:
            counts[report.priority.value] += 1
    known = sum(counts.values())
    shares = {
        label: (count / known if known else 0.0) for label, count in counts.items()
    }
    return {"counts": counts, "shares": shares, "unknown": unknown, "total": len(reports)}


@dataclass(frozen=True, slots=True)
class PhaseRecord:
    """Wall-clock timing for one pipeline phase."""

    phase: str
    seconds: float
    items: int = 0
    peak_mem_mb: float | None = None


def timing_report(records: Sequence[PhaseRecord]) -> list[dict]:
    """Per-phase wall-clock table with per-item latency where item counts exist.

    Peak memory is best-effort and simply echoed when a phase recorded one.
    """
    rows = []
    for record in records:
        row: dict = {"phase": record.phase, "seconds": record.seconds, "items": record.items}
        row["per_item_seconds"] = record.seconds / record.items if record.items else None
        if record.peak_mem_mb is not None:
            row["peak_mem_mb"] = record.peak_mem_mb
        rows.append(row)
    return rows


def render_metrics_table(report: MetricsReport) -> str:
    """Fixed-width human-readable table for terminal output."""
    lines = [
        f"{'':<12}{'accuracy':>10}{'precision':>11}{'recall':>9}{'f1':>9}",
    ]
    for name, m in (("micro", report.micro), ("macro", report.macro)):
        lines.append(
            f"{name:<12}{m.accuracy:>10.4f}{m.precision:>11.4f}{m.recall:>9.4f}{m.f1:>9.4f}"
        )
    lines.append("")
    lines.append(f"{'class':<12}{'precision':>11}{'recall':>9}{'f1':>9}")
    for label, vals in report.per_class.items():
        cells = [
            f"{v:>{w}.4f}" if v is not None else f"{'n/a':>{w}}"
            for v, w in ((vals["precision"], 11), (vals["recall"], 9), (vals["f1"], 9))
        ]
        lines.append(f"{label:<12}" + "".join(cells))
    return "\n".join(lines)


def metrics_to_csv(report: MetricsReport, stream) -> None:
    stream.write("scope,metric,value\n")
    for scope, metrics in (("micro", report.micro), ("macro", report.macro)):
        for key, value in metrics.to_dict().items():
            stream.write(f"{scope},{key},{value!r}\n")
    for label, vals in report.per_class.items():
        for key, value in vals.items():
            stream.write(f"{label},{key},{value!r}\n")


def dump_json(payload: Mapping, stream) -> None:
    """Deterministic JSON serialization shared by the pipeline's artifacts."""
    json.dump(payload, stream, sort_keys=True, indent=2)
    stream.write("\n")
