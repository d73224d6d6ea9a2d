from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugprio import evaluate
from bugprio.corpus import PRIORITY_LEVELS, BugReport, Priority, Resolution, Status
from bugprio.evaluate import ZeroDivision, confusion, macro_metrics, micro_metrics

P1, P2, P3, P4, P5 = PRIORITY_LEVELS


# --- independent oracle: recompute everything from the raw label pairs ---

def brute_per_class(golds, preds):
    out = []
    for cls in PRIORITY_LEVELS:
        tp = sum(1 for g, p in zip(golds, preds) if g is cls and p is cls)
        fp = sum(1 for g, p in zip(golds, preds) if g is not cls and p is cls)
        fn = sum(1 for g, p in zip(golds, preds) if g is cls and p is not cls)
        tn = sum(1 for g, p in zip(golds, preds) if g is not cls and p is not cls)
        out.append((tp, fp, fn, tn))
    return out


def brute_metrics(golds, preds, policy=ZeroDivision.ZERO):
    per_class = brute_per_class(golds, preds)
    stp = sum(r[0] for r in per_class)
    sfp = sum(r[1] for r in per_class)
    sfn = sum(r[2] for r in per_class)
    stn = sum(r[3] for r in per_class)
    accuracy = (stp + stn) / (stp + sfp + sfn + stn)
    micro = {
        "accuracy": accuracy,
        "precision": stp / (stp + sfp),
        "recall": stp / (stp + sfn),
        "f1": 2 * stp / (2 * stp + sfp + sfn),
    }

    def mean(terms):
        if policy is ZeroDivision.ZERO:
            return sum(t if t is not None else 0.0 for t in terms) / 5
        defined = [t for t in terms if t is not None]
        return sum(defined) / len(defined) if defined else 0.0

    precisions, recalls, f1s = [], [], []
    for tp, fp, fn, _ in per_class:
        p = tp / (tp + fp) if tp + fp else None
        r = tp / (tp + fn) if tp + fn else None
        precisions.append(p)
        recalls.append(r)
        if p is None or r is None:
            f1s.append(None)
        else:
            f1s.append(2 * p * r / (p + r) if p + r else 0.0)
    macro = {
        "accuracy": accuracy,
        "precision": mean(precisions),
        "recall": mean(recalls),
        "f1": mean(f1s),
    }
    return micro, macro


def random_pairs(rng, max_n=20):
    n = int(rng.integers(1, max_n + 1))
    golds = [PRIORITY_LEVELS[i] for i in rng.integers(0, 5, size=n)]
    preds = [PRIORITY_LEVELS[i] for i in rng.integers(0, 5, size=n)]
    return golds, preds


class TestConfusion:
    def test_basic_cells(self):
        cm = confusion([P1, P2], [P1, P3])
        assert cm.counts[0][0] == 1
        assert cm.counts[1][2] == 1
        assert cm.total == 2

    def test_empty_is_all_zero(self):
        cm = confusion([], [])
        assert cm.total == 0
        assert all(c == 0 for row in cm.counts for c in row)

    def test_length_mismatch(self):
        with pytest.raises(evaluate.MetricsError):
            confusion([P1], [P1, P2])

    def test_per_class_matches_binary_recount_on_10k_pairs(self):
        rng = np.random.default_rng(3)
        golds = [PRIORITY_LEVELS[i] for i in rng.integers(0, 5, size=10_000)]
        preds = [PRIORITY_LEVELS[i] for i in rng.integers(0, 5, size=10_000)]
        assert confusion(golds, preds).per_class() == brute_per_class(golds, preds)

    def test_unknown_label_rejected(self):
        with pytest.raises(KeyError):
            confusion([Priority.UNKNOWN], [P1])


class TestMicro:
    def test_perfect_classifier(self):
        golds = [P1, P2, P3, P4, P5] * 4
        m = micro_metrics(confusion(golds, golds))
        assert m.precision == m.recall == m.f1 == m.accuracy == 1.0

    def test_all_p3_on_879_gold(self):
        golds = [P3] * 879 + [P1] * 40 + [P2] * 40 + [P4] * 40 + [P5] * 1
        preds = [P3] * 1000
        m = micro_metrics(confusion(golds, preds))
        assert m.precision == pytest.approx(0.879, abs=1e-12)
        assert m.recall == pytest.approx(0.879, abs=1e-12)
        assert m.f1 == pytest.approx(0.879, abs=1e-12)
        assert m.accuracy == pytest.approx(0.6 + 0.4 * 0.879, abs=1e-12)

    def test_three_class_toy_matrix_by_hand(self):
        # gold/pred counts [[2,1,0],[0,3,0],[1,0,3]] over P1..P3; P4,P5 absent
        golds = [P1, P1, P1, P2, P2, P2, P3, P3, P3, P3]
        preds = [P1, P1, P2, P2, P2, P2, P1, P3, P3, P3]
        cm = confusion(golds, preds)
        micro = micro_metrics(cm)
        assert micro.precision == pytest.approx(8 / 10, abs=1e-15)
        assert micro.recall == pytest.approx(8 / 10, abs=1e-15)
        assert micro.f1 == pytest.approx(8 / 10, abs=1e-15)
        assert micro.accuracy == pytest.approx(46 / 50, abs=1e-15)
        macro = macro_metrics(cm)
        assert macro.precision == pytest.approx((2 / 3 + 3 / 4 + 1.0) / 5, abs=1e-15)
        assert macro.recall == pytest.approx((2 / 3 + 1.0 + 3 / 4) / 5, abs=1e-15)
        assert macro.f1 == pytest.approx((2 / 3 + 6 / 7 + 6 / 7) / 5, abs=1e-15)

    def test_empty_matrix_is_an_error(self):
        cm = confusion([], [])
        with pytest.raises(evaluate.MetricsError):
            micro_metrics(cm)
        with pytest.raises(evaluate.MetricsError):
            macro_metrics(cm)

    @settings(max_examples=100)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_single_label_identities(self, seed):
        golds, preds = random_pairs(np.random.default_rng(seed))
        m = micro_metrics(confusion(golds, preds))
        n = len(golds)
        correct = sum(1 for g, p in zip(golds, preds) if g is p)
        assert m.precision == m.recall == m.f1
        assert abs(m.precision - correct / n) < 1e-15
        assert abs(m.accuracy - (3 * n + 2 * correct) / (5 * n)) < 1e-15


class TestMacro:
    def test_all_p3_macro_recall_is_exactly_point_two(self):
        golds = [P3] * 879 + [P1] * 60 + [P2] * 30 + [P4] * 21 + [P5] * 10
        preds = [P3] * 1000
        m = macro_metrics(confusion(golds, preds))
        assert m.recall == 0.2

    def test_perfect_all_classes_present(self):
        golds = [P1, P2, P3, P4, P5]
        m = macro_metrics(confusion(golds, golds))
        assert m.precision == m.recall == m.f1 == 1.0

    def test_zero_division_exclude_policy(self):
        golds = [P1, P1, P2]
        preds = [P1, P1, P2]
        zero = macro_metrics(confusion(golds, preds), ZeroDivision.ZERO)
        excl = macro_metrics(confusion(golds, preds), ZeroDivision.EXCLUDE)
        assert zero.recall == pytest.approx(2 / 5)
        assert excl.recall == pytest.approx(1.0)

    @settings(max_examples=100)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_matches_brute_force(self, seed):
        golds, preds = random_pairs(np.random.default_rng(seed))
        cm = confusion(golds, preds)
        for policy in ZeroDivision:
            _, macro_oracle = brute_metrics(golds, preds, policy)
            m = macro_metrics(cm, policy)
            assert m.precision == pytest.approx(macro_oracle["precision"], abs=1e-12)
            assert m.recall == pytest.approx(macro_oracle["recall"], abs=1e-12)
            assert m.f1 == pytest.approx(macro_oracle["f1"], abs=1e-12)

    @settings(max_examples=60)
    @given(
        st.integers(min_value=0, max_value=2**31 - 1),
        st.permutations(list(range(5))),
    )
    def test_invariant_under_consistent_label_permutation(self, seed, perm):
        golds, preds = random_pairs(np.random.default_rng(seed))
        mapping = {PRIORITY_LEVELS[i]: PRIORITY_LEVELS[perm[i]] for i in range(5)}
        base = macro_metrics(confusion(golds, preds))
        swapped = macro_metrics(
            confusion([mapping[g] for g in golds], [mapping[p] for p in preds])
        )
        assert swapped.precision == pytest.approx(base.precision, abs=1e-12)
        assert swapped.recall == pytest.approx(base.recall, abs=1e-12)
        assert swapped.f1 == pytest.approx(base.f1, abs=1e-12)
        assert swapped.accuracy == pytest.approx(base.accuracy, abs=1e-12)


class TestReports:
    def _report(self, bug_id, priority):
        return BugReport(
            bug_id=bug_id, summary="", description="", product="", component="",
            status=Status.NEW, resolution=Resolution.NONE, priority=priority,
            order_key=bug_id,
        )

    def test_uniform_distribution(self):
        reports = [self._report(i, p) for i, p in enumerate(PRIORITY_LEVELS)]
        shares = evaluate.distribution_report(reports)["shares"]
        assert all(s == pytest.approx(0.2) for s in shares.values())

    def test_single_report(self):
        report = evaluate.distribution_report([self._report(1, P2)])
        assert report["shares"]["P2"] == 1.0

    def test_unknown_counted_separately(self):
        reports = [self._report(1, P3), self._report(2, Priority.UNKNOWN)]
        report = evaluate.distribution_report(reports)
        assert report["unknown"] == 1
        assert report["shares"]["P3"] == 1.0

    def test_timing_rows_and_latency(self):
        rows = evaluate.timing_report([
            evaluate.PhaseRecord("train", 10.0, items=500),
            evaluate.PhaseRecord("test", 2.0, items=0),
        ])
        assert len(rows) == 2
        assert rows[0]["per_item_seconds"] == pytest.approx(0.02)
        assert rows[1]["per_item_seconds"] is None

    def test_timing_empty(self):
        assert evaluate.timing_report([]) == []

    def test_metrics_report_json_and_table(self):
        golds = [P1, P2, P3, P3]
        report = evaluate.metrics_report(confusion(golds, golds))
        payload = report.to_json()
        assert payload["micro"]["accuracy"] == 1.0
        assert payload["zero_division"] == "zero"
        table = evaluate.render_metrics_table(report)
        assert "micro" in table and "P5" in table
