#!/usr/bin/env python3
"""Micro versus macro averaging on skewed multiclass data.

The majority-class predictor is the canonical cautionary tale: on an
87.9%-P3 gold distribution it posts a 0.95 accuracy and 0.88 micro scores
while its macro recall is pinned at exactly 1/5.  Macro averaging weights
the five priority levels equally, which is the whole point of reporting it.
"""

from bugprio import evaluate
from bugprio.corpus import PRIORITY_LEVELS

P1, P2, P3, P4, P5 = PRIORITY_LEVELS

golds = [P3] * 879 + [P1] * 50 + [P2] * 40 + [P4] * 20 + [P5] * 11
all_p3 = [P3] * len(golds)

cm = evaluate.confusion(golds, all_p3)
report = evaluate.metrics_report(cm)
print("all-P3 predictor on an 87.9%-P3 gold distribution:\n")
print(evaluate.render_metrics_table(report))

micro, macro = report.micro, report.macro
print(f"\nmicro accuracy {micro.accuracy:.4f} comes from the one-vs-rest "
      f"identity (3N + 2C) / 5N")
print(f"macro recall {macro.recall:.4f} is exactly one correct class out of five")

# For single-label data covering every report, micro precision, recall and
# F1 are all the same number (correct / total); a results table where they
# differ was not produced by these formulas.
assert micro.precision == micro.recall == micro.f1

print("\nper-class view (the 0/0 cells default to 0):")
for label, values in report.per_class.items():
    print(f"  {label}: {values}")
