#!/usr/bin/env python3
"""Ingesting a tracker export: column maps, rejects, filtering, splitting.

Builds a small CSV export in memory, parses it into canonical records,
shows how malformed rows are quarantined rather than fatal, then filters
to training-eligible reports and takes an order-preserving 80/20 split.
"""

import io

from bugprio import corpus
from bugprio.corpus import ColumnMap, DatasetFormat, SplitSpec

EXPORT = """\
id,title,body,prod,comp,state,res,prio
101,Crash when opening editor,"Stack trace attached, see below",Platform,UI,RESOLVED,FIXED,P1
102,Typo in the about dialog,,Platform,UI,RESOLVED,FIXED,P5
103,Feature: dark mode,,Platform,SWT,NEW,,P3
not-a-number,Broken row,,Platform,UI,NEW,,P3
105,Slow startup on cold cache,profiling data inline,Platform,Core,RESOLVED,FIXED,P2
106,Intermittent test failure,,Platform,Core,RESOLVED,WORKSFORME,P3
107,NPE in workspace save,,Platform,Core,RESOLVED,FIXED,--
108,Editor loses selection,,Platform,UI,RESOLVED,FIXED,P3
"""

columns = ColumnMap(
    bug_id="id", summary="title", description="body", product="prod",
    component="comp", status="state", resolution="res", priority="prio",
)

result = corpus.parse_dataset(
    io.BytesIO(EXPORT.encode("utf-8")), DatasetFormat.CSV, columns
)
print(f"parsed {len(result.reports)} records, {len(result.rejects)} rejects")
for reject in result.rejects:
    print(f"  line {reject.line}: {reject.reason}")

# Unparseable priorities survive ingestion as UNKNOWN; they are dropped
# later, by the training/evaluation filters, not by the parser.
for report in result.reports:
    print(f"  bug {report.bug_id}: status={report.status.value}/"
          f"{report.resolution.value} priority={report.priority.value}")

eligible = corpus.filter_training_eligible(result.reports)
print(f"\ntraining-eligible (RESOLVED+FIXED, known priority): "
      f"{[r.bug_id for r in eligible]}")

train, test = corpus.chronological_split(eligible, SplitSpec(train_fraction=0.8))
print(f"split -> train={[r.bug_id for r in train]} test={[r.bug_id for r in test]}")

buffer = io.StringIO()
corpus.write_canonical_jsonl(eligible, buffer)
print("\ncanonical JSONL:")
print(buffer.getvalue(), end="")
