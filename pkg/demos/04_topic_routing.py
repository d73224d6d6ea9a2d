#!/usr/bin/env python3
"""Why one classifier per topic: a signal word that flips meaning.

Documents come from two topics with distinct routing vocabularies, and a
shared pair of signal words whose label meaning is opposite in the two
topics.  A single pooled linear classifier averages the two meanings away;
routing to a per-topic classifier keeps them apart.
"""

import numpy as np

from bugprio import classify, evaluate, textprep, topics
from bugprio.classify import ClassifierKind
from bugprio.corpus import BugReport, Priority, Resolution, Status

rng = np.random.default_rng(23)
lexicons = [[f"t{t}w{w}" for w in range(8)] for t in range(2)]
reports = []
for i in range(200):
    topic = int(rng.integers(0, 2))
    positive = bool(rng.integers(0, 2))
    words = [lexicons[topic][w] for w in rng.integers(0, 8, size=20)]
    words += ["sigpos" if positive else "signeg"] * 6
    if topic == 0:
        label = Priority.P1 if positive else Priority.P2
    else:
        label = Priority.P2 if positive else Priority.P1
    reports.append(BugReport(
        bug_id=i + 1, summary=" ".join(words), description="", product="",
        component="", status=Status.RESOLVED, resolution=Resolution.FIXED,
        priority=label, order_key=i + 1,
    ))

config = textprep.TokenizerConfig(fields_used=("summary",))
token_lists = [textprep.tokenize(r, config) for r in reports]
vocab = textprep.build_vocabulary(token_lists, min_count=1)
vectors = [textprep.vectorize(t, vocab) for t in token_lists]

model = topics.fit_lda(
    vectors, topics.LdaConfig(topics=2, iterations=80, burn_in=20, seed=5), vocab
)
assignments = topics.assign_topics(model, [r.bug_id for r in reports], vectors)

n_train = 150
labels = [r.priority for r in reports]
router = classify.train_topic_routed(
    [a.topic for a in assignments][:n_train], vectors[:n_train], labels[:n_train],
    ClassifierKind.MULTINOMIAL_NB, topics=2, min_topic_size=10, vocab_size=vocab.size,
)
pooled = classify.train_multinomial_nb(
    vectors[:n_train], labels[:n_train], vocab_size=vocab.size
)

golds, routed_preds, pooled_preds = [], [], []
for report, vector in zip(reports[n_train:], vectors[n_train:]):
    golds.append(report.priority)
    routed_preds.append(
        classify.predict_routed(router, model, vocab, report, config).priority
    )
    pooled_preds.append(pooled.predict(vector).priority)

for name, preds in (("routed", routed_preds), ("pooled", pooled_preds)):
    cm = evaluate.confusion(golds, preds)
    micro = evaluate.micro_metrics(cm)
    macro = evaluate.macro_metrics(cm)
    print(f"{name:>7}: accuracy={micro.precision:.3f}  macro-F1={macro.f1:.3f}")

print("\nthe pooled model sees 'sigpos' as pure noise; the per-topic models "
      "read it correctly in both topics")
