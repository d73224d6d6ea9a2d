#!/usr/bin/env python3
"""The two native classifier kinds, worked small enough to check by hand.

The multinomial model's Laplace-smoothed likelihoods are printed next to
their closed forms; the Gaussian model is trained on a one-feature
two-class mixture whose Bayes boundary is known.  The last section shows
what heavy class imbalance does to a weak-featured multinomial model.
"""

import math

import numpy as np

from bugprio import classify, synth, textprep
from bugprio.corpus import PRIORITY_LEVELS, Priority, SplitSpec, chronological_split
from bugprio.textprep import CountVector

# --- multinomial NB on two one-word documents -------------------------------
# "aa" labeled P1, "bb" labeled P2, vocabulary {a: 0, b: 1}, laplace 1.0:
# p(a|P1) = (2 + 1) / (2 + 2) = 0.75
model = classify.train_multinomial_nb(
    [CountVector(pairs=((0, 2),), total=2), CountVector(pairs=((1, 2),), total=2)],
    [Priority.P1, Priority.P2], laplace=1.0, vocab_size=2,
)
print("p(a|P1) =", math.exp(model.log_likelihood[0, 0]), "(closed form: 0.75)")
print("p(b|P1) =", math.exp(model.log_likelihood[0, 1]), "(closed form: 0.25)")

probe = CountVector(pairs=((0, 2), (1, 1)), total=3)  # the document "aab"
prediction = model.predict(probe)
print(f'document "aab" -> {prediction.priority.value}, '
      f"scores {np.round(prediction.scores[:2], 4)}")

# --- gaussian NB: boundary against the analytic one --------------------------
rng = np.random.default_rng(17)
counts = np.concatenate([
    np.rint(rng.normal(100.0, 8.0, 100)), np.rint(rng.normal(140.0, 8.0, 100)),
]).astype(int)
gauss = classify.train_gaussian_nb(
    [CountVector(pairs=((0, int(c)),), total=int(c)) for c in counts],
    [Priority.P1] * 100 + [Priority.P2] * 100, vocab_size=1,
)
for value in (110, 118, 122, 130):
    label = gauss.predict(CountVector(pairs=((0, value),), total=value)).priority
    print(f"feature={value} -> {label.value}")
print("(equal priors and variances: the analytic boundary is 120)")

# --- what 87.9% imbalance does ------------------------------------------------
reports = synth.imbalanced_corpus(n_docs=2000, majority_share=0.879, seed=11)
train, test = chronological_split(reports, SplitSpec(0.8))
config = textprep.TokenizerConfig(fields_used=("summary",))
token_lists = [textprep.tokenize(r, config) for r in train]
vocab = textprep.build_vocabulary(token_lists, min_count=1)
skewed = classify.train_multinomial_nb(
    [textprep.vectorize(t, vocab) for t in token_lists],
    [r.priority for r in train], vocab_size=vocab.size,
)
predictions = [
    skewed.predict(textprep.vectorize(textprep.tokenize(r, config), vocab)).priority
    for r in test
]
share = sum(p is Priority.P3 for p in predictions) / len(predictions)
print(f"\nwith weak features and an 87.9% majority class, the model predicts "
      f"P3 for {share:.1%} of held-out reports")
print("predicted distribution:",
      {p.value: sum(q is p for q in predictions) for p in PRIORITY_LEVELS})
