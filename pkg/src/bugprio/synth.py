"""Synthetic bug-report corpora with known structure.

These generators double as test oracles: a planted-topic corpus knows which
topic produced every document, and a skewed corpus knows its exact label
distribution, so recovered models can be checked against the ground truth
that generated the data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import PRIORITY_LEVELS, BugReport, Priority, Resolution, Status


def _report(bug_id: int, summary: str, priority: Priority, component: str = "core") -> BugReport:
    return BugReport(
        bug_id=bug_id,
        summary=summary,
        description="",
        product="synthetic",
        component=component,
        status=Status.RESOLVED,
        resolution=Resolution.FIXED,
        priority=priority,
        order_key=bug_id,
    )


@dataclass(frozen=True)
class PlantedCorpus:
    reports: list[BugReport]
    planted_topics: list[int]
    lexicons: list[list[str]]


def planted_topic_corpus(
    n_docs: int = 300,
    n_topics: int = 3,
    lexicon_size: int = 10,
    doc_length: int = 50,
    seed: int = 7,
    label_priors: Sequence[Sequence[float]] | None = None,
) -> PlantedCorpus:
    """Documents drawn from disjoint per-topic lexicons.

    Topic ``k`` owns words ``tKw00..tKw09``; each document samples all its
    tokens uniformly from one topic's lexicon.  Labels come from
    ``label_priors[topic]`` when given (one 5-way distribution per topic),
    else every report is P3.
    """
    rng = np.random.default_rng(seed)
    lexicons = [
        [f"t{k}w{w:02d}" for w in range(lexicon_size)] for k in range(n_topics)
    ]
    reports = []
    planted = []
    for i in range(n_docs):
        topic = int(rng.integers(0, n_topics))
        words = rng.integers(0, lexicon_size, size=doc_length)
        text = " ".join(lexicons[topic][w] for w in words)
        if label_priors is not None:
            label = PRIORITY_LEVELS[int(rng.choice(5, p=np.asarray(label_priors[topic])))]
        else:
            label = Priority.P3
        reports.append(_report(i + 1, text, label, component=f"comp{topic}"))
        planted.append(topic)
    return PlantedCorpus(reports=reports, planted_topics=planted, lexicons=lexicons)


def imbalanced_corpus(
    n_docs: int = 2000,
    majority_share: float = 0.879,
    majority: Priority = Priority.P3,
    lexicon_size: int = 40,
    doc_length: int = 20,
    tilt: float = 0.02,
    seed: int = 11,
) -> list[BugReport]:
    """Heavily skewed labels over weakly informative text.

    Every class draws from the same lexicon; a class-specific tilt of a few
    percent on a handful of words is the only signal, so label priors
    dominate any trained classifier.
    """
    rng = np.random.default_rng(seed)
    label_p = np.full(5, (1.0 - majority_share) / 4)
    label_p[PRIORITY_LEVELS.index(majority)] = majority_share

    word_p = {}
    for idx, priority in enumerate(PRIORITY_LEVELS):
        weights = np.ones(lexicon_size)
        weights[idx * 3 : idx * 3 + 3] += tilt * lexicon_size
        word_p[priority] = weights / weights.sum()

    reports = []
    for i in range(n_docs):
        label = PRIORITY_LEVELS[int(rng.choice(5, p=label_p))]
        words = rng.choice(lexicon_size, size=doc_length, p=word_p[label])
        text = " ".join(f"word{w:02d}" for w in words)
        reports.append(_report(i + 1, text, label))
    return reports
