"""Per-topic priority classifiers with a pooled fallback.

Two native classifier kinds are implemented from their closed forms:
multinomial naive Bayes over sparse term counts (Laplace smoothing) and
Gaussian naive Bayes over densified counts (variance floor).  A third
kind delegates to an external worker process via the bridge protocol and
receives raw text instead of count vectors.

Routing follows the two-step scheme: a report's dominant topic picks the
classifier; topics with too few training examples fall back to a single
classifier pooled over the whole training set, so every topic id always
resolves to a usable model.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .corpus import PRIORITY_INDEX, PRIORITY_LEVELS, BugReport, Priority
from .textprep import CountVector, TokenizerConfig, Vocabulary, tokenize, vectorize
from .topics import LdaModel, assign_topic, infer_theta

CLASSIFIER_FORMAT = "topic-routed/1"
N_CLASSES = len(PRIORITY_LEVELS)


class ClassifierKind(enum.Enum):
    MULTINOMIAL_NB = "multinomial_nb"
    GAUSSIAN_NB = "gaussian_nb"
    EXTERNAL = "external"


class TrainingError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class Prediction:
    bug_id: int
    priority: Priority
    scores: tuple[float, ...]
    topic: int | None = None


def _argmax_priority(scores: np.ndarray) -> Priority:
    # np.argmax returns the first maximum, which is the P1-first tie-break
    return PRIORITY_LEVELS[int(np.argmax(scores))]


def _label_indices(labels: Sequence[Priority]) -> np.ndarray:
    if any(l is Priority.UNKNOWN for l in labels):
        raise TrainingError("UNKNOWN priority labels are not trainable")
    return np.fromiter((PRIORITY_INDEX[l] for l in labels), dtype=np.int64)


@dataclass(frozen=True)
class MultinomialNbModel:
    """log priors (5,) and Laplace-smoothed log likelihoods (5, V).

    Classes absent from training keep a -inf log prior so they can never
    win the arg-max; their likelihood rows are uniform placeholders.
    """

    log_prior: np.ndarray
    log_likelihood: np.ndarray
    laplace: float
    vocab_size: int

    def predict(self, vector: CountVector, bug_id: int = -1) -> Prediction:
        scores = self.log_prior.copy()
        for index, count in vector.pairs:
            scores += count * self.log_likelihood[:, index]
        return Prediction(bug_id=bug_id, priority=_argmax_priority(scores), scores=tuple(scores))


def train_multinomial_nb(
    vectors: Sequence[CountVector],
    labels: Sequence[Priority],
    laplace: float = 1.0,
    vocab_size: int | None = None,
) -> MultinomialNbModel:
    if not vectors:
        raise TrainingError("no training examples")
    if len(vectors) != len(labels):
        raise TrainingError("vectors and labels must align")
    if laplace <= 0:
        raise TrainingError("laplace smoothing must be > 0")
    if vocab_size is None:
        vocab_size = 1 + max((i for v in vectors for i, _ in v.pairs), default=0)

    y = _label_indices(labels)
    class_counts = np.bincount(y, minlength=N_CLASSES).astype(np.float64)
    token_counts = np.zeros((N_CLASSES, vocab_size), dtype=np.float64)
    for vec, cls in zip(vectors, y):
        for index, count in vec.pairs:
            token_counts[cls, index] += count

    with np.errstate(divide="ignore"):
        log_prior = np.log(class_counts / len(vectors))
    class_totals = token_counts.sum(axis=1)
    log_likelihood = np.log(
        (token_counts + laplace) / (class_totals[:, None] + laplace * vocab_size)
    )
    # absent classes never score; keep their rows a proper uniform distribution
    absent = class_counts == 0
    log_likelihood[absent] = -np.log(vocab_size)
    return MultinomialNbModel(
        log_prior=log_prior,
        log_likelihood=log_likelihood,
        laplace=laplace,
        vocab_size=vocab_size,
    )


@dataclass(frozen=True)
class GaussianNbModel:
    """Per-class feature means/variances over dense counts, variance floored."""

    log_prior: np.ndarray
    means: np.ndarray       # (5, V)
    variances: np.ndarray   # (5, V), all >= variance_floor
    variance_floor: float
    vocab_size: int

    def predict(self, vector: CountVector, bug_id: int = -1) -> Prediction:
        x = vector.to_dense(self.vocab_size)
        log_density = -0.5 * (
            np.log(2.0 * np.pi * self.variances) + (x - self.means) ** 2 / self.variances
        ).sum(axis=1)
        scores = self.log_prior + log_density
        return Prediction(bug_id=bug_id, priority=_argmax_priority(scores), scores=tuple(scores))


def train_gaussian_nb(
    vectors: Sequence[CountVector],
    labels: Sequence[Priority],
    variance_floor: float | None = None,
    vocab_size: int | None = None,
) -> GaussianNbModel:
    """Means and variances per class; ``variance_floor=None`` derives the
    floor as 1e-9 times the largest per-class feature variance (min 1e-12)."""
    if not vectors:
        raise TrainingError("no training examples")
    if len(vectors) != len(labels):
        raise TrainingError("vectors and labels must align")
    if vocab_size is None:
        vocab_size = 1 + max((i for v in vectors for i, _ in v.pairs), default=0)

    y = _label_indices(labels)
    x = np.vstack([v.to_dense(vocab_size) for v in vectors])
    class_counts = np.bincount(y, minlength=N_CLASSES).astype(np.float64)

    means = np.zeros((N_CLASSES, vocab_size))
    variances = np.zeros((N_CLASSES, vocab_size))
    for cls in range(N_CLASSES):
        rows = x[y == cls]
        if len(rows):
            means[cls] = rows.mean(axis=0)
            variances[cls] = rows.var(axis=0)

    if variance_floor is None:
        max_var = float(variances.max(initial=0.0))
        variance_floor = max(1e-9 * max_var, 1e-12)
    if variance_floor <= 0:
        raise TrainingError("variance_floor must be > 0")
    variances = np.maximum(variances, variance_floor)
    # give absent classes unit variance so their (unused) densities stay finite
    variances[class_counts == 0] = 1.0

    with np.errstate(divide="ignore"):
        log_prior = np.log(class_counts / len(vectors))
    return GaussianNbModel(
        log_prior=log_prior,
        means=means,
        variances=variances,
        variance_floor=variance_floor,
        vocab_size=vocab_size,
    )


NbModel = MultinomialNbModel | GaussianNbModel


def predict(model: NbModel, vector: CountVector, bug_id: int = -1) -> Prediction:
    """Arg-max of the log-posterior; an empty vector falls back to the priors."""
    return model.predict(vector, bug_id=bug_id)


class TextClassifier(Protocol):
    """Per-topic text-based classifier plugged in via the bridge."""

    def predict_text(self, topic: int, bug_id: int, text: str) -> Prediction: ...


def classifier_text(report: BugReport) -> str:
    """Raw field concatenation sent to external classifiers (no preprocessing)."""
    return "\n".join((report.summary, report.description, report.component))


@dataclass(frozen=True)
class TopicRoutedClassifier:
    """Map from topic id to classifier, total via the pooled fallback."""

    kind: ClassifierKind
    topics: int
    per_topic: dict[int, NbModel]
    fallback: NbModel | None
    min_topic_size: int
    external: TextClassifier | None = None

    def resolve(self, topic: int) -> NbModel | None:
        if not 0 <= topic < self.topics:
            raise ValueError(f"topic {topic} out of range 0..{self.topics - 1}")
        return self.per_topic.get(topic, self.fallback)

    def uses_fallback(self, topic: int) -> bool:
        return topic not in self.per_topic


def train_topic_routed(
    topic_ids: Sequence[int],
    vectors: Sequence[CountVector],
    labels: Sequence[Priority],
    kind: ClassifierKind,
    topics: int,
    min_topic_size: int = 25,
    laplace: float = 1.0,
    variance_floor: float | None = None,
    vocab_size: int | None = None,
    external: TextClassifier | None = None,
) -> TopicRoutedClassifier:
    """Train one classifier per sufficiently populated topic plus the fallback.

    For the external kind the worker owns per-topic training; this router
    only records the delegate, and the caller drives the remote training
    through the bridge.
    """
    if not (len(topic_ids) == len(vectors) == len(labels)):
        raise TrainingError("topic_ids, vectors, and labels must align")
    if not vectors:
        raise TrainingError("no training data")

    if kind is ClassifierKind.EXTERNAL:
        if external is None:
            raise TrainingError("external kind requires a text classifier delegate")
        return TopicRoutedClassifier(
            kind=kind,
            topics=topics,
            per_topic={},
            fallback=None,
            min_topic_size=min_topic_size,
            external=external,
        )

    if vocab_size is None:
        vocab_size = 1 + max((i for v in vectors for i, _ in v.pairs), default=0)

    def fit(vecs: Sequence[CountVector], labs: Sequence[Priority]) -> NbModel:
        if kind is ClassifierKind.MULTINOMIAL_NB:
            return train_multinomial_nb(vecs, labs, laplace=laplace, vocab_size=vocab_size)
        return train_gaussian_nb(
            vecs, labs, variance_floor=variance_floor, vocab_size=vocab_size
        )

    by_topic: dict[int, list[int]] = {}
    for row, topic in enumerate(topic_ids):
        by_topic.setdefault(int(topic), []).append(row)

    per_topic: dict[int, NbModel] = {}
    for topic, rows in sorted(by_topic.items()):
        if len(rows) >= min_topic_size:
            per_topic[topic] = fit([vectors[r] for r in rows], [labels[r] for r in rows])
    fallback = fit(vectors, labels)
    return TopicRoutedClassifier(
        kind=kind,
        topics=topics,
        per_topic=per_topic,
        fallback=fallback,
        min_topic_size=min_topic_size,
    )


def predict_routed(
    router: TopicRoutedClassifier,
    lda_model: LdaModel,
    vocab: Vocabulary,
    report: BugReport,
    tokenizer_config: TokenizerConfig,
) -> Prediction:
    """tokenize -> vectorize -> topic inference -> route -> classify."""
    vector = vectorize(tokenize(report, tokenizer_config), vocab)
    theta = infer_theta(lda_model, vector)
    topic = assign_topic(theta)
    if router.kind is ClassifierKind.EXTERNAL:
        assert router.external is not None
        result = router.external.predict_text(topic, report.bug_id, classifier_text(report))
        return Prediction(
            bug_id=report.bug_id, priority=result.priority, scores=result.scores, topic=topic
        )
    model = router.resolve(topic)
    assert model is not None
    result = model.predict(vector, bug_id=report.bug_id)
    return Prediction(
        bug_id=report.bug_id, priority=result.priority, scores=result.scores, topic=topic
    )


def save_router(router: TopicRoutedClassifier, path, vocab_hash: str, lda_hash: str) -> None:
    """Versioned npz container: kind, parameters, and pipeline content hashes."""
    if router.kind is ClassifierKind.EXTERNAL:
        raise TrainingError("external classifiers live in the worker; nothing to save")
    header = {
        "format": CLASSIFIER_FORMAT,
        "kind": router.kind.value,
        "topics": router.topics,
        "min_topic_size": router.min_topic_size,
        "topic_ids": sorted(router.per_topic),
        "vocab_hash": vocab_hash,
        "lda_hash": lda_hash,
    }
    arrays: dict[str, np.ndarray] = {}

    def pack(name: str, model: NbModel) -> None:
        arrays[f"{name}_log_prior"] = model.log_prior
        if isinstance(model, MultinomialNbModel):
            arrays[f"{name}_log_likelihood"] = model.log_likelihood
            arrays[f"{name}_meta"] = np.array([model.laplace, model.vocab_size])
        else:
            arrays[f"{name}_means"] = model.means
            arrays[f"{name}_variances"] = model.variances
            arrays[f"{name}_meta"] = np.array([model.variance_floor, model.vocab_size])

    assert router.fallback is not None
    pack("fallback", router.fallback)
    for topic, model in router.per_topic.items():
        pack(f"topic_{topic}", model)

    with open(path, "wb") as fh:
        np.savez(
            fh,
            header=np.frombuffer(
                json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
            ),
            **arrays,
        )


def load_router(path, expect_vocab_hash: str | None = None, expect_lda_hash: str | None = None
                ) -> TopicRoutedClassifier:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode("utf-8"))
        if header.get("format") != CLASSIFIER_FORMAT:
            raise TrainingError(f"unsupported classifier format {header.get('format')!r}")
        if expect_vocab_hash is not None and header["vocab_hash"] != expect_vocab_hash:
            raise TrainingError("vocabulary hash mismatch; refusing to load")
        if expect_lda_hash is not None and header["lda_hash"] != expect_lda_hash:
            raise TrainingError("topic-model hash mismatch; refusing to load")
        kind = ClassifierKind(header["kind"])

        def unpack(name: str) -> NbModel:
            meta = data[f"{name}_meta"]
            if kind is ClassifierKind.MULTINOMIAL_NB:
                return MultinomialNbModel(
                    log_prior=data[f"{name}_log_prior"],
                    log_likelihood=data[f"{name}_log_likelihood"],
                    laplace=float(meta[0]),
                    vocab_size=int(meta[1]),
                )
            return GaussianNbModel(
                log_prior=data[f"{name}_log_prior"],
                means=data[f"{name}_means"],
                variances=data[f"{name}_variances"],
                variance_floor=float(meta[0]),
                vocab_size=int(meta[1]),
            )

        return TopicRoutedClassifier(
            kind=kind,
            topics=header["topics"],
            per_topic={t: unpack(f"topic_{t}") for t in header["topic_ids"]},
            fallback=unpack("fallback"),
            min_topic_size=header["min_topic_size"],
        )
