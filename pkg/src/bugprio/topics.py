"""Latent Dirichlet Allocation by collapsed Gibbs sampling.

The sampler keeps the standard count state (topic-word counts, topic
totals, per-document topic counts) and resamples every token's topic
assignment from

    p(z = k)  propto  (N_kw + beta) / (N_k + V*beta) * (n_dk + alpha)

Topic-word and document-topic distributions are estimated from the final
sample's counts, which keeps fitting deterministic for a fixed seed.
Held-out documents are inferred with the trained topic-word counts held
fixed.  Count conservation (sum of topic totals == corpus token count)
holds exactly after every sweep and is recorded per sweep alongside the
corpus log-likelihood.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .textprep import CountVector, Vocabulary

MODEL_FORMAT = "lda-gibbs/1"


class LdaError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class LdaConfig:
    topics: int = 10
    alpha: float | None = None  # None -> 50 / topics
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    inference_iterations: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.topics < 2:
            raise ValueError("topics must be >= 2")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")
        if self.inference_iterations < 1:
            raise ValueError("inference_iterations must be >= 1")

    @property
    def effective_alpha(self) -> float:
        return 50.0 / self.topics if self.alpha is None else self.alpha


@dataclass(frozen=True, slots=True)
class TopicAssignment:
    bug_id: int
    topic: int
    theta: tuple[float, ...]


@dataclass(frozen=True)
class LdaModel:
    """Fitted topic model: count state plus per-training-document mixtures."""

    config: LdaConfig
    vocab_size: int
    vocab_hash: str
    topic_word: np.ndarray      # (K, V) int64 counts
    topic_totals: np.ndarray    # (K,) int64
    doc_topic: np.ndarray       # (D, K) float64, rows on the simplex
    ll_history: tuple[float, ...] = field(default=(), repr=False)
    count_history: tuple[int, ...] = field(default=(), repr=False)

    @property
    def topics(self) -> int:
        return self.config.topics

    def topic_word_dist(self) -> np.ndarray:
        """Smoothed per-topic word distributions; each row sums to 1."""
        beta = self.config.beta
        num = self.topic_word + beta
        den = self.topic_totals[:, None] + self.vocab_size * beta
        return num / den

    def top_words(self, vocab: Vocabulary, n: int = 10) -> list[list[str]]:
        dist = self.topic_word_dist()
        out = []
        for k in range(self.topics):
            order = np.argsort(-dist[k])[:n]
            out.append([vocab.index_to_token[i] for i in order])
        return out


def vocabulary_hash(vocab: Vocabulary) -> str:
    """Content hash tying models to the exact vocabulary they were built on."""
    h = hashlib.sha256()
    for index, token in enumerate(vocab.index_to_token):
        h.update(f"{index}\t{token}\t{vocab.doc_freq[index]}\n".encode("utf-8"))
    return h.hexdigest()


def _expand_tokens(vector: CountVector) -> list[int]:
    """Flatten a count vector into a word-id stream (repeats by count)."""
    words: list[int] = []
    for index, count in vector.pairs:
        words.extend([index] * count)
    return words


def fit_lda(
    vectors: Sequence[CountVector],
    config: LdaConfig,
    vocab: Vocabulary,
) -> LdaModel:
    """Fit by collapsed Gibbs sampling; deterministic for a fixed seed.

    The sampler state lives in plain Python lists: the per-token resampling
    step is inherently sequential and scalar arithmetic beats small-vector
    numpy calls there by a wide margin.  Counts are converted to arrays at
    the boundary.
    """
    if not vectors:
        raise LdaError("cannot fit on an empty corpus")
    v_size = vocab.size
    if v_size == 0:
        raise LdaError("cannot fit with an empty vocabulary")
    k = config.topics
    alpha = config.effective_alpha
    beta = config.beta
    v_beta = v_size * beta

    docs = [_expand_tokens(vec) for vec in vectors]
    total_tokens = sum(len(d) for d in docs)
    rng = np.random.default_rng(config.seed)
    rand = rng.random

    n_wk = [[0.0] * k for _ in range(v_size)]
    n_k = [0.0] * k
    n_dk = [[0.0] * k for _ in range(len(docs))]
    assignments: list[list[int]] = []
    for d, words in enumerate(docs):
        z = rng.integers(0, k, size=len(words)).tolist()
        assignments.append(z)
        doc_counts = n_dk[d]
        for word, topic in zip(words, z):
            n_wk[word][topic] += 1.0
            n_k[topic] += 1.0
            doc_counts[topic] += 1.0

    ll_history: list[float] = []
    count_history: list[int] = []
    probs = [0.0] * k
    for _ in range(config.iterations):
        for d, words in enumerate(docs):
            z = assignments[d]
            doc_counts = n_dk[d]
            for i, w in enumerate(words):
                old = z[i]
                row = n_wk[w]
                row[old] -= 1.0
                n_k[old] -= 1.0
                doc_counts[old] -= 1.0

                total = 0.0
                for t in range(k):
                    p = (row[t] + beta) * (doc_counts[t] + alpha) / (n_k[t] + v_beta)
                    probs[t] = p
                    total += p
                r = rand() * total
                acc = 0.0
                new = k - 1
                for t in range(k):
                    acc += probs[t]
                    if r < acc:
                        new = t
                        break

                z[i] = new
                row[new] += 1.0
                n_k[new] += 1.0
                doc_counts[new] += 1.0
        count_history.append(int(sum(n_k)))
        ll_history.append(_corpus_log_likelihood(docs, n_wk, n_k, n_dk, alpha, beta, v_beta))

    topic_word = np.asarray(n_wk, dtype=np.float64).T
    topic_totals = np.asarray(n_k, dtype=np.float64)
    doc_counts_arr = np.asarray(n_dk, dtype=np.float64)
    doc_lengths = doc_counts_arr.sum(axis=1, keepdims=True)
    doc_topic = (doc_counts_arr + alpha) / (doc_lengths + k * alpha)

    model = LdaModel(
        config=config,
        vocab_size=v_size,
        vocab_hash=vocabulary_hash(vocab),
        topic_word=topic_word.astype(np.int64),
        topic_totals=topic_totals.astype(np.int64),
        doc_topic=doc_topic,
        ll_history=tuple(ll_history),
        count_history=tuple(count_history),
    )
    assert model.count_history[0] == total_tokens
    return model


def _corpus_log_likelihood(
    docs: Sequence[Sequence[int]],
    n_wk: list[list[float]],
    n_k: list[float],
    n_dk: list[list[float]],
    alpha: float,
    beta: float,
    v_beta: float,
) -> float:
    """log p(w | current counts) under the smoothed mixture estimates."""
    phi = (np.asarray(n_wk).T + beta) / (np.asarray(n_k)[:, None] + v_beta)
    counts = np.asarray(n_dk)
    doc_lengths = counts.sum(axis=1, keepdims=True)
    theta = (counts + alpha) / (doc_lengths + counts.shape[1] * alpha)
    total = 0.0
    for d, words in enumerate(docs):
        if words:
            total += float(np.log(theta[d] @ phi[:, words]).sum())
    return total


def infer_theta(
    model: LdaModel,
    vector: CountVector,
    iterations: int | None = None,
    seed: int | None = None,
) -> np.ndarray:
    """Topic mixture for a held-out document, trained counts held fixed.

    A fresh generator seeded from the model config makes repeated calls on
    the same document reproduce the same mixture.  An empty document falls
    back to the uniform prior.
    """
    k = model.topics
    words = _expand_tokens(vector)
    if not words:
        return np.full(k, 1.0 / k)

    alpha = model.config.effective_alpha
    beta = model.config.beta
    v_beta = model.vocab_size * beta
    sweeps = model.config.inference_iterations if iterations is None else iterations
    rng = np.random.default_rng(model.config.seed if seed is None else seed)
    rand = rng.random

    # fixed trained factor: p(w | k) up to the shared smoothing constant
    phi_w = (
        (model.topic_word[:, words] + beta) / (model.topic_totals[:, None] + v_beta)
    ).T.tolist()

    z = rng.integers(0, k, size=len(words)).tolist()
    local = [0.0] * k
    for topic in z:
        local[topic] += 1.0
    probs = [0.0] * k
    for _ in range(sweeps):
        for i in range(len(words)):
            old = z[i]
            local[old] -= 1.0
            col = phi_w[i]
            total = 0.0
            for t in range(k):
                p = col[t] * (local[t] + alpha)
                probs[t] = p
                total += p
            r = rand() * total
            acc = 0.0
            new = k - 1
            for t in range(k):
                acc += probs[t]
                if r < acc:
                    new = t
                    break
            z[i] = new
            local[new] += 1.0
    return (np.asarray(local) + alpha) / (len(words) + k * alpha)


def assign_topic(theta: Sequence[float]) -> int:
    """Arg-max topic with ties broken toward the lowest index."""
    arr = np.asarray(theta, dtype=np.float64)
    if abs(float(arr.sum()) - 1.0) > 1e-6:
        raise LdaError(f"theta sums to {float(arr.sum())!r}, not 1")
    return int(np.argmax(arr))


def assign_topics(
    model: LdaModel, bug_ids: Sequence[int], vectors: Sequence[CountVector]
) -> list[TopicAssignment]:
    """Dominant training-time topic per document, from the fitted mixtures."""
    if len(bug_ids) != len(vectors) or len(bug_ids) != model.doc_topic.shape[0]:
        raise LdaError("bug_ids, vectors, and fitted documents must align")
    out = []
    for d, bug_id in enumerate(bug_ids):
        theta = model.doc_topic[d]
        out.append(
            TopicAssignment(bug_id=bug_id, topic=assign_topic(theta), theta=tuple(theta))
        )
    return out


def topic_histogram(assignments: Sequence[TopicAssignment | int], topics: int) -> list[int]:
    counts = [0] * topics
    for a in assignments:
        topic = a.topic if isinstance(a, TopicAssignment) else int(a)
        counts[topic] += 1
    return counts


def save_model(model: LdaModel, path) -> None:
    """Single-file persistence: JSON header plus the dense count matrices."""
    header = {
        "format": MODEL_FORMAT,
        "topics": model.config.topics,
        "vocab_size": model.vocab_size,
        "alpha": model.config.alpha,
        "beta": model.config.beta,
        "iterations": model.config.iterations,
        "burn_in": model.config.burn_in,
        "inference_iterations": model.config.inference_iterations,
        "seed": model.config.seed,
        "vocab_hash": model.vocab_hash,
    }
    with open(path, "wb") as fh:
        np.savez(
            fh,
            header=np.frombuffer(
                json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
            ),
            topic_word=model.topic_word,
            topic_totals=model.topic_totals,
            doc_topic=model.doc_topic,
        )


def load_model(path) -> LdaModel:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode("utf-8"))
        if header.get("format") != MODEL_FORMAT:
            raise LdaError(f"unsupported model format {header.get('format')!r}")
        config = LdaConfig(
            topics=header["topics"],
            alpha=header["alpha"],
            beta=header["beta"],
            iterations=header["iterations"],
            burn_in=header["burn_in"],
            inference_iterations=header["inference_iterations"],
            seed=header["seed"],
        )
        return LdaModel(
            config=config,
            vocab_size=header["vocab_size"],
            vocab_hash=header["vocab_hash"],
            topic_word=data["topic_word"],
            topic_totals=data["topic_totals"],
            doc_topic=data["doc_topic"],
        )
