"""Tokenization, shared vocabulary, and sparse count vectors.

Free-text fields are split on non-alphanumeric boundaries (Unicode-aware,
digits retained, underscores treated as separators).  Categorical fields
(product, component) become single atomic tokens carrying a field prefix so
a component named "UI" never collides with the word "ui" in a description.
Lowercasing and stop-word removal are selectable stages; no stemming or
lemmatization is applied, so "transforming" and "transformed" stay distinct.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

from .corpus import BugReport

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

#: Fields whose values are split into word tokens.
TEXT_FIELDS = ("summary", "description")
#: Fields emitted as one prefixed atomic token each.
CATEGORICAL_FIELDS = ("product", "component")

FIELD_CHOICES = TEXT_FIELDS + CATEGORICAL_FIELDS


def load_default_stopwords() -> frozenset[str]:
    """Bundled English stop-word list (one word per line)."""
    text = resources.files("bugprio").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w for w in text.split() if w)


def load_stopwords(path) -> frozenset[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(w.strip() for w in fh if w.strip())


@dataclass(frozen=True, slots=True)
class TokenizerConfig:
    lowercase: bool = True
    remove_stopwords: bool = True
    stopword_list: frozenset[str] = field(default_factory=load_default_stopwords)
    min_token_length: int = 2
    fields_used: tuple[str, ...] = ("summary", "description", "component")

    def __post_init__(self) -> None:
        if not self.fields_used:
            raise ValueError("fields_used must not be empty")
        unknown = set(self.fields_used) - set(FIELD_CHOICES)
        if unknown:
            raise ValueError(f"unknown fields: {sorted(unknown)}")
        if self.min_token_length < 1:
            raise ValueError("min_token_length must be >= 1")


def tokenize(report: BugReport, config: TokenizerConfig) -> list[str]:
    """Token stream for one report, fields in configured order.

    Stop-word matching is case-insensitive regardless of the lowercase flag;
    categorical tokens bypass both the stop list and the length threshold.
    """
    tokens: list[str] = []
    for name in config.fields_used:
        value = getattr(report, name)
        if name in CATEGORICAL_FIELDS:
            value = value.strip()
            if value:
                if config.lowercase:
                    value = value.lower()
                tokens.append(f"{name}={value}")
            continue
        for match in _TOKEN_RE.finditer(value):
            token = match.group()
            if config.lowercase:
                token = token.lower()
            if len(token) < config.min_token_length:
                continue
            if config.remove_stopwords and token.lower() in config.stopword_list:
                continue
            tokens.append(token)
    return tokens


class VocabularyError(Exception):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Bijective token/index maps over tokens with doc frequency >= min_count.

    Indices are contiguous ``0..V-1`` in lexicographic token order, which
    makes index assignment stable across runs for identical input.
    """

    token_to_index: dict[str, int]
    index_to_token: tuple[str, ...]
    doc_freq: tuple[int, ...]
    min_count: int

    @property
    def size(self) -> int:
        return len(self.index_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def __getitem__(self, token: str) -> int:
        return self.token_to_index[token]

    def to_jsonl(self, stream) -> None:
        for index, token in enumerate(self.index_to_token):
            stream.write(
                json.dumps(
                    {"token": token, "index": index, "doc_freq": self.doc_freq[index]},
                    sort_keys=True,
                )
                + "\n"
            )

    @classmethod
    def from_jsonl(cls, stream, min_count: int = 1) -> "Vocabulary":
        rows = [json.loads(line) for line in stream if line.strip()]
        rows.sort(key=lambda r: r["index"])
        tokens = tuple(r["token"] for r in rows)
        if list(r["index"] for r in rows) != list(range(len(rows))):
            raise VocabularyError("vocabulary indices are not contiguous")
        return cls(
            token_to_index={t: i for i, t in enumerate(tokens)},
            index_to_token=tokens,
            doc_freq=tuple(r["doc_freq"] for r in rows),
            min_count=min_count,
        )


def build_vocabulary(token_lists: Iterable[Sequence[str]], min_count: int = 2) -> Vocabulary:
    """Vocabulary over tokens appearing in at least ``min_count`` documents."""
    df: Counter[str] = Counter()
    for tokens in token_lists:
        df.update(set(tokens))
    kept = sorted(t for t, c in df.items() if c >= min_count)
    if not kept:
        raise VocabularyError("empty vocabulary")
    return Vocabulary(
        token_to_index={t: i for i, t in enumerate(kept)},
        index_to_token=tuple(kept),
        doc_freq=tuple(df[t] for t in kept),
        min_count=min_count,
    )


@dataclass(frozen=True, slots=True)
class CountVector:
    """Sparse term counts: (index, count) pairs with strictly increasing indices."""

    pairs: tuple[tuple[int, int], ...]
    total: int

    def __post_init__(self) -> None:
        last = -1
        running = 0
        for index, count in self.pairs:
            if index <= last:
                raise ValueError("indices must be strictly increasing and unique")
            if count < 1:
                raise ValueError("counts must be >= 1")
            last = index
            running += count
        if running != self.total:
            raise ValueError("total does not match sum of counts")

    def to_dense(self, size: int):
        import numpy as np

        dense = np.zeros(size, dtype=np.float64)
        for index, count in self.pairs:
            dense[index] = count
        return dense


EMPTY_VECTOR = CountVector(pairs=(), total=0)


def vectorize(tokens: Sequence[str], vocab: Vocabulary) -> CountVector:
    """Count in-vocabulary tokens; out-of-vocabulary tokens are dropped."""
    if vocab.size == 0:
        raise VocabularyError("vocabulary is empty")
    counts: Counter[int] = Counter()
    for token in tokens:
        index = vocab.token_to_index.get(token)
        if index is not None:
            counts[index] += 1
    pairs = tuple(sorted(counts.items()))
    return CountVector(pairs=pairs, total=sum(counts.values()))
