"""Text normalization: tokenize, lowercase, strip stopwords, lemmatize, bag-of-words.

Tokenization keeps maximal runs of Unicode letters (digits and underscores are
separators), so punctuation removal falls out of the token definition.
Lemmatization is a plain dictionary lookup with identity fallback, which keeps
the stage language-pluggable and dependency-free.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import DocumentSet

_TOKEN_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


class EmptyVocabularyError(ValueError):
    """No word survived the frequency cutoff: the corpus is unusable."""


@dataclass(frozen=True)
class PrepResources:
    """Stopword list, lemma dictionary, and the minimum surviving token length."""

    stopwords: frozenset[str] = frozenset()
    lemma_map: Mapping[str, str] = field(default_factory=dict)
    min_token_len: int = 2

    def __post_init__(self) -> None:
        for word in self.stopwords:
            if word != word.lower():
                raise ValueError(f"stopword not lowercase: {word!r}")
        for surface in self.lemma_map:
            if surface != surface.lower():
                raise ValueError(f"lemma key not lowercase: {surface!r}")
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a one-lowercase-word-per-line stopword file (UTF-8)."""
    words = set()
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            word = line.strip().lower()
            if word:
                words.add(word)
    return frozenset(words)


def load_lemmas(path: str | Path) -> dict[str, str]:
    """Read a TSV ``surface<TAB>lemma`` dictionary (UTF-8)."""
    table: dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8") as handle:
        for n, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}: bad lemma row {n}: {line!r}")
            table[parts[0].lower()] = parts[1]
    return table


def load_resources(
    stopwords_path: str | Path | None = None,
    lemmas_path: str | Path | None = None,
    min_token_len: int = 2,
) -> PrepResources:
    return PrepResources(
        stopwords=load_stopwords(stopwords_path) if stopwords_path else frozenset(),
        lemma_map=load_lemmas(lemmas_path) if lemmas_path else {},
        min_token_len=min_token_len,
    )


def preprocess(text: str, resources: PrepResources) -> list[str]:
    """Normalize one text into a lemma token list.

    Lowercase, keep letter runs only, drop stopwords (surface forms), replace
    by dictionary lemma (identity fallback), then drop tokens shorter than
    ``min_token_len``.
    """
    out = []
    for token in _TOKEN_RE.findall(text.lower()):
        if token in resources.stopwords:
            continue
        lemma = resources.lemma_map.get(token, token)
        if len(lemma) < resources.min_token_len:
            continue
        out.append(lemma)
    return out


@dataclass(frozen=True)
class TokenDoc:
    """A preprocessed review side: lemma sequence plus its review's score."""

    review_id: str
    tokens: tuple[str, ...]
    score: float


def preprocess_set(doc_set: DocumentSet, resources: PrepResources) -> list[TokenDoc]:
    """Preprocess every document of a DocumentSet, preserving order."""
    return [
        TokenDoc(review_id=rid, tokens=tuple(preprocess(text, resources)), score=score)
        for rid, text, score in doc_set.docs
    ]


@dataclass(frozen=True)
class Vocabulary:
    """Alphabetically ordered word list with a bijective word -> index map."""

    words: tuple[str, ...]
    index: Mapping[str, int]
    counts: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


def build_vocab(docs: Iterable[Sequence[str]], min_count: int = 5) -> Vocabulary:
    """Collect words with corpus frequency >= min_count, sorted lexicographically."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counter: Counter[str] = Counter()
    for doc in docs:
        counter.update(doc)
    words = sorted(w for w, c in counter.items() if c >= min_count)
    if not words:
        raise EmptyVocabularyError(
            f"no word reaches min_count={min_count}; corpus unusable"
        )
    return Vocabulary(
        words=tuple(words),
        index={w: i for i, w in enumerate(words)},
        counts=tuple(counter[w] for w in words),
    )


def to_bow(tokens: Sequence[str], vocab: Vocabulary) -> list[tuple[int, int]]:
    """Aggregate tokens into (word_index, count) pairs; OOV tokens are dropped."""
    counts: Counter[int] = Counter(
        vocab.index[t] for t in tokens if t in vocab.index
    )
    return sorted(counts.items())


@dataclass(frozen=True)
class BowCorpus:
    """Bag-of-words documents over a fixed vocabulary, aligned to review ids."""

    docs: tuple[tuple[str, tuple[tuple[int, int], ...]], ...]
    vocab: Vocabulary

    def __post_init__(self) -> None:
        v = len(self.vocab)
        for _, bow in self.docs:
            for idx, count in bow:
                if not 0 <= idx < v:
                    raise ValueError(f"word index {idx} outside vocabulary")
                if count <= 0:
                    raise ValueError("bag-of-words counts must be positive")

    def __len__(self) -> int:
        return len(self.docs)

    @property
    def n_tokens(self) -> int:
        return sum(c for _, bow in self.docs for _, c in bow)


def build_bow_corpus(token_docs: Sequence[TokenDoc], vocab: Vocabulary) -> BowCorpus:
    """Bag every TokenDoc; documents that end up empty are kept (row alignment)."""
    return BowCorpus(
        docs=tuple((doc.review_id, tuple(to_bow(doc.tokens, vocab))) for doc in token_docs),
        vocab=vocab,
    )


class TextNormalizer(TransformerMixin, BaseEstimator):
    """Stateless transformer wrapping :func:`preprocess` for pipeline use."""

    def __init__(self, resources: PrepResources | None = None):
        self.resources = resources

    def fit(self, X, y=None):
        return self

    def transform(self, X: Iterable[str]) -> list[list[str]]:
        resources = self.resources if self.resources is not None else PrepResources()
        return [preprocess(text, resources) for text in X]


class BowVectorizer(TransformerMixin, BaseEstimator):
    """Fit a Vocabulary on token documents, transform them to bag-of-words."""

    def __init__(self, min_count: int = 5):
        self.min_count = min_count

    def fit(self, X: Iterable[Sequence[str]], y=None):
        self.vocabulary_ = build_vocab(X, min_count=self.min_count)
        return self

    def transform(self, X: Iterable[Sequence[str]]) -> list[list[tuple[int, int]]]:
        if not hasattr(self, "vocabulary_"):
            raise RuntimeError("BowVectorizer must be fitted before transform")
        return [to_bow(tokens, self.vocabulary_) for tokens in X]
