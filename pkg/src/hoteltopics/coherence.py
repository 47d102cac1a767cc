"""Sliding-window topic coherence and the topic-count selection sweep.

Coherence of a topic's top words combines three stages: boolean sliding-window
occurrence probabilities, normalized pointwise mutual information (NPMI)
context vectors, and cosine confirmation of every non-empty subset of the top
words against the full set. The subset segmentation over the power set is the
default; the common singleton segmentation is available as a mode.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, replace
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed

from .lda import GibbsLda, LdaConfig
from .textprep import BowCorpus

SEGMENTATIONS = ("powerset", "one_set_singletons")


class ZeroMarginalError(ValueError):
    """A word has zero window probability; NPMI is undefined for it."""


class DegenerateTopicError(ValueError):
    """A context vector has zero norm; cosine confirmation is undefined."""


@dataclass(frozen=True)
class CoherenceConfig:
    top_n: int = 10
    window: int = 110
    gamma: float = 1.0
    epsilon: float = 1e-12
    segmentation: str = "powerset"

    def __post_init__(self) -> None:
        if self.top_n < 2:
            raise ValueError("top_n must be >= 2")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.segmentation not in SEGMENTATIONS:
            raise ValueError(f"segmentation must be one of {SEGMENTATIONS}")


@dataclass(frozen=True)
class WindowCounts:
    """Boolean sliding-window probabilities for a fixed word set."""

    word_prob: dict[str, float]
    pair_prob: dict[tuple[str, str], float]
    window_total: int

    def prob(self, word: str) -> float:
        return self.word_prob.get(word, 0.0)

    def joint(self, w1: str, w2: str) -> float:
        if w1 == w2:
            return self.prob(w1)
        key = (w1, w2) if w1 <= w2 else (w2, w1)
        return self.pair_prob.get(key, 0.0)


def window_counts(
    docs: Iterable[Sequence[str]], words: Iterable[str], window: int
) -> WindowCounts:
    """Count windows containing each word / word pair of ``words``.

    A window of ``window`` tokens slides over each document; documents shorter
    than the window contribute a single window, and zero-token documents
    contribute none.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    wordset = frozenset(words)
    word_hits: Counter[str] = Counter()
    pair_hits: Counter[tuple[str, str]] = Counter()
    total = 0

    def _accumulate(present: frozenset[str]) -> None:
        for w in present:
            word_hits[w] += 1
        for pair in combinations(sorted(present), 2):
            pair_hits[pair] += 1

    any_doc = False
    for tokens in docs:
        any_doc = True
        n = len(tokens)
        if n == 0:
            continue
        total += 1
        if n <= window:
            _accumulate(wordset.intersection(tokens))
            continue
        counts: Counter[str] = Counter(t for t in tokens[:window] if t in wordset)
        _accumulate(frozenset(counts))
        for i in range(window, n):
            out_tok, in_tok = tokens[i - window], tokens[i]
            if out_tok in wordset:
                counts[out_tok] -= 1
                if counts[out_tok] == 0:
                    del counts[out_tok]
            if in_tok in wordset:
                counts[in_tok] += 1
            total += 1
            _accumulate(frozenset(counts))

    if not any_doc:
        raise ValueError("empty corpus")
    if total == 0:
        raise ValueError("corpus has no non-empty document")
    return WindowCounts(
        word_prob={w: c / total for w, c in word_hits.items()},
        pair_prob={p: c / total for p, c in pair_hits.items()},
        window_total=total,
    )


def npmi(
    counts: WindowCounts,
    w1: str,
    w2: str,
    gamma: float = 1.0,
    epsilon: float = 1e-12,
) -> float:
    """NPMI(w1, w2)^gamma with the sign convention that perfect co-occurrence
    gives +1, independence 0, and never-co-occurring words approach -1 as
    epsilon -> 0."""
    p1, p2 = counts.prob(w1), counts.prob(w2)
    if p1 <= 0.0 or p2 <= 0.0:
        raise ZeroMarginalError(f"zero marginal probability for {w1 if p1 <= 0 else w2!r}")
    joint = counts.joint(w1, w2)
    if joint >= 1.0:
        # Pair present in every window: the epsilon offset flips the sign of
        # log(p + eps), but the exact limit of the formula is +1.
        return 1.0**gamma
    value = -math.log((joint + epsilon) / (p1 * p2)) / math.log(joint + epsilon)
    return value**gamma if gamma != 1.0 else value


def context_vector(
    counts: WindowCounts,
    subset: Iterable[str],
    words: Sequence[str],
    gamma: float = 1.0,
    epsilon: float = 1e-12,
) -> np.ndarray:
    """Sum of NPMI^gamma association from each subset member to every word.

    Additive over disjoint subsets; the j-th component refers to words[j].
    """
    subset = tuple(subset)
    if not subset:
        raise ValueError("empty subset")
    vec = np.zeros(len(words))
    for wi in subset:
        for j, wj in enumerate(words):
            vec[j] += npmi(counts, wi, wj, gamma, epsilon)
    return vec


def _npmi_matrix(counts, words, gamma, epsilon) -> np.ndarray:
    n = len(words)
    m = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            value = npmi(counts, words[i], words[j], gamma, epsilon)
            m[i, j] = value
            m[j, i] = value
    return m


def topic_coherence(
    counts: WindowCounts, words: Sequence[str], config: CoherenceConfig
) -> float:
    """Mean cosine confirmation of word subsets against the full top-word set."""
    words = tuple(words)
    n = len(words)
    if n < 2:
        raise ValueError("need at least two top words")
    if config.segmentation == "powerset" and n > 16:
        raise ValueError("power-set segmentation supports at most 16 top words")
    m = _npmi_matrix(counts, words, config.gamma, config.epsilon)
    v_full = m.sum(axis=0)
    norm_full = float(np.linalg.norm(v_full))
    if norm_full == 0.0:
        raise DegenerateTopicError("zero-norm full context vector")

    if config.segmentation == "one_set_singletons":
        vecs = m
    else:
        # Subset sums share work: v[mask] = v[mask - lowbit] + row(lowbit).
        vecs = np.empty((1 << n, n))
        vecs[0] = 0.0
        for mask in range(1, 1 << n):
            low = mask & -mask
            vecs[mask] = vecs[mask ^ low] + m[low.bit_length() - 1]
        vecs = vecs[1:]

    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateTopicError("zero-norm context vector for a word subset")
    cosines = (vecs @ v_full) / (norms * norm_full)
    return float(cosines.mean())


@dataclass(frozen=True)
class CoherenceReport:
    """Per-topic coherence; degenerate topics are NaN and listed separately."""

    per_topic: tuple[float, ...]
    mean: float
    config: CoherenceConfig
    degenerate: tuple[int, ...] = ()


def model_coherence(
    model: GibbsLda, docs: Sequence[Sequence[str]], config: CoherenceConfig
) -> CoherenceReport:
    """Coherence of every topic's top-N words over the lemmatized documents."""
    n_topics = model.topic_word_.shape[0]
    per_topic: list[float] = []
    degenerate: list[int] = []
    for topic in range(n_topics):
        top = [w for w, _ in model.top_words(topic, config.top_n)]
        counts = window_counts(docs, top, config.window)
        try:
            per_topic.append(topic_coherence(counts, top, config))
        except (DegenerateTopicError, ZeroMarginalError):
            per_topic.append(float("nan"))
            degenerate.append(topic)
    finite = [c for c in per_topic if not math.isnan(c)]
    mean = float(np.mean(finite)) if finite else float("nan")
    return CoherenceReport(
        per_topic=tuple(per_topic),
        mean=mean,
        config=config,
        degenerate=tuple(degenerate),
    )


@dataclass(frozen=True)
class SweepResult:
    """Mean/std coherence per candidate topic count; best is the argmax mean."""

    k_values: tuple[int, ...]
    mean_coherence: tuple[float, ...]
    std_coherence: tuple[float, ...]
    runs: int
    best_k: int


def select_best_k(k_values: Sequence[int], means: Sequence[float]) -> int:
    """Argmax of mean coherence; ties resolve to the smaller K."""
    if not k_values or len(k_values) != len(means):
        raise ValueError("k_values and means must be non-empty and aligned")
    pairs = sorted(zip(k_values, means), key=lambda kv: kv[0])
    best_k, best_mean = pairs[0]
    for k, mean in pairs[1:]:
        if not math.isnan(mean) and (math.isnan(best_mean) or mean > best_mean):
            best_k, best_mean = k, mean
    return best_k


def _sweep_cell(corpus, token_docs, lda_template, k, seed, coherence_config):
    config = replace(lda_template, n_topics=k, seed=seed)
    model = GibbsLda.from_config(config).fit(corpus)
    return model_coherence(model, token_docs, coherence_config).mean


def sweep_k(
    corpus: BowCorpus,
    token_docs: Sequence[Sequence[str]],
    k_values: Sequence[int],
    runs: int = 20,
    coherence_config: CoherenceConfig | None = None,
    lda_template: LdaConfig | None = None,
    base_seed: int = 0,
    n_jobs: int = 1,
) -> SweepResult:
    """Train ``runs`` chains per candidate K and score mean/std coherence.

    Run r of every K uses seed ``base_seed + r``, so each (K, run) cell is an
    independent deterministic chain and the sweep parallelizes over cells.
    Ties in the mean resolve to the smaller K.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not k_values:
        raise ValueError("k_values must be non-empty")
    k_values = tuple(sorted(set(int(k) for k in k_values)))
    coherence_config = coherence_config or CoherenceConfig()
    lda_template = lda_template or LdaConfig(n_topics=2)

    cells = [(k, run) for k in k_values for run in range(runs)]
    if n_jobs == 1:
        scores = [
            _sweep_cell(corpus, token_docs, lda_template, k, base_seed + run, coherence_config)
            for k, run in cells
        ]
    else:
        scores = Parallel(n_jobs=n_jobs)(
            delayed(_sweep_cell)(
                corpus, token_docs, lda_template, k, base_seed + run, coherence_config
            )
            for k, run in cells
        )

    by_k = np.asarray(scores, dtype=float).reshape(len(k_values), runs)
    with np.errstate(invalid="ignore"):
        means = np.nanmean(by_k, axis=1)
        stds = (
            np.nanstd(by_k, axis=1, ddof=1) if runs > 1 else np.zeros(len(k_values))
        )
    return SweepResult(
        k_values=k_values,
        mean_coherence=tuple(float(x) for x in means),
        std_coherence=tuple(float(x) for x in stds),
        runs=runs,
        best_k=select_best_k(k_values, means),
    )


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    """Export a sweep as ``K,mean,std,runs`` rows."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["K", "mean", "std", "runs"])
        for k, mean, std in zip(
            result.k_values, result.mean_coherence, result.std_coherence
        ):
            writer.writerow([k, repr(mean), repr(std), result.runs])


def read_sweep_csv(path: str | Path) -> SweepResult:
    """Load a sweep exported by :func:`write_sweep_csv`."""
    k_values, means, stds, runs = [], [], [], 1
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            k_values.append(int(row["K"]))
            means.append(float(row["mean"]))
            stds.append(float(row["std"]))
            runs = int(row["runs"])
    if not k_values:
        raise ValueError(f"empty sweep file: {path}")
    return SweepResult(
        k_values=tuple(k_values),
        mean_coherence=tuple(means),
        std_coherence=tuple(stds),
        runs=runs,
        best_k=select_best_k(k_values, means),
    )
