"""Latent topic modeling by collapsed Gibbs sampling.

The sampler integrates out the document-topic and topic-word distributions
and resamples per-token topic labels from the count-based conditional

    p(z = k) ~ (n_dk + alpha) * (n_kw + beta) / (n_k + V * beta)

where all counts exclude the token being resampled. Point estimates are
posterior means over post-burn-in count snapshots taken every
``sample_every`` sweeps. The sweep loop is JIT-compiled; randomness comes
from an inline splitmix64 stream so a chain is fully determined by its seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._rng import rng_double
from .textprep import BowCorpus, Vocabulary


@njit(cache=True)
def _gibbs_train(doc_ids, word_ids, n_docs, vocab_size, n_topics,
                 alpha, beta, iterations, burn_in, sample_every, seed):
    n_tokens = doc_ids.shape[0]
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed

    z = np.empty(n_tokens, dtype=np.int32)
    ndk = np.zeros((n_docs, n_topics), dtype=np.int32)
    nkw = np.zeros((n_topics, vocab_size), dtype=np.int32)
    nk = np.zeros(n_topics, dtype=np.int64)
    for t in range(n_tokens):
        topic = int(rng_double(state) * n_topics)
        if topic >= n_topics:
            topic = n_topics - 1
        z[t] = topic
        ndk[doc_ids[t], topic] += 1
        nkw[topic, word_ids[t]] += 1
        nk[topic] += 1

    ndk_sum = np.zeros((n_docs, n_topics), dtype=np.float64)
    nkw_sum = np.zeros((n_topics, vocab_size), dtype=np.float64)
    n_samples = 0
    loglik = np.empty(iterations, dtype=np.float64)
    p = np.empty(n_topics, dtype=np.float64)
    vbeta = vocab_size * beta
    kalpha = n_topics * alpha

    for sweep in range(iterations):
        for t in range(n_tokens):
            d = doc_ids[t]
            w = word_ids[t]
            old = z[t]
            ndk[d, old] -= 1
            nkw[old, w] -= 1
            nk[old] -= 1

            total = 0.0
            for j in range(n_topics):
                pj = (ndk[d, j] + alpha) * (nkw[j, w] + beta) / (nk[j] + vbeta)
                p[j] = pj
                total += pj
            r = rng_double(state) * total
            acc = 0.0
            new = n_topics - 1
            for j in range(n_topics):
                acc += p[j]
                if r < acc:
                    new = j
                    break

            z[t] = new
            ndk[d, new] += 1
            nkw[new, w] += 1
            nk[new] += 1

        total_assigned = 0
        for j in range(n_topics):
            total_assigned += nk[j]
        if total_assigned != n_tokens:
            raise ValueError("token count not conserved across a Gibbs sweep")

        # complete-data log p(w, z) from the current counts
        ll = n_topics * (math.lgamma(vbeta) - vocab_size * math.lgamma(beta))
        for j in range(n_topics):
            s = 0.0
            for w in range(vocab_size):
                s += math.lgamma(nkw[j, w] + beta)
            ll += s - math.lgamma(nk[j] + vbeta)
        ll += n_docs * (math.lgamma(kalpha) - n_topics * math.lgamma(alpha))
        for d in range(n_docs):
            s = 0.0
            nd = 0
            for j in range(n_topics):
                s += math.lgamma(ndk[d, j] + alpha)
                nd += ndk[d, j]
            ll += s - math.lgamma(nd + kalpha)
        loglik[sweep] = ll

        if sweep >= burn_in and (sweep - burn_in) % sample_every == 0:
            for d in range(n_docs):
                for j in range(n_topics):
                    ndk_sum[d, j] += ndk[d, j]
            for j in range(n_topics):
                for w in range(vocab_size):
                    nkw_sum[j, w] += nkw[j, w]
            n_samples += 1

    return z, ndk_sum, nkw_sum, n_samples, loglik


@njit(cache=True)
def _gibbs_fold_in(word_ids, phi, alpha, iterations, burn_in, sample_every, seed):
    """Sample topics for one held-out document against a frozen topic-word table."""
    n_topics = phi.shape[0]
    n_tokens = word_ids.shape[0]
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed

    z = np.empty(n_tokens, dtype=np.int32)
    nk = np.zeros(n_topics, dtype=np.int32)
    for t in range(n_tokens):
        topic = int(rng_double(state) * n_topics)
        if topic >= n_topics:
            topic = n_topics - 1
        z[t] = topic
        nk[topic] += 1

    nk_sum = np.zeros(n_topics, dtype=np.float64)
    n_samples = 0
    p = np.empty(n_topics, dtype=np.float64)
    for sweep in range(iterations):
        for t in range(n_tokens):
            w = word_ids[t]
            nk[z[t]] -= 1
            total = 0.0
            for j in range(n_topics):
                pj = (nk[j] + alpha) * phi[j, w]
                p[j] = pj
                total += pj
            r = rng_double(state) * total
            acc = 0.0
            new = n_topics - 1
            for j in range(n_topics):
                acc += p[j]
                if r < acc:
                    new = j
                    break
            z[t] = new
            nk[new] += 1
        if sweep >= burn_in and (sweep - burn_in) % sample_every == 0:
            for j in range(n_topics):
                nk_sum[j] += nk[j]
            n_samples += 1
    return nk_sum, n_samples


@dataclass(frozen=True)
class LdaConfig:
    """Sampler settings; ``seed`` fully determines the chain."""

    n_topics: int
    alpha: float = 0.1
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    sample_every: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_topics < 2:
            raise ValueError("n_topics must be >= 2")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


def _expand_tokens(corpus: BowCorpus) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    doc_ids, word_ids = [], []
    doc_len = np.zeros(len(corpus), dtype=np.int64)
    for d, (_, bow) in enumerate(corpus.docs):
        for w, c in bow:
            doc_ids.extend([d] * c)
            word_ids.extend([w] * c)
            doc_len[d] += c
    return (
        np.asarray(doc_ids, dtype=np.int32),
        np.asarray(word_ids, dtype=np.int32),
        doc_len,
    )


class GibbsLda(TransformerMixin, BaseEstimator):
    """Collapsed-Gibbs LDA estimator over a :class:`BowCorpus`.

    Fitted attributes
    -----------------
    topic_word_ : (n_topics, V) row-stochastic array (alias ``components_``)
    doc_topic_ : (D, n_topics) row-stochastic array
    assignments_ : final per-token topic labels
    log_likelihood_ : complete-data log likelihood per sweep
    """

    def __init__(self, n_topics=10, alpha=0.1, beta=0.01, iterations=1000,
                 burn_in=200, sample_every=10, seed=0):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.iterations = iterations
        self.burn_in = burn_in
        self.sample_every = sample_every
        self.seed = seed

    @classmethod
    def from_config(cls, config: LdaConfig) -> "GibbsLda":
        return cls(**asdict(config))

    @property
    def config(self) -> LdaConfig:
        return LdaConfig(**self.get_params())

    def fit(self, X: BowCorpus, y=None):
        config = self.config  # validates parameters
        if not isinstance(X, BowCorpus):
            raise TypeError("GibbsLda.fit expects a BowCorpus")
        if len(X) == 0 or X.n_tokens == 0:
            raise ValueError("empty corpus")

        doc_ids, word_ids, doc_len = _expand_tokens(X)
        z, ndk_sum, nkw_sum, n_samples, loglik = _gibbs_train(
            doc_ids, word_ids, len(X), len(X.vocab), config.n_topics,
            float(config.alpha), float(config.beta),
            config.iterations, config.burn_in, config.sample_every,
            np.uint64(config.seed),
        )
        ndk_mean = ndk_sum / n_samples
        nkw_mean = nkw_sum / n_samples
        nk_mean = nkw_mean.sum(axis=1)

        self.vocabulary_: Vocabulary = X.vocab
        self.doc_ids_ = tuple(rid for rid, _ in X.docs)
        self.topic_word_ = (nkw_mean + config.beta) / (
            nk_mean + len(X.vocab) * config.beta
        )[:, None]
        self.doc_topic_ = (ndk_mean + config.alpha) / (
            doc_len + config.n_topics * config.alpha
        )[:, None]
        self.assignments_ = np.asarray(z, dtype=np.int32)
        self.log_likelihood_ = np.asarray(loglik)
        self.n_samples_ = int(n_samples)
        return self

    @property
    def components_(self) -> np.ndarray:
        return self.topic_word_

    def _check_fitted(self) -> None:
        if not hasattr(self, "topic_word_"):
            raise NotFittedError("GibbsLda is not fitted")

    def fit_transform(self, X: BowCorpus, y=None) -> np.ndarray:
        return self.fit(X).doc_topic_.copy()

    def transform(self, X: BowCorpus) -> np.ndarray:
        """Fold-in inference: document-topic mixtures for unseen documents.

        Topic-word probabilities stay frozen at their fitted values; each
        document runs its own short chain seeded from (seed, doc index).
        """
        self._check_fitted()
        config = self.config
        if X.vocab.words != self.vocabulary_.words:
            raise ValueError("corpus vocabulary differs from the fitted vocabulary")
        theta = np.empty((len(X), config.n_topics))
        for d, (_, bow) in enumerate(X.docs):
            word_ids = np.asarray(
                [w for w, c in bow for _ in range(c)], dtype=np.int32
            )
            if word_ids.size == 0:
                theta[d] = 1.0 / config.n_topics
                continue
            doc_seed = np.uint64((config.seed * 1_000_003 + d + 1) % (2**63))
            nk_sum, n_samples = _gibbs_fold_in(
                word_ids, self.topic_word_, float(config.alpha),
                config.iterations, config.burn_in, config.sample_every, doc_seed,
            )
            nk_mean = nk_sum / n_samples
            theta[d] = (nk_mean + config.alpha) / (
                word_ids.size + config.n_topics * config.alpha
            )
        return theta

    def doc_topic_dist(self, doc_index: int) -> np.ndarray:
        """The fitted topic mixture of one document (sums to 1)."""
        self._check_fitted()
        if not 0 <= doc_index < self.doc_topic_.shape[0]:
            raise IndexError(f"document index out of range: {doc_index}")
        return self.doc_topic_[doc_index].copy()

    def top_words(self, topic: int, n: int) -> list[tuple[str, float]]:
        """The n most probable words of a topic, ties broken alphabetically."""
        self._check_fitted()
        if not 0 <= topic < self.topic_word_.shape[0]:
            raise IndexError(f"topic out of range: {topic}")
        row = self.topic_word_[topic]
        ranked = sorted(zip(self.vocabulary_.words, row), key=lambda p: (-p[1], p[0]))
        return [(w, float(p)) for w, p in ranked[: max(n, 0)]]

    def salience(self, topic: int) -> float:
        """Sum of the topic's top-10 word probabilities."""
        return float(sum(p for _, p in self.top_words(topic, 10)))

    def topic_shares(self) -> np.ndarray:
        """Mean document-topic mixture as percentages summing to 100."""
        self._check_fitted()
        return self.doc_topic_.mean(axis=0) * 100.0

    def save(self, path: str | Path) -> None:
        """Serialize config, vocabulary, and fitted arrays to JSON."""
        self._check_fitted()
        payload = {
            "config": asdict(self.config),
            "vocabulary": {
                "words": list(self.vocabulary_.words),
                "counts": list(self.vocabulary_.counts),
            },
            "doc_ids": list(self.doc_ids_),
            "topic_word": self.topic_word_.tolist(),
            "doc_topic": self.doc_topic_.tolist(),
            "assignments": self.assignments_.tolist(),
            "log_likelihood": self.log_likelihood_.tolist(),
            "n_samples": self.n_samples_,
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GibbsLda":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        config = LdaConfig(**payload["config"])
        est = cls.from_config(config)
        words = tuple(payload["vocabulary"]["words"])
        est.vocabulary_ = Vocabulary(
            words=words,
            index={w: i for i, w in enumerate(words)},
            counts=tuple(payload["vocabulary"]["counts"]),
        )
        est.doc_ids_ = tuple(payload["doc_ids"])
        est.topic_word_ = np.asarray(payload["topic_word"], dtype=np.float64)
        est.doc_topic_ = np.asarray(payload["doc_topic"], dtype=np.float64)
        est.assignments_ = np.asarray(payload["assignments"], dtype=np.int32)
        est.log_likelihood_ = np.asarray(payload["log_likelihood"], dtype=np.float64)
        est.n_samples_ = int(payload["n_samples"])
        return est
