"""Subword chain embeddings trained with a CBOW objective.

Every word is wrapped in boundary markers and decomposed into fixed-length
character chains; a word vector is the (multiplicity-weighted) average of its
chain vectors, and a review vector the average of its word vectors. Training
predicts each token from the mean vector of its context words, either against
a full-softmax cross-entropy (tiny vocabularies, used for gradient checking)
or the negative-sampling surrogate with a unigram^0.75 noise distribution.
"""

from __future__ import annotations

import json
import math
import struct
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .textprep import Vocabulary, build_vocab

CHAIN_START = "⟨"  # left angle bracket marking word start
CHAIN_END = "⟩"
_MAGIC = b"HTEM"
_FORMAT_VERSION = 1
_MIN_LR_FACTOR = 1e-4

SOFTMAX_MODES = ("negative_sampling", "exact")


@dataclass(frozen=True)
class EmbedConfig:
    dim: int = 100
    chain_len: int = 5
    context_radius: int = 2
    epochs: int = 5
    negatives: int = 5
    lr_initial: float = 0.05
    seed: int = 0
    softmax_mode: str = "negative_sampling"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.chain_len < 2:
            raise ValueError("chain_len must be >= 2")
        if self.context_radius < 1:
            raise ValueError("context_radius must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if not self.lr_initial > 0:
            raise ValueError("lr_initial must be positive")
        if self.softmax_mode not in SOFTMAX_MODES:
            raise ValueError(f"softmax_mode must be one of {SOFTMAX_MODES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def ngram_chains(word: str, n: int) -> list[str]:
    """Contiguous n-char chains of the boundary-marked word.

    A wrapped word shorter than n yields itself as the single chain.
    """
    if not word:
        raise ValueError("empty word")
    wrapped = f"{CHAIN_START}{word}{CHAIN_END}"
    if len(wrapped) < n:
        return [wrapped]
    return [wrapped[i : i + n] for i in range(len(wrapped) - n + 1)]


@dataclass(frozen=True)
class ChainVocabulary:
    """Chain index plus each word's decomposition (unique chains, weights)."""

    chain_index: dict[str, int]
    word_chains: dict[str, tuple[np.ndarray, np.ndarray]]

    def __len__(self) -> int:
        return len(self.chain_index)


def build_chain_vocab(words: Sequence[str], chain_len: int) -> ChainVocabulary:
    chain_index: dict[str, int] = {}
    word_chains: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for word in words:
        chains = ngram_chains(word, chain_len)
        for chain in chains:
            if chain not in chain_index:
                chain_index[chain] = len(chain_index)
        idx, weights = _weighted_decomposition(chains, chain_index)
        word_chains[word] = (idx, weights)
    return ChainVocabulary(chain_index=chain_index, word_chains=word_chains)


def _weighted_decomposition(
    chains: Sequence[str], chain_index: dict[str, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Unique chain ids with multiplicity weights summing to 1 (the multiset
    average over the *known* chains becomes a weighted sum over unique ones;
    chains absent from the index are skipped)."""
    known = [chain_index[c] for c in chains if c in chain_index]
    if not known:
        return np.empty(0, dtype=np.int64), np.empty(0)
    idx, counts = np.unique(np.asarray(known, dtype=np.int64), return_counts=True)
    return idx, counts / counts.sum()


def cbow_exact_loss(
    chain_vectors: np.ndarray,
    output_vectors: np.ndarray,
    context: Sequence[tuple[np.ndarray, np.ndarray]],
    target: int,
) -> float:
    """Full-softmax cross-entropy of predicting ``target`` from the context."""
    h = _context_mean(chain_vectors, context)
    scores = output_vectors @ h
    shifted = scores - scores.max()
    log_z = math.log(np.exp(shifted).sum())
    return float(log_z - shifted[target])


def cbow_exact_grads(
    chain_vectors: np.ndarray,
    output_vectors: np.ndarray,
    context: Sequence[tuple[np.ndarray, np.ndarray]],
    target: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`cbow_exact_loss` w.r.t. both matrices."""
    h = _context_mean(chain_vectors, context)
    scores = output_vectors @ h
    shifted = scores - scores.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    err = probs.copy()
    err[target] -= 1.0

    grad_out = np.outer(err, h)
    grad_h = output_vectors.T @ err
    grad_chain = np.zeros_like(chain_vectors)
    scale = 1.0 / len(context)
    for idx, weights in context:
        grad_chain[idx] += np.outer(weights, grad_h) * scale
    return grad_chain, grad_out


def _context_mean(
    chain_vectors: np.ndarray, context: Sequence[tuple[np.ndarray, np.ndarray]]
) -> np.ndarray:
    h = np.zeros(chain_vectors.shape[1])
    for idx, weights in context:
        h += weights @ chain_vectors[idx]
    return h / len(context)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


class SubwordEmbedding(TransformerMixin, BaseEstimator):
    """CBOW subword embedding estimator.

    ``fit`` accepts token documents (sequences of lemmas). Documents are
    processed in a canonical sorted order so the result is invariant to the
    order documents arrive in; with ``workers=1`` training is fully
    deterministic given the seed. ``workers > 1`` applies gradients to shared
    matrices without locking (lost updates tolerated, statistically
    reproducible only).
    """

    def __init__(self, dim=100, chain_len=5, context_radius=2, epochs=5,
                 negatives=5, lr_initial=0.05, seed=0,
                 softmax_mode="negative_sampling", workers=1):
        self.dim = dim
        self.chain_len = chain_len
        self.context_radius = context_radius
        self.epochs = epochs
        self.negatives = negatives
        self.lr_initial = lr_initial
        self.seed = seed
        self.softmax_mode = softmax_mode
        self.workers = workers

    @classmethod
    def from_config(cls, config: EmbedConfig) -> "SubwordEmbedding":
        return cls(**asdict(config))

    @property
    def config(self) -> EmbedConfig:
        return EmbedConfig(**self.get_params())

    # -- training ----------------------------------------------------------

    def fit(self, X: Sequence[Sequence[str]], y=None):
        config = self.config
        docs = [tuple(tokens) for tokens in X]
        vocab = build_vocab(docs, min_count=1)  # raises on empty corpora
        chain_vocab = build_chain_vocab(vocab.words, config.chain_len)

        rng = np.random.default_rng(config.seed)
        chain_vectors = (rng.random((len(chain_vocab), config.dim)) - 0.5) / config.dim
        output_vectors = np.zeros((len(vocab), config.dim))

        noise = np.asarray(vocab.counts, dtype=np.float64) ** 0.75
        noise_cdf = np.cumsum(noise / noise.sum())

        word_ids = [
            np.asarray([vocab.index[t] for t in doc], dtype=np.int64) for doc in docs
        ]
        contexts = [chain_vocab.word_chains[w] for w in vocab.words]
        order = sorted(range(len(docs)), key=lambda d: docs[d])
        trainable = [d for d in order if len(docs[d]) >= 2]
        positions_per_pass = sum(len(docs[d]) for d in trainable)
        if positions_per_pass == 0:
            raise ValueError("no document offers a context window (all too short)")
        total_updates = positions_per_pass * config.epochs

        self.vocabulary_ = vocab
        self.chain_vocab_ = chain_vocab
        self.chain_vectors_ = chain_vectors
        self.output_vectors_ = output_vectors

        if config.workers == 1:
            counter = [0]
            losses = self._train_docs(
                trainable, word_ids, contexts, noise_cdf, rng,
                counter, total_updates, config,
            )
            self.loss_history_ = tuple(
                float(np.mean(epoch)) for epoch in losses
            )
        else:
            shards = [trainable[i :: config.workers] for i in range(config.workers)]
            counter = [0]
            threads = [
                threading.Thread(
                    target=self._train_docs,
                    args=(
                        shard, word_ids, contexts, noise_cdf,
                        np.random.default_rng(config.seed + 1 + w),
                        counter, total_updates, config,
                    ),
                )
                for w, shard in enumerate(shards)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            self.loss_history_ = None
        return self

    def _train_docs(self, doc_order, word_ids, contexts, noise_cdf, rng,
                    counter, total_updates, config):
        chain_vectors = self.chain_vectors_
        output_vectors = self.output_vectors_
        radius = config.context_radius
        exact = config.softmax_mode == "exact"
        n_words = output_vectors.shape[0]
        epoch_losses = []
        for _ in range(config.epochs):
            losses = []
            for d in doc_order:
                ids = word_ids[d]
                n = ids.shape[0]
                for pos in range(n):
                    lo = 0 if pos < radius else pos - radius
                    hi = min(n, pos + radius + 1)
                    ctx_ids = np.concatenate((ids[lo:pos], ids[pos + 1 : hi]))
                    if ctx_ids.size == 0:
                        continue
                    lr = config.lr_initial * max(
                        1.0 - counter[0] / total_updates, _MIN_LR_FACTOR
                    )
                    counter[0] += 1
                    ctx = [contexts[c] for c in ctx_ids]
                    target = int(ids[pos])
                    if exact:
                        losses.append(
                            self._step_exact(chain_vectors, output_vectors,
                                             ctx, target, lr)
                        )
                    else:
                        losses.append(
                            self._step_negative(chain_vectors, output_vectors,
                                                ctx, target, lr,
                                                noise_cdf, rng, n_words, config)
                        )
            epoch_losses.append(losses)
        return epoch_losses

    def _step_exact(self, chain_vectors, output_vectors, ctx, target, lr):
        loss = cbow_exact_loss(chain_vectors, output_vectors, ctx, target)
        grad_chain, grad_out = cbow_exact_grads(
            chain_vectors, output_vectors, ctx, target
        )
        chain_vectors -= lr * grad_chain
        output_vectors -= lr * grad_out
        return loss

    def _step_negative(self, chain_vectors, output_vectors, ctx, target, lr,
                       noise_cdf, rng, n_words, config):
        h = _context_mean(chain_vectors, ctx)
        negatives = []
        if n_words > 1:
            while len(negatives) < config.negatives:
                cand = int(np.searchsorted(noise_cdf, rng.random()))
                if cand != target:
                    negatives.append(cand)

        loss = 0.0
        grad_h = np.zeros_like(h)
        score = _sigmoid(float(output_vectors[target] @ h))
        loss -= math.log(max(score, 1e-12))
        g = score - 1.0
        grad_h += g * output_vectors[target]
        output_vectors[target] -= lr * g * h
        for neg in negatives:
            score = _sigmoid(float(output_vectors[neg] @ h))
            loss -= math.log(max(1.0 - score, 1e-12))
            grad_h += score * output_vectors[neg]
            output_vectors[neg] -= lr * score * h

        scale = lr / len(ctx)
        for idx, weights in ctx:
            chain_vectors[idx] -= np.outer(weights, grad_h) * scale
        return loss

    # -- composition -------------------------------------------------------

    def _check_fitted(self) -> None:
        if not hasattr(self, "chain_vectors_"):
            raise NotFittedError("SubwordEmbedding is not fitted")

    def word_vector(self, word: str) -> tuple[np.ndarray, bool]:
        """Mean of the word's known chain vectors; (zero vector, True) when no
        chain was seen in training."""
        self._check_fitted()
        cached = self.chain_vocab_.word_chains.get(word)
        if cached is None:
            chains = ngram_chains(word, self.chain_len)
            cached = _weighted_decomposition(chains, self.chain_vocab_.chain_index)
        idx, weights = cached
        if idx.size == 0:
            return np.zeros(self.chain_vectors_.shape[1]), True
        return weights @ self.chain_vectors_[idx], False

    def review_vector(self, tokens: Sequence[str]) -> tuple[np.ndarray, bool]:
        """Mean of the non-OOV word vectors; (zero vector, True) if none."""
        self._check_fitted()
        vectors = []
        for token in tokens:
            vec, oov = self.word_vector(token)
            if not oov:
                vectors.append(vec)
        if not vectors:
            return np.zeros(self.chain_vectors_.shape[1]), True
        return np.mean(vectors, axis=0), False

    def transform(self, X: Sequence[Sequence[str]]) -> np.ndarray:
        self._check_fitted()
        return np.vstack([self.review_vector(tokens)[0] for tokens in X])

    # -- serialization -----------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Binary model file (little-endian float32 matrices) + JSON sidecar."""
        self._check_fitted()
        path = Path(path)
        chains = sorted(self.chain_vocab_.chain_index, key=self.chain_vocab_.chain_index.get)
        words = self.vocabulary_.words
        with path.open("wb") as handle:
            handle.write(_MAGIC)
            handle.write(struct.pack("<B", _FORMAT_VERSION))
            handle.write(
                struct.pack("<III", self.chain_vectors_.shape[1], len(chains), len(words))
            )
            for text in (*chains, *words):
                raw = text.encode("utf-8")
                handle.write(struct.pack("<H", len(raw)))
                handle.write(raw)
            handle.write(np.ascontiguousarray(self.chain_vectors_, dtype="<f4").tobytes())
            handle.write(np.ascontiguousarray(self.output_vectors_, dtype="<f4").tobytes())
        sidecar = {
            "format_version": _FORMAT_VERSION,
            "config": asdict(self.config),
            "word_counts": list(self.vocabulary_.counts),
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(sidecar), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "SubwordEmbedding":
        path = Path(path)
        sidecar = json.loads(
            path.with_suffix(path.suffix + ".json").read_text(encoding="utf-8")
        )
        config = EmbedConfig(**sidecar["config"])
        with path.open("rb") as handle:
            if handle.read(4) != _MAGIC:
                raise ValueError(f"not a subword embedding file: {path}")
            (version,) = struct.unpack("<B", handle.read(1))
            if version != _FORMAT_VERSION:
                raise ValueError(f"unsupported model format version {version}")
            dim, n_chains, n_words = struct.unpack("<III", handle.read(12))

            def _read_text() -> str:
                (length,) = struct.unpack("<H", handle.read(2))
                return handle.read(length).decode("utf-8")

            chains = [_read_text() for _ in range(n_chains)]
            words = [_read_text() for _ in range(n_words)]
            chain_vectors = np.frombuffer(
                handle.read(4 * n_chains * dim), dtype="<f4"
            ).reshape(n_chains, dim).astype(np.float64)
            output_vectors = np.frombuffer(
                handle.read(4 * n_words * dim), dtype="<f4"
            ).reshape(n_words, dim).astype(np.float64)

        est = cls.from_config(config)
        est.vocabulary_ = Vocabulary(
            words=tuple(words),
            index={w: i for i, w in enumerate(words)},
            counts=tuple(sidecar["word_counts"]),
        )
        chain_index = {c: i for i, c in enumerate(chains)}
        est.chain_vocab_ = ChainVocabulary(
            chain_index=chain_index,
            word_chains={
                w: _weighted_decomposition(ngram_chains(w, config.chain_len), chain_index)
                for w in words
            },
        )
        est.chain_vectors_ = chain_vectors
        est.output_vectors_ = output_vectors
        est.loss_history_ = None
        return est
