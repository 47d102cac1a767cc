import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoteltopics import (
    EmbedConfig,
    SubwordEmbedding,
    cbow_exact_grads,
    cbow_exact_loss,
    ngram_chains,
)
from hoteltopics.embedding import CHAIN_END, CHAIN_START, build_chain_vocab

from oracles import numeric_gradient


def _cos(u, v):
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


class TestNgramChains:
    def test_reference_decomposition(self):
        assert ngram_chains("kindness", 5) == [
            "⟨kind", "kindn", "indne", "ndnes", "dness", "ness⟩",
        ]

    def test_short_word_single_chain(self):
        assert ngram_chains("a", 5) == [f"{CHAIN_START}a{CHAIN_END}"]

    def test_wrapped_length_equals_n(self):
        assert ngram_chains("ab", 4) == [f"{CHAIN_START}ab{CHAIN_END}"]

    def test_empty_word_rejected(self):
        with pytest.raises(ValueError):
            ngram_chains("", 5)

    @settings(max_examples=50, deadline=None)
    @given(
        st.text(alphabet="abcdefgh", min_size=1, max_size=12),
        st.integers(min_value=2, max_value=8),
    )
    def test_chain_count_formula(self, word, n):
        chains = ngram_chains(word, n)
        assert len(chains) == max(1, len(word) + 2 - n + 1)
        assert all(len(c) == n for c in chains) or len(chains) == 1


class TestComposition:
    def _tiny_model(self):
        model = SubwordEmbedding(dim=4, chain_len=5, epochs=1, seed=0)
        model.fit([["kindness", "court"], ["kindness", "court"]])
        return model

    def test_single_known_chain_returns_it_exactly(self):
        model = self._tiny_model()
        # "kind" decomposes to {<kind, kind>}; only "<kind" was trained
        idx = model.chain_vocab_.chain_index[f"{CHAIN_START}kind"]
        vec, oov = model.word_vector("kind")
        assert not oov
        np.testing.assert_array_equal(vec, model.chain_vectors_[idx])

    def test_identical_chain_vectors_average_to_same(self):
        model = self._tiny_model()
        model.chain_vectors_[:] = 3.25
        vec, _ = model.word_vector("kindness")
        np.testing.assert_allclose(vec, np.full(4, 3.25))

    def test_same_decomposition_same_vector(self):
        model = self._tiny_model()
        trained, _ = model.word_vector("kindness")
        # uncached path: drop the cache entry and recompute
        del model.chain_vocab_.word_chains["kindness"]
        recomputed, oov = model.word_vector("kindness")
        assert not oov
        np.testing.assert_allclose(recomputed, trained)

    def test_unknown_word_zero_with_flag(self):
        model = self._tiny_model()
        vec, oov = model.word_vector("zzzzzzzzzzzz")
        assert oov and not vec.any()

    def test_review_vector_composition(self):
        model = self._tiny_model()
        u, _ = model.word_vector("kindness")
        v, _ = model.word_vector("court")
        single, _ = model.review_vector(["kindness"])
        np.testing.assert_allclose(single, u)
        both, _ = model.review_vector(["kindness", "court"])
        np.testing.assert_allclose(both, (u + v) / 2.0)
        empty, oov = model.review_vector([])
        assert oov and not empty.any()
        all_oov, oov = model.review_vector(["qqqqqqqqqq"])
        assert oov and not all_oov.any()

    def test_transform_stacks_review_vectors(self):
        model = self._tiny_model()
        out = model.transform([["kindness"], ["court", "kindness"]])
        assert out.shape == (2, 4)
        np.testing.assert_allclose(out[0], model.review_vector(["kindness"])[0])


class TestExactGradients:
    def test_analytic_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        chain_vocab = build_chain_vocab(["alpha", "bravo", "ciga", "delto", "echo"], 4)
        chain_vectors = rng.normal(0, 0.3, (len(chain_vocab), 7))
        output_vectors = rng.normal(0, 0.3, (5, 7))
        context = [chain_vocab.word_chains["alpha"], chain_vocab.word_chains["ciga"]]
        target = 3

        grad_chain, grad_out = cbow_exact_grads(
            chain_vectors, output_vectors, context, target
        )
        fd_chain = numeric_gradient(
            lambda: cbow_exact_loss(chain_vectors, output_vectors, context, target),
            chain_vectors,
        )
        fd_out = numeric_gradient(
            lambda: cbow_exact_loss(chain_vectors, output_vectors, context, target),
            output_vectors,
        )
        scale = max(np.abs(fd_chain).max(), np.abs(fd_out).max())
        np.testing.assert_allclose(grad_chain, fd_chain, atol=1e-5 * scale)
        np.testing.assert_allclose(grad_out, fd_out, atol=1e-5 * scale)

    def test_exact_loss_decreases_across_epochs(self):
        docs = [["aqua", "brox", "cello"], ["brox", "aqua", "cello"],
                ["cello", "aqua", "brox"]] * 4
        model = SubwordEmbedding(
            dim=6, chain_len=4, epochs=5, lr_initial=0.1,
            softmax_mode="exact", seed=2,
        ).fit(docs)
        history = model.loss_history_
        assert len(history) == 5
        assert all(b < a for a, b in zip(history, history[1:]))


class TestTraining:
    def _shared_context_corpus(self):
        docs = []
        for _ in range(120):
            docs.append(("walla", "nera", "tocho"))
            docs.append(("bemul", "nera", "tocho"))
            docs.append(("crentho", "fusil", "godra"))
        return docs

    def test_distributional_neighbors(self):
        model = SubwordEmbedding(dim=30, epochs=8, lr_initial=0.1, seed=1).fit(
            self._shared_context_corpus()
        )
        va = model.word_vector("walla")[0]
        vb = model.word_vector("bemul")[0]
        vc = model.word_vector("crentho")[0]
        assert _cos(va, vb) >= 0.9
        assert _cos(va, vb) - _cos(va, vc) >= 0.3

    def test_deterministic_given_seed(self):
        docs = self._shared_context_corpus()[:60]
        a = SubwordEmbedding(dim=8, epochs=2, seed=3).fit(docs)
        b = SubwordEmbedding(dim=8, epochs=2, seed=3).fit(docs)
        np.testing.assert_array_equal(a.chain_vectors_, b.chain_vectors_)
        np.testing.assert_array_equal(a.output_vectors_, b.output_vectors_)
        c = SubwordEmbedding(dim=8, epochs=2, seed=4).fit(docs)
        assert not np.array_equal(a.chain_vectors_, c.chain_vectors_)

    def test_invariant_to_document_order(self):
        docs = self._shared_context_corpus()[:60]
        rng = np.random.default_rng(0)
        shuffled = [docs[i] for i in rng.permutation(len(docs))]
        a = SubwordEmbedding(dim=8, epochs=2, seed=3).fit(docs)
        b = SubwordEmbedding(dim=8, epochs=2, seed=3).fit(shuffled)
        np.testing.assert_array_equal(a.chain_vectors_, b.chain_vectors_)

    def test_concurrent_mode_trains(self):
        model = SubwordEmbedding(dim=8, epochs=2, seed=3, workers=2).fit(
            self._shared_context_corpus()[:60]
        )
        assert np.isfinite(model.chain_vectors_).all()
        assert model.loss_history_ is None

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            SubwordEmbedding(dim=4).fit([])
        with pytest.raises(ValueError, match="context"):
            SubwordEmbedding(dim=4).fit([["lonely"]])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EmbedConfig(dim=1)
        with pytest.raises(ValueError):
            EmbedConfig(chain_len=1)
        with pytest.raises(ValueError):
            EmbedConfig(softmax_mode="sampled")


class TestPersistence:
    def test_round_trip_preserves_vectors_to_float32(self, tmp_path):
        docs = [("walla", "nera", "tocho"), ("bemul", "nera", "tocho")] * 20
        model = SubwordEmbedding(dim=12, epochs=2, seed=9).fit(docs)
        path = tmp_path / "model.bin"
        model.save(path)
        assert path.exists() and path.with_suffix(".bin.json").exists()

        loaded = SubwordEmbedding.load(path)
        assert loaded.config == model.config
        assert loaded.vocabulary_.words == model.vocabulary_.words
        for word in model.vocabulary_.words:
            original, _ = model.word_vector(word)
            restored, oov = loaded.word_vector(word)
            assert not oov
            np.testing.assert_allclose(restored, original, atol=1e-6)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "model.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        path.with_suffix(".bin.json").write_text(
            '{"format_version": 1, "config": {"dim": 4}, "word_counts": []}',
            encoding="utf-8",
        )
        with pytest.raises(ValueError, match="not a subword embedding file"):
            SubwordEmbedding.load(path)
