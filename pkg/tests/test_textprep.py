import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoteltopics import (
    BowVectorizer,
    EmptyVocabularyError,
    PrepResources,
    TextNormalizer,
    Vocabulary,
    build_vocab,
    load_lemmas,
    load_resources,
    load_stopwords,
    preprocess,
    to_bow,
)


class TestPreprocess:
    def test_reference_english_sentence(self, english_resources):
        text = "there were always kids playing in the Restaurant!"
        assert preprocess(text, english_resources) == [
            "always", "kid", "play", "restaurant",
        ]

    def test_empty_text(self, english_resources):
        assert preprocess("", english_resources) == []

    def test_lowercase_and_punctuation_strip(self):
        res = PrepResources()
        assert preprocess("¡¡HOLA!!", res) == ["hola"]

    def test_digits_are_separators(self):
        res = PrepResources()
        assert preprocess("room42 was ok2ok", res) == ["room", "was", "ok", "ok"]

    def test_diacritics_preserved(self):
        res = PrepResources()
        assert preprocess("Única habitación", res) == ["única", "habitación"]

    def test_min_token_len_applies_to_lemma(self):
        res = PrepResources(lemma_map={"abc": "a"}, min_token_len=2)
        assert preprocess("abc abd", res) == ["abd"]

    @settings(max_examples=60, deadline=None)
    @given(st.text(max_size=80))
    def test_idempotent_on_own_output(self, text):
        res = PrepResources(
            stopwords=frozenset({"the", "la"}), lemma_map={"kids": "kid"}
        )
        once = preprocess(text, res)
        again = preprocess(" ".join(once), res)
        assert once == again


class TestBuildVocab:
    def test_min_count_two(self):
        vocab = build_vocab([["a", "b"], ["a"]], min_count=2)
        assert vocab.words == ("a",)

    def test_alphabetical_indices(self):
        vocab = build_vocab([["b", "a"], ["a"]], min_count=1)
        assert vocab.words == ("a", "b")
        assert vocab.index == {"a": 0, "b": 1}
        assert vocab.counts == (2, 1)

    def test_empty_vocabulary_error(self):
        with pytest.raises(EmptyVocabularyError):
            build_vocab([["a"], ["b"]], min_count=3)

    def test_min_count_validated(self):
        with pytest.raises(ValueError):
            build_vocab([["a"]], min_count=0)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.lists(st.sampled_from("abcdef"), max_size=8), max_size=8))
    def test_index_bijective_and_sorted(self, docs):
        try:
            vocab = build_vocab(docs, min_count=1)
        except EmptyVocabularyError:
            return
        assert list(vocab.words) == sorted(vocab.words)
        assert sorted(vocab.index.values()) == list(range(len(vocab)))
        assert all(vocab.words[i] == w for w, i in vocab.index.items())


class TestToBow:
    VOCAB = Vocabulary(words=("a", "b"), index={"a": 0, "b": 1}, counts=(2, 1))

    def test_counts_aggregate(self):
        assert to_bow(["a", "a", "b"], self.VOCAB) == [(0, 2), (1, 1)]

    def test_oov_dropped(self):
        assert to_bow(["z"], self.VOCAB) == []

    def test_order_independent(self):
        assert to_bow(["b", "a", "a"], self.VOCAB) == to_bow(["a", "a", "b"], self.VOCAB)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.sampled_from("abz"), max_size=30))
    def test_count_sum_equals_in_vocab_tokens(self, tokens):
        bow = to_bow(tokens, self.VOCAB)
        assert sum(c for _, c in bow) == sum(1 for t in tokens if t in ("a", "b"))


class TestResources:
    def test_loaders(self, tmp_path):
        sw = tmp_path / "stop.txt"
        sw.write_text("The\nof\n\n", encoding="utf-8")
        assert load_stopwords(sw) == frozenset({"the", "of"})

        lm = tmp_path / "lemmas.tsv"
        lm.write_text("Kids\tkid\nplaying\tplay\n", encoding="utf-8")
        assert load_lemmas(lm) == {"kids": "kid", "playing": "play"}

    def test_bad_lemma_row(self, tmp_path):
        lm = tmp_path / "lemmas.tsv"
        lm.write_text("noseparator\n", encoding="utf-8")
        with pytest.raises(ValueError, match="bad lemma row"):
            load_lemmas(lm)

    def test_invariants_enforced(self):
        with pytest.raises(ValueError, match="not lowercase"):
            PrepResources(stopwords=frozenset({"The"}))
        with pytest.raises(ValueError, match="not lowercase"):
            PrepResources(lemma_map={"Kids": "kid"})

    def test_load_resources_optional_paths(self):
        res = load_resources(None, None, min_token_len=3)
        assert res.stopwords == frozenset()
        assert res.min_token_len == 3


class TestEstimators:
    def test_text_normalizer(self, english_resources):
        normalizer = TextNormalizer(resources=english_resources)
        out = normalizer.fit_transform(["kids playing", ""])
        assert out == [["kid", "play"], []]
        assert "resources" in normalizer.get_params()

    def test_bow_vectorizer(self):
        vectorizer = BowVectorizer(min_count=1)
        docs = [["b", "a"], ["a", "c"]]
        bows = vectorizer.fit_transform(docs)
        assert vectorizer.vocabulary_.words == ("a", "b", "c")
        assert bows[0] == [(0, 1), (1, 1)]

    def test_bow_vectorizer_requires_fit(self):
        with pytest.raises(RuntimeError):
            BowVectorizer().transform([["a"]])
