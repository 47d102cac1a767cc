import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hoteltopics import PrepResources, SyntheticSpec, synth_corpus
from hoteltopics.corpus import partition
from hoteltopics.textprep import build_bow_corpus, build_vocab, preprocess_set


@pytest.fixture(scope="session")
def english_resources():
    return PrepResources(
        stopwords=frozenset({"there", "were", "in", "the"}),
        lemma_map={"kids": "kid", "playing": "play"},
    )


@pytest.fixture(scope="session")
def small_planted():
    """3 planted topics, 80 reviews, no background noise: fast LDA material."""
    spec = SyntheticSpec(
        k_true=3, vocab_per_topic=20, docs=80, doc_len=30, topic_mixing=0.08, seed=7
    )
    reviews, truth = synth_corpus(spec, background_share=0.0)
    doc_set = [s for s in partition(reviews) if s.polarity == "positive"][0]
    token_docs = preprocess_set(doc_set, PrepResources())
    vocab = build_vocab([d.tokens for d in token_docs], min_count=1)
    corpus = build_bow_corpus(token_docs, vocab)
    return {
        "spec": spec,
        "reviews": reviews,
        "truth": truth,
        "doc_set": doc_set,
        "token_docs": token_docs,
        "corpus": corpus,
    }


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\n[acceptance] {name}: {outcome}", flush=True)
