"""Acceptance suite: one test per criterion, at the stated tolerances.

A conftest hook prints one "[acceptance] <name>: PASS/FAIL" line per test.
Runtime-limited criteria assert their own wall-clock budgets.
"""

import json
import time
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from sklearn.metrics import silhouette_score

from hoteltopics import (
    CoherenceConfig,
    GibbsLda,
    LdaConfig,
    PipelineConfig,
    PrepResources,
    SyntheticSpec,
    anova_oneway,
    cbow_exact_grads,
    cbow_exact_loss,
    knn_fuzzy_graph,
    layout2d,
    ngram_chains,
    npmi,
    partition,
    preprocess_set,
    representative_share,
    studentized_range_sf,
    sweep_k,
    synth_corpus,
    topic_coherence,
    topic_magnitude,
    trustworthiness,
    tukey_hsd,
    window_counts,
)
from hoteltopics.cli import main as cli_main
from hoteltopics.coherence import WindowCounts
from hoteltopics.embedding import SubwordEmbedding, build_chain_vocab
from hoteltopics.pipeline import run_pipeline, set_slug
from hoteltopics.projection import ProjectConfig
from hoteltopics.textprep import build_bow_corpus, build_vocab

from oracles import (
    brute_coherence,
    brute_trustworthiness,
    numeric_gradient,
    permutation_tukey_pvalues,
)

DATA_DIR = Path(__file__).parent.parent / "data"


def _planted_corpus(seed: int):
    spec = SyntheticSpec(
        k_true=5, vocab_per_topic=50, docs=500, doc_len=40, topic_mixing=0.1, seed=seed
    )
    reviews, truth = synth_corpus(spec)
    doc_set = [s for s in partition(reviews) if s.polarity == "positive"][0]
    token_docs = preprocess_set(doc_set, PrepResources())
    tokens = [d.tokens for d in token_docs]
    vocab = build_vocab(tokens, min_count=1)
    return build_bow_corpus(token_docs, vocab), tokens, truth


def _greedy_overlap(learned_tops: list, planted_tops: list) -> float:
    pairs = [
        (len(l & p) / 10.0, i, j)
        for i, l in enumerate(learned_tops)
        for j, p in enumerate(planted_tops)
    ]
    pairs.sort(reverse=True)
    used_l, used_p, overlaps = set(), set(), []
    for score, i, j in pairs:
        if i in used_l or j in used_p:
            continue
        used_l.add(i)
        used_p.add(j)
        overlaps.append(score)
    return float(np.mean(overlaps))


def test_criterion_1_planted_topic_recovery():
    """K_true=5 recovered by the sweep in >=8/10 repetitions; top-10 overlap
    >=0.8; single-threaded runtime <= 5 minutes."""
    started = time.monotonic()
    template = LdaConfig(n_topics=2, iterations=120, burn_in=40, sample_every=10)
    hits = 0
    first = None
    for rep in range(10):
        corpus, tokens, truth = _planted_corpus(seed=100 + rep)
        if first is None:
            first = (corpus, tokens, truth)
        result = sweep_k(
            corpus,
            tokens,
            range(2, 10),
            runs=10,
            coherence_config=CoherenceConfig(),
            lda_template=template,
            base_seed=1000 * rep,
            n_jobs=1,
        )
        hits += result.best_k == 5
    assert hits >= 8, f"best_K=5 in only {hits}/10 repetitions"

    corpus, tokens, truth = first
    model = GibbsLda(n_topics=5, iterations=200, burn_in=60, seed=9).fit(corpus)
    learned = [set(w for w, _ in model.top_words(t, 10)) for t in range(5)]
    planted = [set(truth.top_words(t, 10)) for t in range(5)]
    overlap = _greedy_overlap(learned, planted)
    assert overlap >= 0.8, f"greedy top-10 overlap {overlap}"

    elapsed = time.monotonic() - started
    assert elapsed <= 300.0, f"criterion 1 took {elapsed:.0f}s > 5 min"


def test_criterion_2_cv_matches_brute_force():
    """topic_coherence equals the naive enumerator to 1e-10 on small corpora;
    NPMI limit cases hit their stated values."""
    rng = np.random.default_rng(77)
    alphabet = list("abcdefgh")
    for case in range(6):
        n_docs = int(rng.integers(2, 9))
        docs = [
            [alphabet[int(k)] for k in rng.integers(0, len(alphabet), rng.integers(1, 25))]
            for _ in range(n_docs)
        ]
        assert sum(len(d) for d in docs) <= 200
        words = [w for w in alphabet[:8] if any(w in d for d in docs)][:8]
        if len(words) < 2:
            continue
        window = int(rng.integers(1, 8))
        counts = window_counts(docs, words, window)
        for segmentation in ("powerset", "one_set_singletons"):
            config = CoherenceConfig(top_n=max(2, len(words)), segmentation=segmentation)
            mine = topic_coherence(counts, words, config)
            ref = brute_coherence(docs, words, window, segmentation=segmentation)
            assert mine == pytest.approx(ref, abs=1e-10)

    def counts_of(p1, p2, joint):
        return WindowCounts(
            word_prob={"x": p1, "y": p2},
            pair_prob={("x", "y"): joint} if joint else {},
            window_total=100,
        )

    assert npmi(counts_of(0.5, 0.5, 0.5), "x", "y") == pytest.approx(1.0, abs=1e-9)
    assert npmi(counts_of(0.5, 0.5, 0.25), "x", "y") == pytest.approx(0.0, abs=1e-9)
    disjoint = npmi(counts_of(0.6, 0.6, 0.0), "x", "y", epsilon=1e-12)
    assert abs(disjoint - (-1.0)) < 0.05


def test_criterion_3_sweep_protocol_twenty_runs():
    """20 chains per K produce mean and std; argmax picks the known K."""
    spec = SyntheticSpec(
        k_true=3, vocab_per_topic=30, docs=150, doc_len=30, topic_mixing=0.1, seed=21
    )
    reviews, _ = synth_corpus(spec)
    doc_set = [s for s in partition(reviews) if s.polarity == "positive"][0]
    token_docs = preprocess_set(doc_set, PrepResources())
    tokens = [d.tokens for d in token_docs]
    corpus = build_bow_corpus(token_docs, build_vocab(tokens, min_count=1))

    result = sweep_k(
        corpus,
        tokens,
        [2, 3, 4],
        runs=20,
        coherence_config=CoherenceConfig(),
        lda_template=LdaConfig(n_topics=2, iterations=100, burn_in=30),
        base_seed=5,
    )
    assert result.runs == 20
    assert len(result.mean_coherence) == len(result.std_coherence) == 3
    assert all(s >= 0 for s in result.std_coherence)
    assert result.best_k == 3
    assert result.mean_coherence[1] == max(result.mean_coherence)


def test_criterion_4_embedding_checks():
    """Exact-softmax gradients match finite differences; distributional
    neighbors separate at the stated margins; reference decomposition exact."""
    assert ngram_chains("kindness", 5) == [
        "⟨kind", "kindn", "indne", "ndnes", "dness", "ness⟩",
    ]

    rng = np.random.default_rng(3)
    chain_vocab = build_chain_vocab(["amber", "birch", "cedar", "dunes", "elmet"], 4)
    chain_vectors = rng.normal(0.0, 0.4, (len(chain_vocab), 6))
    output_vectors = rng.normal(0.0, 0.4, (5, 6))
    context = [chain_vocab.word_chains["amber"], chain_vocab.word_chains["dunes"]]
    grad_chain, grad_out = cbow_exact_grads(chain_vectors, output_vectors, context, 2)
    fd_chain = numeric_gradient(
        lambda: cbow_exact_loss(chain_vectors, output_vectors, context, 2),
        chain_vectors,
    )
    fd_out = numeric_gradient(
        lambda: cbow_exact_loss(chain_vectors, output_vectors, context, 2),
        output_vectors,
    )
    scale = max(np.abs(fd_chain).max(), np.abs(fd_out).max())
    np.testing.assert_allclose(grad_chain, fd_chain, atol=1e-5 * scale)
    np.testing.assert_allclose(grad_out, fd_out, atol=1e-5 * scale)

    docs = []
    for _ in range(120):
        docs.append(("walla", "nera", "tocho"))
        docs.append(("bemul", "nera", "tocho"))
        docs.append(("crentho", "fusil", "godra"))
    model = SubwordEmbedding(dim=30, epochs=8, lr_initial=0.1, seed=1).fit(docs)

    def cos(a, b):
        u, v = model.word_vector(a)[0], model.word_vector(b)[0]
        return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))

    shared = cos("walla", "bemul")
    disjoint = cos("walla", "crentho")
    assert shared >= 0.9
    assert shared - disjoint >= 0.3


def test_criterion_5_projection_quality():
    """Two planted 100-D clusters: trustworthiness >= 0.8 at k=15 and
    silhouette > 0.5; trustworthiness equals brute force on D <= 300."""
    rng = np.random.default_rng(15)
    cluster_a = rng.normal(0.0, 1.0, (50, 100))
    cluster_b = rng.normal(0.0, 1.0, (50, 100)) + 10.0
    x = np.vstack([cluster_a, cluster_b])
    labels = np.array([0] * 50 + [1] * 50)

    config = ProjectConfig(k_neighbors=15, epochs=200, init="pca", seed=4)
    graph = knn_fuzzy_graph(x, config.k_neighbors)
    coords = layout2d(graph, config, data=x)
    assert trustworthiness(x, coords, 15) >= 0.8
    assert silhouette_score(coords, labels) > 0.5

    high = rng.normal(0.0, 1.0, (300, 7))
    low = rng.normal(0.0, 1.0, (300, 2))
    for k in (5, 15):
        assert trustworthiness(high, low, k) == brute_trustworthiness(high, low, k)


TUKEY_DATASETS = [
    # clearly separated: every pair significant
    [[1.0, 1.1, 0.9, 1.2, 0.8], [5.0, 5.1, 4.9, 5.2, 4.8], [9.0, 9.1, 8.9, 9.2, 8.8]],
    # pure noise around a common mean: no pair significant
    [[1.0, 2.0, 3.0, 4.0, 5.0], [1.1, 2.1, 3.1, 4.1, 5.1], [0.9, 1.9, 2.9, 3.9, 4.9]],
    # two close groups plus one far group
    [[1.0, 1.2, 0.8, 1.1, 0.9], [1.05, 1.25, 0.85, 1.15, 0.95], [4.0, 4.2, 3.8, 4.1, 3.9]],
]


def test_criterion_6_statistics_oracles():
    """Hand ANOVA, published studentized-range value, permutation-oracle
    agreement, and affine invariance at machine precision."""
    result = anova_oneway([[1, 2, 3], [2, 3, 4], [3, 4, 5]])
    assert result.f_stat == 3.0
    assert (result.df_between, result.df_within) == (2, 6)

    assert studentized_range_sf(4.34, 3, 6) == pytest.approx(0.05, abs=0.002)

    for dataset in TUKEY_DATASETS:
        mine = tukey_hsd(dataset, alpha_sig=0.05)
        oracle = permutation_tukey_pvalues(dataset, n_permutations=10_000, seed=42)
        for pair in mine.pairs:
            assert (pair.p_value < 0.05) == (oracle[(pair.i, pair.j)] < 0.05), (
                dataset, (pair.i, pair.j), pair.p_value, oracle[(pair.i, pair.j)]
            )

    base = anova_oneway(TUKEY_DATASETS[0]).f_stat
    shifted = anova_oneway([[x + 123.25 for x in g] for g in TUKEY_DATASETS[0]]).f_stat
    scaled = anova_oneway([[x * 3.5 for x in g] for g in TUKEY_DATASETS[0]]).f_stat
    assert shifted == pytest.approx(base, rel=1e-12)
    assert scaled == pytest.approx(base, rel=1e-12)


@pytest.fixture(scope="module")
def small_pipeline(tmp_path_factory):
    from hoteltopics import save_reviews

    tmp = tmp_path_factory.mktemp("acceptance7")
    spec = SyntheticSpec(
        k_true=3, vocab_per_topic=15, docs=60, doc_len=18, topic_mixing=0.1, seed=4
    )
    reviews, _ = synth_corpus(spec, cities=("norvale",))
    corpus_path = tmp / "reviews.jsonl"
    save_reviews(reviews, corpus_path)
    out = tmp / "out"
    config = PipelineConfig.from_dict(
        {
            "input": {"path": str(corpus_path)},
            "output_dir": str(out),
            "seed": 11,
            "resources": {"min_count": 2},
            "sweep": {"enabled": True, "k_min": 2, "k_max": 3, "runs": 2},
            "lda": {"n_topics": 3, "iterations": 80, "burn_in": 20},
            "coherence": {"top_n": 6},
            "embedding": {"dim": 16, "epochs": 2, "chain_len": 4},
            "projection": {"k_neighbors": 8, "epochs": 60},
        }
    )
    return config, out


def test_criterion_7_pipeline_determinism(small_pipeline):
    """Byte-identical report on rerun; share monotone in the threshold;
    magnitudes add up to the review count."""
    config, out = small_pipeline
    run_pipeline(config)
    first = (out / "report.json").read_bytes()
    run_pipeline(config)
    assert (out / "report.json").read_bytes() == first

    model = GibbsLda.load(out / "lda_norvale_positive.json")
    grid = [0.5, 0.6, 0.7, 0.8, 0.9]
    shares = [representative_share(model.doc_topic_, t) for t in grid]
    assert all(a >= b for a, b in zip(shares, shares[1:]))

    theta = model.doc_topic_
    total = sum(
        topic_magnitude(theta, t).magnitude for t in range(theta.shape[1])
    )
    assert total == pytest.approx(theta.shape[0], abs=1e-9)


def test_criterion_8_end_to_end_desk_run(tmp_path):
    """Bundled 2,000-review 4-set corpus completes in <= 10 minutes via the
    CLI and emits every declared output file."""
    started = time.monotonic()
    out = tmp_path / "demo_out"
    result = CliRunner().invoke(
        cli_main,
        ["run", "--config", str(DATA_DIR / "demo_config.json"), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    elapsed = time.monotonic() - started
    assert elapsed <= 600.0, f"end-to-end run took {elapsed:.0f}s > 10 min"

    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    keys = sorted(report["sets"])
    assert keys == [
        "avalon:negative",
        "avalon:positive",
        "brightport:negative",
        "brightport:positive",
    ]
    for key in keys:
        slug = set_slug(key)
        for name in (
            f"sweep_{slug}.csv",
            f"sweep_{slug}.svg",
            f"scatter_{slug}.svg",
            f"boxes_{slug}.svg",
            f"projection_{slug}.csv",
            f"lda_{slug}.json",
            f"embed_{slug}.bin",
            f"embed_{slug}.bin.json",
        ):
            assert (out / name).exists(), name
        section = report["sets"][key]
        assert abs(sum(t["share_pct"] for t in section["topics"]) - 100.0) <= 0.1
        svg = (out / f"scatter_{slug}.svg").read_text(encoding="utf-8")
        circles = ET.fromstring(svg).findall(
            "svg:circle", {"svg": "http://www.w3.org/2000/svg"}
        )
        assert len(circles) == len(section["projection"]["points"])
        assert len(section["projection"]["points"]) == section["representative"]["count"]
