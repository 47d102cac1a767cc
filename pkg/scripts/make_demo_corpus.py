#!/usr/bin/env python3
"""Regenerate the bundled demo corpus under data/ (byte-identical by seed).

The corpus is drawn from the planted-topic generative process, then decorated
with stopwords and inflected word forms so the preprocessing resources have
real work to do. Usage:

    python3 scripts/make_demo_corpus.py [data_dir]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from hoteltopics import SyntheticSpec, save_reviews, synth_corpus
from hoteltopics.corpus import Review, ReviewSet

SEED = 20240817
STOPWORDS = ("the", "and", "was", "muy", "de", "la", "con", "para")
K_TRUE = 4
VOCAB_PER_TOPIC = 30
DOCS = 2000
DOC_LEN = 24


def decorate(text: str, rng: np.random.Generator) -> str:
    """Sprinkle stopwords and swap ~20% of tokens for their '-es' forms."""
    out = []
    for i, token in enumerate(text.split()):
        if i % 5 == 2:
            out.append(STOPWORDS[int(rng.integers(len(STOPWORDS)))])
        out.append(token + "es" if rng.random() < 0.2 else token)
    return " ".join(out)


def main() -> None:
    data_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data")
    data_dir.mkdir(parents=True, exist_ok=True)

    spec = SyntheticSpec(
        k_true=K_TRUE,
        vocab_per_topic=VOCAB_PER_TOPIC,
        docs=DOCS,
        doc_len=DOC_LEN,
        topic_mixing=0.12,
        seed=SEED,
    )
    reviews, truth = synth_corpus(
        spec, cities=("avalon", "brightport"), hotels_per_city=12, language="es"
    )

    rng = np.random.default_rng(SEED + 1)
    decorated = tuple(
        Review(
            id=r.id,
            hotel_id=r.hotel_id,
            city=r.city,
            positive_text=decorate(r.positive_text, rng),
            negative_text=decorate(r.negative_text, rng),
            score=r.score,
            author_country=r.author_country,
            language=r.language,
        )
        for r in reviews
    )
    save_reviews(
        ReviewSet(reviews=decorated, source="<synthetic-demo>"),
        data_dir / "demo_reviews.jsonl",
    )

    (data_dir / "stopwords.txt").write_text(
        "\n".join(STOPWORDS) + "\n", encoding="utf-8"
    )
    lemma_rows = [
        f"{w}es\t{w}" for w in (*truth.vocabulary, *truth.background_vocabulary)
    ]
    (data_dir / "lemmas.tsv").write_text("\n".join(lemma_rows) + "\n", encoding="utf-8")

    config = {
        "input": {"path": "demo_reviews.jsonl", "format": "jsonl", "language": "es"},
        "resources": {
            "stopwords": "stopwords.txt",
            "lemmas": "lemmas.tsv",
            "min_token_len": 2,
            "min_count": 5,
        },
        "output_dir": "demo_out",
        "seed": 42,
        "sweep": {"enabled": True, "k_min": 2, "k_max": 6, "runs": 5},
        "lda": {"n_topics": 4, "alpha": 0.1, "beta": 0.01, "iterations": 300,
                "burn_in": 100, "sample_every": 10},
        "coherence": {"top_n": 10, "window": 110},
        "embedding": {"dim": 100, "chain_len": 5, "context_radius": 2,
                      "epochs": 3, "negatives": 5, "lr_initial": 0.05},
        "projection": {"k_neighbors": 15, "min_dist": 0.1, "epochs": 200,
                       "negative_rate": 5, "init": "pca"},
        "analysis": {"threshold": 0.8, "alpha_sig": 0.05},
    }
    (data_dir / "demo_config.json").write_text(
        json.dumps(config, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(decorated)} reviews + resources + config under {data_dir}/")


if __name__ == "__main__":
    main()
