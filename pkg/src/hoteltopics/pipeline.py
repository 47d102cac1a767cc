"""End-to-end orchestration: ingest -> prep -> sweep -> train -> embed ->
project -> analyze -> render, per document set.

Every stage failure is wrapped in a StageError naming the stage so the CLI can
abort with a stage-tagged diagnostic. Given one config and seed the whole run
is deterministic: report.json is byte-identical across runs on one platform.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from contextlib import contextmanager
from pathlib import Path
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from .coherence import SweepResult, model_coherence, sweep_k, write_sweep_csv
from .config import PipelineConfig, derive_seed
from .corpus import DocumentSet, ReviewSet, load_reviews, partition
from .embedding import SubwordEmbedding
from .lda import GibbsLda
from .projection import knn_fuzzy_graph, layout2d, trustworthiness
from .render import render_boxplots, render_coherence_curve, render_scatter
from .stats import ScoreBox, anova_oneway, box_stats, representative, tukey_hsd
from .textprep import (
    BowCorpus,
    TokenDoc,
    build_bow_corpus,
    build_vocab,
    load_resources,
    preprocess_set,
)


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def set_slug(key: str) -> str:
    """File-name-safe form of a 'city:polarity' set key."""
    return key.replace(":", "_").replace("/", "-").replace(" ", "-")


def ingest(config: PipelineConfig) -> ReviewSet:
    with _stage("ingest"):
        return load_reviews(config.input.path, fmt=config.input.format)


def document_sets(
    config: PipelineConfig, reviews: ReviewSet, only_set: str | None = None
) -> list[DocumentSet]:
    with _stage("partition"):
        sets = partition(reviews, language_filter=config.input.language)
        if only_set is not None:
            sets = [s for s in sets if s.key == only_set]
            if not sets:
                raise ValueError(f"no document set matches {only_set!r}")
        return sets


def prepare_set(config: PipelineConfig, doc_set: DocumentSet) -> list[TokenDoc]:
    with _stage(f"prep:{doc_set.key}"):
        resources = load_resources(
            config.resources.stopwords,
            config.resources.lemmas,
            config.resources.min_token_len,
        )
        return preprocess_set(doc_set, resources)


def bow_for_set(config: PipelineConfig, key: str, token_docs: Sequence[TokenDoc]) -> BowCorpus:
    with _stage(f"vocab:{key}"):
        vocab = build_vocab([d.tokens for d in token_docs], config.resources.min_count)
        return build_bow_corpus(token_docs, vocab)


def sweep_set(
    config: PipelineConfig,
    key: str,
    corpus: BowCorpus,
    token_docs: Sequence[TokenDoc],
) -> SweepResult:
    with _stage(f"sweep:{key}"):
        return sweep_k(
            corpus,
            [d.tokens for d in token_docs],
            config.sweep.k_values,
            runs=config.sweep.runs,
            coherence_config=config.coherence,
            lda_template=config.lda,
            base_seed=derive_seed(config.seed, f"sweep:{key}"),
            n_jobs=config.jobs,
        )


def train_set(
    config: PipelineConfig, key: str, corpus: BowCorpus, n_topics: int
) -> GibbsLda:
    with _stage(f"train:{key}"):
        lda_config = dataclasses.replace(
            config.lda, n_topics=n_topics, seed=derive_seed(config.seed, f"train:{key}")
        )
        return GibbsLda.from_config(lda_config).fit(corpus)


def embed_set(
    config: PipelineConfig, key: str, token_docs: Sequence[TokenDoc]
) -> SubwordEmbedding:
    with _stage(f"embed:{key}"):
        embed_config = dataclasses.replace(
            config.embedding, seed=derive_seed(config.seed, f"embed:{key}")
        )
        return SubwordEmbedding.from_config(embed_config).fit(
            [d.tokens for d in token_docs]
        )


def representatives(
    config: PipelineConfig, model: GibbsLda
) -> list[tuple[int, int, float]]:
    """(doc_row, topic, probability) for every representative document."""
    rows = []
    for d in range(model.doc_topic_.shape[0]):
        dist = model.doc_topic_[d]
        topic = representative(dist, config.analysis.threshold)
        if topic is not None:
            rows.append((d, topic, float(dist[topic])))
    return rows


def _check_alignment(model: GibbsLda, token_docs: Sequence[TokenDoc]) -> None:
    """Reloaded models must match the recomputed documents row for row."""
    if model.doc_ids_ != tuple(d.review_id for d in token_docs):
        raise ValueError(
            "model documents do not match the corpus; retrain after input changes"
        )


def project_set(
    config: PipelineConfig,
    key: str,
    token_docs: Sequence[TokenDoc],
    model: GibbsLda,
    embedder: SubwordEmbedding,
) -> dict:
    """2D coordinates of representative reviews plus a quality score."""
    with _stage(f"project:{key}"):
        _check_alignment(model, token_docs)
        reps = representatives(config, model)
        if len(reps) < 3:
            return {
                "points": [],
                "trustworthiness": None,
                "k_neighbors": None,
                "note": f"only {len(reps)} representative review(s); projection skipped",
            }
        vectors = np.vstack(
            [embedder.review_vector(token_docs[d].tokens)[0] for d, _, _ in reps]
        )
        k_eff = max(min(config.projection.k_neighbors, vectors.shape[0] - 1), 2)
        note = None
        if k_eff < config.projection.k_neighbors:
            note = f"k_neighbors clamped to {k_eff} ({vectors.shape[0]} points)"
        project_config = dataclasses.replace(
            config.projection,
            k_neighbors=k_eff,
            seed=derive_seed(config.seed, f"project:{key}"),
        )
        graph = knn_fuzzy_graph(vectors, project_config.k_neighbors)
        coords = layout2d(graph, project_config, data=vectors)
        # The trustworthiness normalization needs 2n - 3k - 1 > 0.
        quality_k = min(project_config.k_neighbors, max(1, (2 * vectors.shape[0] - 2) // 3))
        quality = trustworthiness(vectors, coords, quality_k)
        points = [
            [token_docs[d].review_id, float(x), float(y), int(topic), prob]
            for (d, topic, prob), (x, y) in zip(reps, coords)
        ]
        return {
            "points": points,
            "trustworthiness": quality,
            "k_neighbors": project_config.k_neighbors,
            "note": note,
        }


def analyze_set(
    config: PipelineConfig,
    key: str,
    token_docs: Sequence[TokenDoc],
    model: GibbsLda,
    hotel_of_review: dict[str, str],
) -> dict:
    """Representative share, per-topic score boxes, ANOVA/Tukey, magnitudes."""
    with _stage(f"analyze:{key}"):
        _check_alignment(model, token_docs)
        reps = representatives(config, model)
        share = len(reps) / len(token_docs) if token_docs else 0.0

        groups: dict[int, list[float]] = {}
        for d, topic, _ in reps:
            groups.setdefault(topic, []).append(token_docs[d].score)
        ordered_groups = sorted(groups.items())
        boxes = [
            dataclasses.asdict(box_stats(scores, topic=topic))
            for topic, scores in ordered_groups
        ]

        anova = None
        tukey = None
        note = None
        score_groups = [scores for _, scores in ordered_groups]
        group_topics = [topic for topic, _ in ordered_groups]
        if len(score_groups) >= 2 and sum(map(len, score_groups)) > len(score_groups):
            try:
                anova = dataclasses.asdict(anova_oneway(score_groups))
                result = tukey_hsd(score_groups, config.analysis.alpha_sig)
                tukey = {
                    "pairs": [
                        {
                            "topic_i": group_topics[p.i],
                            "topic_j": group_topics[p.j],
                            "mean_diff": p.mean_diff,
                            "q_stat": p.q_stat,
                            "p_value": p.p_value,
                            "significant": p.significant,
                        }
                        for p in result.pairs
                    ],
                    "ms_within": result.ms_within,
                    "df_within": result.df_within,
                }
            except ValueError as exc:
                note = f"score tests skipped: {exc}"
        else:
            note = "score tests skipped: fewer than two topic groups"

        magnitudes: dict[str, list[float]] = {}
        by_hotel: dict[str, list[int]] = {}
        for d, token_doc in enumerate(token_docs):
            hotel = hotel_of_review.get(token_doc.review_id, "")
            by_hotel.setdefault(hotel, []).append(d)
        for hotel, doc_rows in sorted(by_hotel.items()):
            theta = model.doc_topic_[doc_rows]
            magnitudes[hotel] = [float(x) for x in theta.sum(axis=0)]

        return {
            "representative": {
                "threshold": config.analysis.threshold,
                "count": len(reps),
                "share": share,
            },
            "score_boxes": boxes,
            "anova": anova,
            "tukey": tukey,
            "stats_note": note,
            "magnitudes": magnitudes,
        }


def describe_topics(model: GibbsLda, top_n: int) -> list[dict]:
    shares = model.topic_shares()
    topics = []
    for t in range(model.topic_word_.shape[0]):
        top = model.top_words(t, top_n)
        topics.append(
            {
                "topic": t,
                "top_words": [[w, p] for w, p in top],
                "salience": model.salience(t),
                "share_pct": float(shares[t]),
                "label": " ".join(w for w, _ in top[:3]),
            }
        )
    return topics


def process_set(
    config: PipelineConfig,
    doc_set: DocumentSet,
    hotel_of_review: dict[str, str],
    out_dir: Path | None = None,
) -> dict:
    """Run every stage for one document set; write per-set files if out_dir."""
    key = doc_set.key
    token_docs = prepare_set(config, doc_set)
    corpus = bow_for_set(config, key, token_docs)

    sweep = None
    if config.sweep.enabled:
        sweep = sweep_set(config, key, corpus, token_docs)
        n_topics = sweep.best_k
    else:
        n_topics = config.lda.n_topics

    model = train_set(config, key, corpus, n_topics)
    with _stage(f"coherence:{key}"):
        final_coherence = model_coherence(
            model, [d.tokens for d in token_docs], config.coherence
        )
    embedder = embed_set(config, key, token_docs)
    projection = project_set(config, key, token_docs, model, embedder)
    analysis = analyze_set(config, key, token_docs, model, hotel_of_review)

    report = {
        "city": doc_set.city,
        "polarity": doc_set.polarity,
        "n_documents": len(token_docs),
        "n_tokens": int(corpus.n_tokens),
        "vocabulary_size": len(corpus.vocab),
        "sweep": None
        if sweep is None
        else {
            "k_values": list(sweep.k_values),
            "mean": list(sweep.mean_coherence),
            "std": list(sweep.std_coherence),
            "runs": sweep.runs,
            "best_k": sweep.best_k,
        },
        "n_topics": n_topics,
        "topics": describe_topics(model, config.coherence.top_n),
        "coherence": {
            "per_topic": [
                None if np.isnan(c) else float(c) for c in final_coherence.per_topic
            ],
            "mean": None if np.isnan(final_coherence.mean) else float(final_coherence.mean),
            "degenerate_topics": list(final_coherence.degenerate),
        },
        **analysis,
        "projection": projection,
    }

    if out_dir is not None:
        with _stage(f"render:{key}"):
            write_set_files(config, set_slug(key), report, sweep, model, embedder)
    return report


def write_set_files(
    config: PipelineConfig,
    slug: str,
    report: dict,
    sweep: SweepResult | None,
    model: GibbsLda | None = None,
    embedder: SubwordEmbedding | None = None,
) -> None:
    """Write the per-set CSV/SVG/model artifacts declared by the CLI contract."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if sweep is not None:
        write_sweep_csv(sweep, out / f"sweep_{slug}.csv")
        (out / f"sweep_{slug}.svg").write_text(
            render_coherence_curve(sweep), encoding="utf-8"
        )
    labels = {t["topic"]: t["label"] for t in report["topics"]}
    (out / f"scatter_{slug}.svg").write_text(
        render_scatter(report["projection"]["points"], labels), encoding="utf-8"
    )
    boxes = [_box_from_dict(b) for b in report["score_boxes"]]
    if boxes:
        (out / f"boxes_{slug}.svg").write_text(
            render_boxplots(boxes, labels), encoding="utf-8"
        )
    with (out / f"projection_{slug}.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["review_id", "x", "y", "topic", "prob"])
        for rid, x, y, topic, prob in report["projection"]["points"]:
            writer.writerow([rid, repr(float(x)), repr(float(y)), topic, repr(float(prob))])
    if model is not None:
        model.save(out / f"lda_{slug}.json")
    if embedder is not None:
        embedder.save(out / f"embed_{slug}.bin")


def _box_from_dict(data: dict) -> ScoreBox:
    values = dict(data)
    values["outliers"] = tuple(values["outliers"])
    return ScoreBox(**values)


def run_pipeline(config: PipelineConfig, only_set: str | None = None) -> dict:
    """Execute the full pipeline and write report.json plus all set files.

    Document sets are independent (each stage derives its own seed from the
    set key), so with ``jobs > 1`` they process concurrently; per-set sweeps
    then run their chains sequentially inside each worker.
    """
    reviews = ingest(config)
    sets = document_sets(config, reviews, only_set)
    hotel_of_review = {r.id: r.hotel_id for r in reviews}

    report = {
        "seed": config.seed,
        "config": config.to_dict(),
        "sets": {},
    }
    out_dir = Path(config.output_dir)
    if config.jobs > 1 and len(sets) > 1:
        set_config = dataclasses.replace(config, jobs=1)
        sections = Parallel(n_jobs=config.jobs)(
            delayed(process_set)(set_config, doc_set, hotel_of_review, out_dir)
            for doc_set in sets
        )
    else:
        sections = [
            process_set(config, doc_set, hotel_of_review, out_dir)
            for doc_set in sets
        ]
    for doc_set, section in zip(sets, sections):
        report["sets"][doc_set.key] = section

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with _stage("report"):
        (out / "report.json").write_text(
            json.dumps(report, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
    return report


def render_from_report(config: PipelineConfig) -> list[str]:
    """Regenerate every figure from report.json (figures are pure views)."""
    out = Path(config.output_dir)
    report_path = out / "report.json"
    with _stage("render"):
        if not report_path.exists():
            raise FileNotFoundError(f"no report.json in {out}; run the pipeline first")
        report = json.loads(report_path.read_text(encoding="utf-8"))
        written = []
        for key, section in sorted(report["sets"].items()):
            slug = set_slug(key)
            labels = {t["topic"]: t["label"] for t in section["topics"]}
            if section["sweep"] is not None:
                data = section["sweep"]
                sweep = SweepResult(
                    k_values=tuple(data["k_values"]),
                    mean_coherence=tuple(data["mean"]),
                    std_coherence=tuple(data["std"]),
                    runs=data["runs"],
                    best_k=data["best_k"],
                )
                (out / f"sweep_{slug}.svg").write_text(
                    render_coherence_curve(sweep), encoding="utf-8"
                )
                written.append(f"sweep_{slug}.svg")
            (out / f"scatter_{slug}.svg").write_text(
                render_scatter(section["projection"]["points"], labels),
                encoding="utf-8",
            )
            written.append(f"scatter_{slug}.svg")
            boxes = [_box_from_dict(b) for b in section["score_boxes"]]
            if boxes:
                (out / f"boxes_{slug}.svg").write_text(
                    render_boxplots(boxes, labels), encoding="utf-8"
                )
                written.append(f"boxes_{slug}.svg")
        return written
