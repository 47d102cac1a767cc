"""Command-line interface over the review-topic pipeline.

Every subcommand is stateless: it reads the JSON config, recomputes what it
needs (or reloads model artifacts written by earlier subcommands), and writes
its outputs under the configured output directory. Failures abort with a
stage-tagged message on stderr and a nonzero exit code.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click

from . import pipeline
from .coherence import read_sweep_csv, write_sweep_csv
from .config import ConfigError, PipelineConfig
from .corpus import CorpusError, save_reviews
from .embedding import SubwordEmbedding
from .lda import GibbsLda
from .render import render_coherence_curve, render_scatter


def _load_config(config_path: str, seed: int | None, out: str | None) -> PipelineConfig:
    return PipelineConfig.from_file(config_path).override(seed=seed, output_dir=out)


def _common_options(fn):
    @click.option("--config", "config_path", required=True, type=click.Path(), help="Pipeline config JSON.")
    @click.option("--seed", type=int, default=None, help="Override the global seed.")
    @click.option("--out", type=click.Path(), default=None, help="Override the output directory.")
    @click.option("--set", "only_set", default=None, help="Process a single city:polarity set.")
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"[config] {exc}", err=True)
            sys.exit(2)
        except CorpusError as exc:
            click.echo(f"[ingest] {exc}", err=True)
            sys.exit(1)
        except pipeline.StageError as exc:
            click.echo(str(exc), err=True)
            sys.exit(1)

    return wrapper


@click.group()
def main():
    """Discover quality-of-service topics in hotel review corpora."""


@main.command()
@_common_options
def ingest(config_path, seed, out, only_set):
    """Load and validate the corpus; write the cleaned copy and an error report."""
    config = _load_config(config_path, seed, out)
    reviews = pipeline.ingest(config)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_reviews(reviews, out_dir / "reviews_validated.jsonl", fmt="jsonl")
    if reviews.errors:
        with (out_dir / "ingest_errors.csv").open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "message"])
            for err in reviews.errors:
                writer.writerow([err.row, err.message])
    click.echo(
        f"loaded {len(reviews)} review(s) from {config.input.path}; "
        f"rejected {len(reviews.errors)} record(s)"
    )


def _prepared_sets(config: PipelineConfig, only_set: str | None):
    reviews = pipeline.ingest(config)
    sets = pipeline.document_sets(config, reviews, only_set)
    hotel_of_review = {r.id: r.hotel_id for r in reviews}
    return reviews, sets, hotel_of_review


@main.command()
@_common_options
def prep(config_path, seed, out, only_set):
    """Preprocess every document set into token JSONL files."""
    config = _load_config(config_path, seed, out)
    _, sets, _ = _prepared_sets(config, only_set)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for doc_set in sets:
        token_docs = pipeline.prepare_set(config, doc_set)
        slug = pipeline.set_slug(doc_set.key)
        with (out_dir / f"tokens_{slug}.jsonl").open("w", encoding="utf-8") as fh:
            for doc in token_docs:
                fh.write(
                    json.dumps(
                        {"review_id": doc.review_id, "tokens": list(doc.tokens),
                         "score": doc.score},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        click.echo(f"{doc_set.key}: {len(token_docs)} documents tokenized")


@main.command()
@_common_options
def sweep(config_path, seed, out, only_set):
    """Run the coherence sweep per set; write sweep CSV and curve SVG."""
    config = _load_config(config_path, seed, out)
    _, sets, _ = _prepared_sets(config, only_set)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for doc_set in sets:
        token_docs = pipeline.prepare_set(config, doc_set)
        corpus = pipeline.bow_for_set(config, doc_set.key, token_docs)
        result = pipeline.sweep_set(config, doc_set.key, corpus, token_docs)
        slug = pipeline.set_slug(doc_set.key)
        write_sweep_csv(result, out_dir / f"sweep_{slug}.csv")
        (out_dir / f"sweep_{slug}.svg").write_text(
            render_coherence_curve(result), encoding="utf-8"
        )
        click.echo(f"{doc_set.key}: best K = {result.best_k}")


def _resolve_n_topics(config: PipelineConfig, slug: str) -> int:
    sweep_path = Path(config.output_dir) / f"sweep_{slug}.csv"
    if config.sweep.enabled and sweep_path.exists():
        return read_sweep_csv(sweep_path).best_k
    return config.lda.n_topics


@main.command()
@_common_options
def train(config_path, seed, out, only_set):
    """Train the final topic model per set (uses sweep CSV when present)."""
    config = _load_config(config_path, seed, out)
    _, sets, _ = _prepared_sets(config, only_set)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for doc_set in sets:
        token_docs = pipeline.prepare_set(config, doc_set)
        corpus = pipeline.bow_for_set(config, doc_set.key, token_docs)
        slug = pipeline.set_slug(doc_set.key)
        n_topics = _resolve_n_topics(config, slug)
        model = pipeline.train_set(config, doc_set.key, corpus, n_topics)
        model.save(out_dir / f"lda_{slug}.json")
        click.echo(f"{doc_set.key}: trained {n_topics}-topic model")


@main.command()
@_common_options
def embed(config_path, seed, out, only_set):
    """Train subword embeddings per set and save the model files."""
    config = _load_config(config_path, seed, out)
    _, sets, _ = _prepared_sets(config, only_set)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for doc_set in sets:
        token_docs = pipeline.prepare_set(config, doc_set)
        embedder = pipeline.embed_set(config, doc_set.key, token_docs)
        slug = pipeline.set_slug(doc_set.key)
        embedder.save(out_dir / f"embed_{slug}.bin")
        click.echo(f"{doc_set.key}: embeddings trained ({embedder.config.dim}d)")


@main.command()
@_common_options
def project(config_path, seed, out, only_set):
    """Project representative reviews to 2D using saved models."""
    config = _load_config(config_path, seed, out)
    _, sets, _ = _prepared_sets(config, only_set)
    out_dir = Path(config.output_dir)
    for doc_set in sets:
        slug = pipeline.set_slug(doc_set.key)
        lda_path = out_dir / f"lda_{slug}.json"
        embed_path = out_dir / f"embed_{slug}.bin"
        if not lda_path.exists() or not embed_path.exists():
            raise pipeline.StageError(
                f"project:{doc_set.key}",
                FileNotFoundError(f"missing model files for {doc_set.key}; run train/embed first"),
            )
        token_docs = pipeline.prepare_set(config, doc_set)
        model = GibbsLda.load(lda_path)
        embedder = SubwordEmbedding.load(embed_path)
        projection = pipeline.project_set(config, doc_set.key, token_docs, model, embedder)
        with (out_dir / f"projection_{slug}.csv").open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["review_id", "x", "y", "topic", "prob"])
            for rid, x, y, topic, prob in projection["points"]:
                writer.writerow([rid, repr(float(x)), repr(float(y)), topic, repr(float(prob))])
        labels = {
            t: " ".join(w for w, _ in model.top_words(t, 3))
            for t in range(model.topic_word_.shape[0])
        }
        (out_dir / f"scatter_{slug}.svg").write_text(
            render_scatter(projection["points"], labels), encoding="utf-8"
        )
        click.echo(
            f"{doc_set.key}: {len(projection['points'])} representative point(s), "
            f"trustworthiness={projection['trustworthiness']}"
        )


@main.command()
@_common_options
def analyze(config_path, seed, out, only_set):
    """Score statistics per set: boxes, ANOVA, Tukey HSD, topic magnitudes."""
    config = _load_config(config_path, seed, out)
    _, sets, hotel_of_review = _prepared_sets(config, only_set)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for doc_set in sets:
        slug = pipeline.set_slug(doc_set.key)
        lda_path = out_dir / f"lda_{slug}.json"
        if not lda_path.exists():
            raise pipeline.StageError(
                f"analyze:{doc_set.key}",
                FileNotFoundError(f"missing lda_{slug}.json; run train first"),
            )
        token_docs = pipeline.prepare_set(config, doc_set)
        model = GibbsLda.load(lda_path)
        analysis = pipeline.analyze_set(
            config, doc_set.key, token_docs, model, hotel_of_review
        )
        with (out_dir / f"stats_{slug}.csv").open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["topic", "n", "min", "q1", "median", "q3", "max", "outliers"])
            for box in analysis["score_boxes"]:
                writer.writerow(
                    [box["topic"], box["n"], box["min"], box["q1"], box["median"],
                     box["q3"], box["max"], ";".join(map(repr, box["outliers"]))]
                )
        with (out_dir / f"magnitudes_{slug}.csv").open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["hotel_id", "topic", "magnitude"])
            for hotel, values in analysis["magnitudes"].items():
                for topic, magnitude in enumerate(values):
                    writer.writerow([hotel, topic, repr(magnitude)])
        if analysis["anova"] is not None:
            a = analysis["anova"]
            click.echo(
                f"{doc_set.key}: representative share "
                f"{analysis['representative']['share']:.3f}, "
                f"ANOVA F={a['f_stat']:.3f} (p={a['p_value']:.2e})"
            )
        else:
            click.echo(
                f"{doc_set.key}: representative share "
                f"{analysis['representative']['share']:.3f}; {analysis['stats_note']}"
            )


@main.command()
@_common_options
def run(config_path, seed, out, only_set):
    """Run the whole pipeline and write report.json plus all figures."""
    config = _load_config(config_path, seed, out)
    report = pipeline.run_pipeline(config, only_set)
    click.echo(f"report written to {Path(config.output_dir) / 'report.json'}")
    for key, section in sorted(report["sets"].items()):
        click.echo(
            f"  {key}: K={section['n_topics']}, "
            f"representative share {section['representative']['share']:.3f}"
        )


@main.command()
@_common_options
def render(config_path, seed, out, only_set):
    """Re-render every figure from an existing report.json."""
    config = _load_config(config_path, seed, out)
    written = pipeline.render_from_report(config)
    click.echo(f"re-rendered {len(written)} figure(s) in {config.output_dir}")


if __name__ == "__main__":
    main()
