"""Review corpus loading, validation, partitioning, and synthetic generation.

All functions here are pure and operate on immutable records; there is no
network access. File ingestion replaces any upstream crawling.
"""

from __future__ import annotations

import csv
import datetime
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCORE_MIN = 1.0
SCORE_MAX = 10.0

REVIEW_FIELDS = (
    "id",
    "hotel_id",
    "city",
    "author_country",
    "positive_text",
    "negative_text",
    "score",
    "language",
)


class CorpusError(ValueError):
    """Unrecoverable corpus problem (duplicate ids, unreadable file, bad format)."""


@dataclass(frozen=True)
class Review:
    """One customer entry: both comment sides plus the averaged score."""

    id: str
    hotel_id: str
    city: str
    positive_text: str
    negative_text: str
    score: float
    author_country: str | None = None
    language: str | None = None

    def validate(self) -> None:
        if not self.id:
            raise ValueError("empty review id")
        if not (SCORE_MIN <= self.score <= SCORE_MAX):
            raise ValueError(f"score out of range: {self.score!r}")
        if not self.positive_text and not self.negative_text:
            raise ValueError("both comment sides empty")


@dataclass(frozen=True)
class LoadError:
    """One rejected input record."""

    row: int
    message: str


@dataclass(frozen=True)
class ReviewSet:
    """An ordered, id-unique collection of reviews.

    Equality ignores provenance (source path, load time, rejected-row report),
    so a load -> serialize -> load round trip compares equal.
    """

    reviews: tuple[Review, ...]
    source: str = field(default="<memory>", compare=False)
    loaded_at: str = field(default="", compare=False)
    errors: tuple[LoadError, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for review in self.reviews:
            if review.id in seen:
                raise CorpusError(f"duplicate review id: {review.id!r}")
            seen.add(review.id)

    def __len__(self) -> int:
        return len(self.reviews)

    def __iter__(self):
        return iter(self.reviews)

    def get(self, review_id: str) -> Review:
        for review in self.reviews:
            if review.id == review_id:
                return review
        raise KeyError(review_id)


@dataclass(frozen=True)
class DocumentSet:
    """All non-empty texts of one polarity for one city."""

    city: str
    polarity: str  # "positive" or "negative"
    docs: tuple[tuple[str, str, float], ...]  # (review_id, raw_text, score)

    def __post_init__(self) -> None:
        if self.polarity not in ("positive", "negative"):
            raise ValueError(f"bad polarity: {self.polarity!r}")
        for _, text, _ in self.docs:
            if not text:
                raise ValueError("empty document text in DocumentSet")

    @property
    def key(self) -> str:
        return f"{self.city}:{self.polarity}"

    def __len__(self) -> int:
        return len(self.docs)


def _coerce_record(record: dict, row: int) -> Review:
    missing = [k for k in ("id", "hotel_id", "city", "score") if record.get(k) in (None, "")]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    try:
        score = float(record["score"])
    except (TypeError, ValueError):
        raise ValueError(f"non-numeric score: {record['score']!r}") from None
    review = Review(
        id=str(record["id"]),
        hotel_id=str(record["hotel_id"]),
        city=str(record["city"]),
        positive_text=str(record.get("positive_text") or ""),
        negative_text=str(record.get("negative_text") or ""),
        score=score,
        author_country=record.get("author_country") or None,
        language=record.get("language") or None,
    )
    review.validate()
    return review


def load_reviews(path: str | Path, fmt: str = "jsonl") -> ReviewSet:
    """Load reviews from a JSONL or CSV file.

    Records violating the Review invariants are rejected and collected (with
    their 1-based row numbers) in ``ReviewSet.errors``. A duplicate review id
    raises :class:`CorpusError` because downstream joins key on id.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such corpus file: {path}")
    if fmt not in ("jsonl", "csv"):
        raise CorpusError(f"unsupported format: {fmt!r}")

    reviews: list[Review] = []
    errors: list[LoadError] = []
    seen: set[str] = set()

    def _take(record: dict, row: int) -> None:
        try:
            review = _coerce_record(record, row)
        except ValueError as exc:
            errors.append(LoadError(row=row, message=str(exc)))
            return
        if review.id in seen:
            raise CorpusError(f"duplicate review id: {review.id!r} (row {row})")
        seen.add(review.id)
        reviews.append(review)

    with path.open("r", encoding="utf-8", newline="") as handle:
        if fmt == "jsonl":
            for row, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    errors.append(LoadError(row=row, message=f"malformed JSON: {exc.msg}"))
                    continue
                if not isinstance(record, dict):
                    errors.append(LoadError(row=row, message="record is not an object"))
                    continue
                _take(record, row)
        else:
            reader = csv.DictReader(handle)
            header = set(reader.fieldnames or ())
            required = {"id", "hotel_id", "city", "positive_text", "negative_text", "score"}
            if not required <= header:
                raise CorpusError(f"CSV header missing columns: {sorted(required - header)}")
            for row, record in enumerate(reader, start=2):  # row 1 is the header
                _take(record, row)

    return ReviewSet(
        reviews=tuple(reviews),
        source=str(path),
        loaded_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        errors=tuple(errors),
    )


def save_reviews(review_set: ReviewSet, path: str | Path, fmt: str = "jsonl") -> None:
    """Serialize a ReviewSet back to the documented JSONL/CSV schema."""
    path = Path(path)
    if fmt == "jsonl":
        with path.open("w", encoding="utf-8") as handle:
            for review in review_set:
                record = {
                    "id": review.id,
                    "hotel_id": review.hotel_id,
                    "city": review.city,
                    "author_country": review.author_country,
                    "positive_text": review.positive_text,
                    "negative_text": review.negative_text,
                    "score": review.score,
                    "language": review.language,
                }
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    elif fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(REVIEW_FIELDS))
            writer.writeheader()
            for review in review_set:
                writer.writerow(
                    {
                        "id": review.id,
                        "hotel_id": review.hotel_id,
                        "city": review.city,
                        "author_country": review.author_country or "",
                        "positive_text": review.positive_text,
                        "negative_text": review.negative_text,
                        "score": repr(review.score),
                        "language": review.language or "",
                    }
                )
    else:
        raise CorpusError(f"unsupported format: {fmt!r}")


def partition(review_set: ReviewSet, language_filter: str | None = None) -> list[DocumentSet]:
    """Split a corpus into one DocumentSet per (city, polarity).

    A review contributes its positive text to the positive set and its
    negative text to the negative set independently; empty sides are skipped.
    With a language filter, reviews whose tag differs (or is missing) are
    excluded. Output is sorted by (city, polarity) for determinism.
    """
    buckets: dict[tuple[str, str], list[tuple[str, str, float]]] = {}
    for review in review_set:
        if language_filter is not None and review.language != language_filter:
            continue
        for polarity, text in (("positive", review.positive_text), ("negative", review.negative_text)):
            if not text:
                continue
            buckets.setdefault((review.city, polarity), []).append((review.id, text, review.score))
    return [
        DocumentSet(city=city, polarity=polarity, docs=tuple(docs))
        for (city, polarity), docs in sorted(buckets.items())
    ]


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the planted-topic generative process."""

    k_true: int
    vocab_per_topic: int
    docs: int
    doc_len: int
    topic_mixing: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_true < 1:
            raise ValueError("k_true must be >= 1")
        for name in ("vocab_per_topic", "docs", "doc_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.topic_mixing > 0:
            raise ValueError("topic_mixing must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


@dataclass(frozen=True)
class SynthTruth:
    """Ground truth of a synthetic corpus: planted word tables, mixtures, and
    the realized per-side token-topic counts."""

    vocabulary: tuple[str, ...]  # topic-block words only
    background_vocabulary: tuple[str, ...]
    topic_word: np.ndarray  # k_true x V, rows sum to 1
    mixtures: dict[tuple[str, str], np.ndarray]  # (review_id, polarity) -> theta row
    token_topic_counts: dict[tuple[str, str], np.ndarray]
    vocab_per_topic: int

    def word_topic(self, word: str) -> int:
        """Planted topic owning ``word``; -1 for background vocabulary."""
        if word in self.background_vocabulary:
            return -1
        return self.vocabulary.index(word) // self.vocab_per_topic

    def top_words(self, topic: int, n: int) -> list[str]:
        order = np.argsort(-self.topic_word[topic], kind="stable")
        return [self.vocabulary[i] for i in order[:n]]


def _alpha_code(value: int, width: int) -> str:
    letters = []
    for _ in range(width):
        letters.append(chr(ord("a") + value % 26))
        value //= 26
    return "".join(reversed(letters))


# Within-block decay: steep enough that the planted top-10 is unambiguous.
_BLOCK_DECAY = 0.85


def synthetic_vocabulary(k_true: int, vocab_per_topic: int) -> tuple[str, ...]:
    """Letter-only pseudo-words, ``vocab_per_topic`` per topic block."""
    return tuple(
        _alpha_code(k, 2) + _alpha_code(j, 3)
        for k in range(k_true)
        for j in range(vocab_per_topic)
    )


def synth_corpus(
    spec: SyntheticSpec,
    cities: tuple[str, ...] = ("avalon",),
    hotels_per_city: int = 8,
    language: str | None = None,
    background_words: int = 200,
    background_share: float = 0.15,
) -> tuple[ReviewSet, SynthTruth]:
    """Sample a review corpus from the standard LDA generative process.

    Each topic owns a disjoint vocabulary block with geometrically decaying
    word probabilities; each review side draws its own topic mixture from a
    symmetric Dirichlet. On top of the topic channel, every token is replaced
    with ``background_share`` probability by a draw from a broad uniform
    background vocabulary: background words co-occur only weakly, which is
    what makes coherence-based selection of the planted topic count peak
    instead of plateau (real corpora behave the same way). Scores track the
    positive side's dominant topic so topic-vs-score statistics have signal.
    Deterministic given ``spec.seed``.
    """
    if not 0.0 <= background_share < 1.0:
        raise ValueError("background_share must lie in [0, 1)")
    rng = np.random.default_rng(spec.seed)
    k, m = spec.k_true, spec.vocab_per_topic
    vocabulary = synthetic_vocabulary(k, m)
    background = tuple(f"zz{_alpha_code(j, 3)}" for j in range(background_words))

    block = _BLOCK_DECAY ** np.arange(m)
    block = block / block.sum()
    topic_word = np.zeros((k, k * m))
    for t in range(k):
        topic_word[t, t * m : (t + 1) * m] = block

    vocab_arr = np.array(vocabulary)
    background_arr = np.array(background)
    mixtures: dict[tuple[str, str], np.ndarray] = {}
    token_topic_counts: dict[tuple[str, str], np.ndarray] = {}
    reviews: list[Review] = []
    for i in range(spec.docs):
        review_id = f"r{i:05d}"
        city = cities[i % len(cities)]
        hotel_id = f"h-{city}-{i % hotels_per_city:02d}"
        sides: dict[str, str] = {}
        for polarity in ("positive", "negative"):
            theta = rng.dirichlet(np.full(k, spec.topic_mixing)) if k > 1 else np.ones(1)
            topics = rng.choice(k, size=spec.doc_len, p=theta)
            within = rng.choice(m, size=spec.doc_len, p=block)
            words = vocab_arr[topics * m + within]
            if background_share > 0.0 and background_words > 0:
                is_background = rng.random(spec.doc_len) < background_share
                bg_idx = rng.integers(0, background_words, size=spec.doc_len)
                words = np.where(is_background, background_arr[bg_idx], words)
                counted = topics[~is_background]
            else:
                counted = topics
            sides[polarity] = " ".join(words)
            mixtures[(review_id, polarity)] = theta
            token_topic_counts[(review_id, polarity)] = np.bincount(
                counted, minlength=k
            )
        dominant = int(np.argmax(mixtures[(review_id, "positive")]))
        base = 2.5 + 6.5 * (dominant / max(k - 1, 1))
        score = float(np.clip(base + rng.normal(0.0, 0.7), SCORE_MIN, SCORE_MAX))
        reviews.append(
            Review(
                id=review_id,
                hotel_id=hotel_id,
                city=city,
                positive_text=sides["positive"],
                negative_text=sides["negative"],
                score=round(score, 1),
                language=language,
            )
        )

    truth = SynthTruth(
        vocabulary=vocabulary,
        background_vocabulary=background,
        topic_word=topic_word,
        mixtures=mixtures,
        token_topic_counts=token_topic_counts,
        vocab_per_topic=m,
    )
    return ReviewSet(reviews=tuple(reviews), source="<synthetic>"), truth
