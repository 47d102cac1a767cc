"""Representative-review filtering, topic magnitudes, and score statistics.

The post-hoc machinery (one-way ANOVA, Tukey HSD via the studentized range
distribution) is self-contained: p-values come from the regularized incomplete
beta and from direct numerical quadrature of the studentized range integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import betainc, ndtr
from scipy.stats import chi2

_NORM_TOL = 1e-6


@dataclass(frozen=True)
class AnalysisConfig:
    threshold: float = 0.8
    alpha_sig: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly between 0 and 1")
        if not 0.0 < self.alpha_sig < 1.0:
            raise ValueError("alpha_sig must lie strictly between 0 and 1")


def representative(dist: Sequence[float], threshold: float = 0.8) -> int | None:
    """Argmax topic if its probability strictly exceeds the threshold, else None."""
    dist = np.asarray(dist, dtype=float)
    if abs(float(dist.sum()) - 1.0) > _NORM_TOL:
        raise ValueError(f"distribution does not sum to 1 (sum={dist.sum()!r})")
    top = int(np.argmax(dist))
    return top if dist[top] > threshold else None


def representative_share(doc_topic: np.ndarray, threshold: float = 0.8) -> float:
    """Fraction of documents with a representative topic; non-increasing in
    the threshold."""
    doc_topic = np.asarray(doc_topic, dtype=float)
    if doc_topic.size == 0:
        return 0.0
    return float(np.mean(doc_topic.max(axis=1) > threshold))


@dataclass(frozen=True)
class TopicMagnitude:
    """Summed membership probability of one topic over one hotel's reviews."""

    topic: int
    hotel_id: str
    magnitude: float


def topic_magnitude(
    doc_topic: np.ndarray, topic: int, hotel_id: str = ""
) -> TopicMagnitude:
    """Sum the topic's probability over the hotel's review rows."""
    doc_topic = np.atleast_2d(np.asarray(doc_topic, dtype=float))
    if doc_topic.size and not 0 <= topic < doc_topic.shape[1]:
        raise IndexError(f"topic out of range: {topic}")
    magnitude = float(doc_topic[:, topic].sum()) if doc_topic.size else 0.0
    return TopicMagnitude(topic=topic, hotel_id=hotel_id, magnitude=magnitude)


@dataclass(frozen=True)
class ScoreBox:
    """Five-number summary with 1.5*IQR whiskers; min/max are whisker ends."""

    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    outliers: tuple[float, ...]
    topic: int | None = None


def box_stats(scores: Sequence[float], topic: int | None = None) -> ScoreBox:
    """Quartiles by linear interpolation of the empirical CDF (type 7)."""
    values = np.asarray(scores, dtype=float)
    if values.size == 0:
        raise ValueError("empty score list")
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inliers = values[(values >= lo_fence) & (values <= hi_fence)]
    outliers = values[(values < lo_fence) | (values > hi_fence)]
    # Interpolated quartiles can poke past the extreme inlier on tiny samples;
    # whiskers never retreat inside the box.
    return ScoreBox(
        n=int(values.size),
        min=float(min(inliers.min(), q1)),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        max=float(max(inliers.max(), q3)),
        outliers=tuple(sorted(float(x) for x in outliers)),
        topic=topic,
    )


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float


def _group_arrays(groups: Sequence[Sequence[float]]) -> list[np.ndarray]:
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ValueError("need at least two groups")
    if any(a.size == 0 for a in arrays):
        raise ValueError("every group needs at least one value")
    total = sum(a.size for a in arrays)
    if total <= len(arrays):
        raise ValueError("total sample size must exceed the number of groups")
    return arrays


def _sums_of_squares(arrays: list[np.ndarray]) -> tuple[float, float]:
    grand = float(np.concatenate(arrays).mean())
    ssb = float(sum(a.size * (a.mean() - grand) ** 2 for a in arrays))
    ssw = float(sum(((a - a.mean()) ** 2).sum() for a in arrays))
    return ssb, ssw


def anova_oneway(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """Classical one-way F test; p from the regularized incomplete beta."""
    arrays = _group_arrays(groups)
    ssb, ssw = _sums_of_squares(arrays)
    df_between = len(arrays) - 1
    df_within = sum(a.size for a in arrays) - len(arrays)
    if ssw == 0.0 and ssb == 0.0:
        raise ValueError("F undefined: zero between-group and within-group variance")
    msb = ssb / df_between
    msw = ssw / df_within
    if msw == 0.0:
        return AnovaResult(
            f_stat=math.inf, df_between=df_between, df_within=df_within, p_value=0.0
        )
    f_stat = msb / msw
    # P(F_{d1,d2} > f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2)
    p_value = float(
        betainc(df_within / 2.0, df_between / 2.0, df_within / (df_within + df_between * f_stat))
    )
    return AnovaResult(
        f_stat=float(f_stat),
        df_between=df_between,
        df_within=df_within,
        p_value=p_value,
    )


def _range_cdf_given_scale(q_scaled: float, k_groups: int) -> float:
    """P(range of k standard normals <= q_scaled)."""
    if q_scaled <= 0.0:
        return 0.0

    def integrand(z: float) -> float:
        span = ndtr(z) - ndtr(z - q_scaled)
        return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi) * span ** (k_groups - 1)

    value, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-10, limit=200)
    return min(1.0, k_groups * value)


def studentized_range_sf(q: float, k_groups: int, df: int) -> float:
    """Survival function of the studentized range by nested quadrature.

    The scale mixture over sqrt(chi^2_df / df) is integrated after the
    substitution u = CDF(s), making the outer integrand smooth on (0, 1).
    Absolute tolerance 1e-6; a RuntimeError reports the achieved tolerance
    if the quadrature cannot certify it.
    """
    if q < 0:
        raise ValueError("q must be non-negative")
    if k_groups < 2:
        raise ValueError("k_groups must be >= 2")
    if df < 1:
        raise ValueError("df must be >= 1")
    if q == 0.0:
        return 1.0

    def outer(u: float) -> float:
        s = math.sqrt(chi2.ppf(u, df) / df)
        return _range_cdf_given_scale(q * s, k_groups)

    cdf, err = integrate.quad(outer, 0.0, 1.0, epsabs=1e-7, limit=200)
    if err > 1e-6:
        raise RuntimeError(
            f"studentized range quadrature achieved tolerance {err:.2e} > 1e-6"
        )
    return float(min(1.0, max(0.0, 1.0 - cdf)))


@dataclass(frozen=True)
class TukeyPair:
    """mean_diff is mean(group j) - mean(group i) for the pair (i, j)."""

    i: int
    j: int
    mean_diff: float
    q_stat: float
    p_value: float
    significant: bool


@dataclass(frozen=True)
class TukeyResult:
    pairs: tuple[TukeyPair, ...]
    ms_within: float
    df_within: int


def tukey_hsd(groups: Sequence[Sequence[float]], alpha_sig: float = 0.05) -> TukeyResult:
    """All-pairs Tukey HSD with the Tukey-Kramer unequal-n correction."""
    arrays = _group_arrays(groups)
    _, ssw = _sums_of_squares(arrays)
    df_within = sum(a.size for a in arrays) - len(arrays)
    msw = ssw / df_within
    if msw == 0.0:
        raise ValueError("Tukey HSD undefined: zero within-group variance")

    pairs = []
    for i in range(len(arrays)):
        for j in range(i + 1, len(arrays)):
            diff = float(arrays[j].mean() - arrays[i].mean())
            se = math.sqrt(msw * (1.0 / arrays[i].size + 1.0 / arrays[j].size) / 2.0)
            q_stat = abs(diff) / se
            p_value = studentized_range_sf(q_stat, len(arrays), df_within)
            pairs.append(
                TukeyPair(
                    i=i,
                    j=j,
                    mean_diff=diff,
                    q_stat=float(q_stat),
                    p_value=p_value,
                    significant=p_value < alpha_sig,
                )
            )
    return TukeyResult(pairs=tuple(pairs), ms_within=float(msw), df_within=df_within)
