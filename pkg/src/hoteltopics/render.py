"""Dependency-free SVG views of pipeline results.

Figures are pure renderings: every number they draw also lives in the JSON
report. Scatter points carry native <title> elements so plain SVG viewers show
review id and topic on hover without scripting.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Mapping, Sequence

from .coherence import SweepResult
from .stats import ScoreBox

SVG_NS = "http://www.w3.org/2000/svg"

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
)


def topic_color(topic: int) -> str:
    return PALETTE[topic % len(PALETTE)]


def _svg(width: int, height: int) -> ET.Element:
    return ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "width": str(width),
            "height": str(height),
            "viewBox": f"0 0 {width} {height}",
        },
    )


def _text(parent: ET.Element, x: float, y: float, content: str, size: int = 12,
          anchor: str = "start") -> ET.Element:
    el = ET.SubElement(
        parent,
        "text",
        {"x": f"{x:.2f}", "y": f"{y:.2f}", "font-size": str(size),
         "font-family": "sans-serif", "text-anchor": anchor},
    )
    el.text = content
    return el


def _line(parent: ET.Element, x1: float, y1: float, x2: float, y2: float,
          stroke: str = "#333333", width: float = 1.0) -> None:
    ET.SubElement(
        parent,
        "line",
        {"x1": f"{x1:.2f}", "y1": f"{y1:.2f}", "x2": f"{x2:.2f}",
         "y2": f"{y2:.2f}", "stroke": stroke, "stroke-width": f"{width:g}"},
    )


def _scale(lo: float, hi: float, out_lo: float, out_hi: float):
    span = hi - lo
    if span == 0:
        span = 1.0
        lo -= 0.5
    factor = (out_hi - out_lo) / span

    def to_view(value: float) -> float:
        return out_lo + (value - lo) * factor

    return to_view


def _legend(root: ET.Element, x: float, y: float,
            topics: Sequence[int], topic_labels: Mapping[int, str] | None) -> None:
    for row, topic in enumerate(topics):
        cy = y + row * 18
        ET.SubElement(
            root,
            "rect",
            {"x": f"{x:.2f}", "y": f"{cy:.2f}", "width": "12", "height": "12",
             "fill": topic_color(topic)},
        )
        label = (topic_labels or {}).get(topic, "")
        text = f"topic {topic}" + (f": {label}" if label else "")
        _text(root, x + 18, cy + 10, text)


def render_scatter(
    points: Sequence[tuple],
    topic_labels: Mapping[int, str] | None = None,
    width: int = 720,
    height: int = 520,
) -> str:
    """Scatter of representative reviews: one circle per point, color by topic.

    ``points`` rows are (review_id, x, y, topic[, prob]); an empty sequence
    still yields a valid document with the legend frame.
    """
    root = _svg(width, height)
    margin, legend_w = 40, 170
    plot_right = width - legend_w
    topics = sorted({int(p[3]) for p in points})

    ET.SubElement(
        root,
        "rect",
        {"x": str(margin), "y": str(margin), "width": str(plot_right - 2 * margin),
         "height": str(height - 2 * margin), "fill": "none", "stroke": "#cccccc"},
    )
    if points:
        xs = [float(p[1]) for p in points]
        ys = [float(p[2]) for p in points]
        sx = _scale(min(xs), max(xs), margin + 8, plot_right - margin - 8)
        sy = _scale(min(ys), max(ys), height - margin - 8, margin + 8)
        for row in points:
            review_id, x, y, topic = row[0], float(row[1]), float(row[2]), int(row[3])
            circle = ET.SubElement(
                root,
                "circle",
                {"cx": f"{sx(x):.2f}", "cy": f"{sy(y):.2f}", "r": "3.5",
                 "fill": topic_color(topic), "fill-opacity": "0.85"},
            )
            title = ET.SubElement(circle, "title")
            label = (topic_labels or {}).get(topic, "")
            suffix = f" ({label})" if label else ""
            title.text = f"review {review_id} - topic {topic}{suffix}"
    _legend(root, plot_right - margin + 20, margin, topics, topic_labels)
    return ET.tostring(root, encoding="unicode")


def render_boxplots(
    boxes: Sequence[ScoreBox],
    topic_labels: Mapping[int, str] | None = None,
    width: int = 720,
    height: int = 420,
) -> str:
    """Box-and-whisker glyph per topic on the fixed 1..10 score axis.

    Boxes are ordered by descending median (ties by topic index); outliers
    render as hollow markers.
    """
    if not boxes:
        raise ValueError("need at least one box")
    root = _svg(width, height)
    margin = 48
    sy = _scale(1.0, 10.0, height - margin, margin)

    _line(root, margin, margin, margin, height - margin)
    for tick in range(1, 11):
        y = sy(float(tick))
        _line(root, margin - 4, y, margin, y)
        _text(root, margin - 8, y + 4, str(tick), anchor="end")
    _text(root, 14, height / 2, "score")

    ordered = sorted(boxes, key=lambda b: (-b.median, b.topic if b.topic is not None else 0))
    slot = (width - 2 * margin) / len(ordered)
    box_w = min(42.0, slot * 0.5)
    for pos, box in enumerate(ordered):
        cx = margin + slot * (pos + 0.5)
        color = topic_color(box.topic or 0)
        _line(root, cx, sy(box.min), cx, sy(box.q1))
        _line(root, cx, sy(box.q3), cx, sy(box.max))
        _line(root, cx - box_w / 4, sy(box.min), cx + box_w / 4, sy(box.min))
        _line(root, cx - box_w / 4, sy(box.max), cx + box_w / 4, sy(box.max))
        height_px = abs(sy(box.q1) - sy(box.q3))
        ET.SubElement(
            root,
            "rect",
            {"x": f"{cx - box_w / 2:.2f}", "y": f"{sy(box.q3):.2f}",
             "width": f"{box_w:.2f}", "height": f"{max(height_px, 0.5):.2f}",
             "fill": color, "fill-opacity": "0.35", "stroke": color},
        )
        _line(root, cx - box_w / 2, sy(box.median), cx + box_w / 2, sy(box.median),
              stroke=color, width=2.0)
        for value in box.outliers:
            ET.SubElement(
                root,
                "circle",
                {"cx": f"{cx:.2f}", "cy": f"{sy(value):.2f}", "r": "2.5",
                 "fill": "none", "stroke": color},
            )
        topic_id = box.topic if box.topic is not None else pos
        label = (topic_labels or {}).get(topic_id, "")
        _text(root, cx, height - margin + 16, f"topic {topic_id}", anchor="middle")
        if label:
            _text(root, cx, height - margin + 30, label, size=10, anchor="middle")
    return ET.tostring(root, encoding="unicode")


def render_coherence_curve(
    sweep: SweepResult, width: int = 640, height: int = 420
) -> str:
    """Mean coherence per topic count with +/-1 std error bars; the maximum is
    circled."""
    if not sweep.k_values:
        raise ValueError("empty sweep")
    root = _svg(width, height)
    margin = 52
    ks = [float(k) for k in sweep.k_values]
    means = list(sweep.mean_coherence)
    stds = list(sweep.std_coherence)
    lo = min(m - s for m, s in zip(means, stds))
    hi = max(m + s for m, s in zip(means, stds))
    pad = (hi - lo) * 0.1 or 0.05
    sx = _scale(min(ks), max(ks), margin + 10, width - margin - 10)
    sy = _scale(lo - pad, hi + pad, height - margin, margin)

    _line(root, margin, height - margin, width - margin, height - margin)
    _line(root, margin, margin, margin, height - margin)
    for k, mean in zip(ks, means):
        _text(root, sx(k), height - margin + 16, str(int(k)), anchor="middle")
    _text(root, width / 2, height - margin + 34, "number of topics", anchor="middle")
    _text(root, 14, height / 2, "mean coherence")

    for prev, curr in zip(range(len(ks) - 1), range(1, len(ks))):
        _line(root, sx(ks[prev]), sy(means[prev]), sx(ks[curr]), sy(means[curr]),
              stroke="#1f77b4", width=1.5)
    for k, mean, std in zip(ks, means, stds):
        x = sx(k)
        _line(root, x, sy(mean - std), x, sy(mean + std), stroke="#1f77b4")
        _line(root, x - 4, sy(mean - std), x + 4, sy(mean - std), stroke="#1f77b4")
        _line(root, x - 4, sy(mean + std), x + 4, sy(mean + std), stroke="#1f77b4")
        ET.SubElement(
            root,
            "circle",
            {"cx": f"{x:.2f}", "cy": f"{sy(mean):.2f}", "r": "3",
             "fill": "#1f77b4"},
        )
    best_idx = sweep.k_values.index(sweep.best_k)
    ET.SubElement(
        root,
        "circle",
        {"cx": f"{sx(ks[best_idx]):.2f}", "cy": f"{sy(means[best_idx]):.2f}",
         "r": "8", "fill": "none", "stroke": "#000000", "stroke-width": "1.5"},
    )
    return ET.tostring(root, encoding="unicode")
