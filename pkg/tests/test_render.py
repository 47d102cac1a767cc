import xml.etree.ElementTree as ET

import pytest

from hoteltopics import (
    SweepResult,
    box_stats,
    render_boxplots,
    render_coherence_curve,
    render_scatter,
)

NS = {"svg": "http://www.w3.org/2000/svg"}


def _parse(svg: str) -> ET.Element:
    return ET.fromstring(svg)


def _texts(root) -> list[str]:
    return [el.text or "" for el in root.iter("{http://www.w3.org/2000/svg}text")]


class TestScatter:
    POINTS = [
        ("r1", 0.0, 0.0, 0, 0.9),
        ("r2", 1.0, 1.0, 0, 0.85),
        ("r3", 2.0, 0.5, 1, 0.99),
    ]

    def test_one_circle_per_point_and_legend(self):
        root = _parse(render_scatter(self.POINTS, {0: "bed room", 1: "staff"}))
        circles = root.findall("svg:circle", NS)
        assert len(circles) == 3
        legend_rects = [
            r for r in root.findall("svg:rect", NS) if r.get("fill", "") != "none"
        ]
        assert len(legend_rects) == 2

    def test_titles_carry_review_and_topic(self):
        root = _parse(render_scatter(self.POINTS, {0: "bed", 1: "staff"}))
        titles = [t.text for t in root.iter("{http://www.w3.org/2000/svg}title")]
        assert len(titles) == 3
        assert any("r1" in t and "topic 0" in t for t in titles)
        assert any("staff" in t for t in titles)

    def test_empty_projection_still_valid(self):
        root = _parse(render_scatter([]))
        assert root.tag.endswith("svg")
        assert root.findall("svg:circle", NS) == []


class TestBoxplots:
    def test_degenerate_box_renders(self):
        svg = render_boxplots([box_stats([7, 7, 7], topic=0)])
        root = _parse(svg)
        assert len(root.findall("svg:rect", NS)) >= 1

    def test_axis_ticks_include_1_and_10(self):
        svg = render_boxplots([box_stats([5, 6, 7], topic=0)])
        texts = _texts(_parse(svg))
        assert "1" in texts and "10" in texts

    def test_order_descending_median_tie_topic_index(self):
        boxes = [
            box_stats([3, 3, 3], topic=0),
            box_stats([8, 8, 8], topic=1),
            box_stats([3, 3, 3], topic=2),
        ]
        svg = render_boxplots(boxes)
        texts = [t for t in _texts(_parse(svg)) if t.startswith("topic ")]
        assert texts == ["topic 1", "topic 0", "topic 2"]

    def test_outlier_markers(self):
        svg = render_boxplots([box_stats([1, 1, 1, 1, 10], topic=0)])
        root = _parse(svg)
        hollow = [
            c for c in root.findall("svg:circle", NS) if c.get("fill") == "none"
        ]
        assert len(hollow) == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            render_boxplots([])


class TestCoherenceCurve:
    SWEEP = SweepResult(
        k_values=(5, 6, 7),
        mean_coherence=(0.3, 0.5, 0.4),
        std_coherence=(0.02, 0.0, 0.01),
        runs=20,
        best_k=6,
    )

    def test_max_is_circled(self):
        root = _parse(render_coherence_curve(self.SWEEP))
        rings = [
            c for c in root.findall("svg:circle", NS) if c.get("fill") == "none"
        ]
        assert len(rings) == 1
        filled = [
            c for c in root.findall("svg:circle", NS) if c.get("fill") != "none"
        ]
        middle = sorted(filled, key=lambda c: float(c.get("cx")))[1]
        assert rings[0].get("cx") == middle.get("cx")

    def test_zero_std_renders_zero_length_bar(self):
        root = _parse(render_coherence_curve(self.SWEEP))
        vertical = [
            line
            for line in root.findall("svg:line", NS)
            if line.get("x1") == line.get("x2") and line.get("stroke") == "#1f77b4"
        ]
        assert any(line.get("y1") == line.get("y2") for line in vertical)

    def test_axis_label_present(self):
        texts = _texts(_parse(render_coherence_curve(self.SWEEP)))
        assert "number of topics" in texts

    def test_empty_sweep_rejected(self):
        empty = SweepResult((), (), (), 1, 0)
        with pytest.raises(ValueError):
            render_coherence_curve(empty)
