import csv
import io
import xml.etree.ElementTree as ET

import pytest

from entail.evaluate import Summary, aggregate_reports
from entail.reporting import emit_bar_chart, emit_table, write_report_artifacts

from .test_evaluate import quick_report


@pytest.fixture
def summary() -> Summary:
    reports = {
        "all": {"ag": quick_report("ag", 0.8125), "imdb": quick_report("imdb", 0.9)},
        "nli-only": {"ag": quick_report("ag", 0.75), "imdb": quick_report("imdb", 0.8)},
        "heldout": {"ag": quick_report("ag", 0.7), "imdb": quick_report("imdb", 0.85)},
    }
    return aggregate_reports(reports)


def bars(svg_text: str):
    root = ET.fromstring(svg_text)
    return [
        el
        for el in root.iter()
        if el.tag.endswith("rect") and el.attrib.get("class") == "bar"
    ]


class TestTable:
    def test_csv_parses_back_to_the_summary(self, summary):
        csv_text, _ = emit_table(summary)
        rows = list(csv.reader(io.StringIO(csv_text)))
        assert rows[0] == ["dataset", "all", "nli-only", "heldout"]
        assert rows[1] == ["ag", "0.812", "0.750", "0.700"]
        assert rows[2] == ["imdb", "0.900", "0.800", "0.850"]

    def test_markdown_has_aligned_columns(self, summary):
        _, md_text = emit_table(summary)
        lines = md_text.splitlines()
        assert lines[0].startswith("| dataset |")
        assert set(lines[1].replace("|", "").split()) == {"---"}
        assert len(lines) == 2 + len(summary.datasets)
        assert all(line.count("|") == len(summary.conditions) + 2 for line in lines)


class TestBarChart:
    def test_svg_is_well_formed_with_one_bar_per_cell(self, summary):
        svg = emit_bar_chart(summary)
        found = bars(svg)
        # One group per dataset plus the mean group.
        assert len(found) == (len(summary.datasets) + 1) * len(summary.conditions)

    def test_bar_values_and_heights_encode_balanced_accuracy(self, summary):
        svg = emit_bar_chart(summary)
        for bar in bars(svg):
            group = bar.attrib["data-group"]
            cond = bar.attrib["data-condition"]
            if group == "mean":
                expected = summary.mean_balanced_accuracy[cond]
            else:
                expected = summary.balanced_accuracy[cond][group]
            assert float(bar.attrib["data-value"]) == pytest.approx(expected, abs=1e-6)
            assert float(bar.attrib["height"]) == pytest.approx(expected * 240.0, abs=0.01)

    def test_empty_summary_renders_a_placeholder(self):
        empty = Summary(
            conditions=("all",),
            datasets=(),
            balanced_accuracy={"all": {}},
            mean_balanced_accuracy={"all": 0.0},
            deltas={},
            negative_transfer=(),
        )
        svg = emit_bar_chart(empty)
        assert "no data" in svg
        assert bars(svg) == []

    def test_output_is_byte_deterministic(self, summary):
        assert emit_bar_chart(summary) == emit_bar_chart(summary)
        assert emit_table(summary) == emit_table(summary)


def test_write_report_artifacts(tmp_path, summary):
    paths = write_report_artifacts(summary, tmp_path / "out")
    assert sorted(p.name for p in paths.values()) == [
        "balanced_accuracy.svg",
        "summary_table.csv",
        "summary_table.md",
    ]
    for path in paths.values():
        assert path.read_text(encoding="utf-8")
