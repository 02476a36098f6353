"""Human-readable result artifacts: CSV/Markdown tables and an SVG chart.

Everything here is a pure function of the summary, so reruns are
byte-identical. The chart is hand-built SVG with no external assets,
which keeps it parseable in tests and free of plotting dependencies.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .evaluate import Summary

_PALETTE = ("#4C72B0", "#DD8452", "#55A868", "#C44E52", "#8172B3", "#937860")


def emit_table(summary: Summary) -> tuple[str, str]:
    """Render (csv_text, markdown_text): one row per dataset, one column
    per condition, balanced accuracy to 3 decimals."""
    header = ["dataset", *summary.conditions]
    rows = [
        [ds, *(f"{summary.balanced_accuracy[c][ds]:.3f}" for c in summary.conditions)]
        for ds in summary.datasets
    ]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    csv_text = buf.getvalue()

    md_lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    for row in rows:
        md_lines.append("| " + " | ".join(row) + " |")
    md_text = "\n".join(md_lines) + "\n"
    return csv_text, md_text


def emit_bar_chart(summary: Summary) -> str:
    """Render a grouped bar chart of balanced accuracy as static SVG.

    One bar group per dataset plus a trailing mean group; y axis fixed
    to [0, 1]. Bars carry data-* attributes so tests can parse heights.
    """
    margin_left, margin_right = 50.0, 20.0
    margin_top, margin_bottom = 40.0, 60.0
    plot_h = 240.0
    bar_w = 18.0
    bar_gap = 4.0
    group_gap = 26.0

    groups = [*summary.datasets, "mean"]
    conditions = summary.conditions
    group_w = len(conditions) * (bar_w + bar_gap) - bar_gap if conditions else bar_w
    plot_w = max(len(groups) * (group_w + group_gap), 120.0)
    width = margin_left + plot_w + margin_right
    height = margin_top + plot_h + margin_bottom
    y0 = margin_top

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        '<text x="8" y="20" font-size="13">Balanced accuracy per dataset and condition</text>',
    ]

    for tick in range(6):
        value = tick / 5.0
        y = y0 + plot_h * (1.0 - value)
        parts.append(
            f'<line x1="{margin_left:.2f}" y1="{y:.2f}" x2="{margin_left + plot_w:.2f}" '
            f'y2="{y:.2f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{margin_left - 8:.2f}" y="{y + 4:.2f}" text-anchor="end">{value:.1f}</text>'
        )

    if not summary.datasets:
        parts.append(
            f'<text x="{margin_left + plot_w / 2:.2f}" y="{y0 + plot_h / 2:.2f}" '
            f'text-anchor="middle" fill="#888888">no data</text>'
        )
    else:
        for gi, group in enumerate(groups):
            gx = margin_left + group_gap / 2 + gi * (group_w + group_gap)
            for ci, cond in enumerate(conditions):
                if group == "mean":
                    value = summary.mean_balanced_accuracy[cond]
                else:
                    value = summary.balanced_accuracy[cond][group]
                h = value * plot_h
                x = gx + ci * (bar_w + bar_gap)
                y = y0 + plot_h - h
                parts.append(
                    f'<rect class="bar" data-group="{group}" data-condition="{cond}" '
                    f'data-value="{value:.6f}" x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
                    f'height="{h:.2f}" fill="{_PALETTE[ci % len(_PALETTE)]}"/>'
                )
            label_x = gx + group_w / 2
            parts.append(
                f'<text x="{label_x:.2f}" y="{y0 + plot_h + 16:.2f}" text-anchor="middle">'
                f"{group}</text>"
            )

    legend_x = margin_left
    for ci, cond in enumerate(conditions):
        x = legend_x + ci * 110.0
        y = height - 22.0
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="12" height="12" '
            f'fill="{_PALETTE[ci % len(_PALETTE)]}"/>'
        )
        parts.append(f'<text x="{x + 16:.2f}" y="{y + 10:.2f}">{cond}</text>')

    baseline = y0 + plot_h
    parts.append(
        f'<line x1="{margin_left:.2f}" y1="{baseline:.2f}" x2="{margin_left + plot_w:.2f}" '
        f'y2="{baseline:.2f}" stroke="#333333"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report_artifacts(summary: Summary, out_dir: str | Path) -> dict[str, Path]:
    """Write the CSV table, Markdown table, and SVG chart into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_text, md_text = emit_table(summary)
    svg_text = emit_bar_chart(summary)
    paths = {
        "csv": out_dir / "summary_table.csv",
        "markdown": out_dir / "summary_table.md",
        "svg": out_dir / "balanced_accuracy.svg",
    }
    paths["csv"].write_text(csv_text, encoding="utf-8")
    paths["markdown"].write_text(md_text, encoding="utf-8")
    paths["svg"].write_text(svg_text, encoding="utf-8")
    return paths
