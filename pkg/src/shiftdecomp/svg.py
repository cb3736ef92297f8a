"""Horizontal bar charts with CI whiskers, rendered as deterministic SVG."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .errors import DataError
from .report import DecompositionReport

AGG_LABELS = {"lambda_W": "Baseline W shift", "lambda_Z": "Cond. covariate shift",
              "lambda_Y": "Cond. outcome shift"}
ROW, LEFT, PLOT, RIGHT, TOP = 26, 170, 360, 90, 40


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _bars(title: str, rows: list[tuple[str, float, float, float]], total: float | None = None) -> str:
    """rows: (label, point, lo, hi) in display order."""
    values = [v for _, p, lo, hi in rows for v in (p, lo, hi)] + [0.0]
    if total is not None:
        values.append(total)
    vmin, vmax = min(values), max(values)
    if vmax - vmin < 1e-12:
        vmin, vmax = vmin - 1.0, vmax + 1.0
    pad = 0.05 * (vmax - vmin)
    vmin, vmax = vmin - pad, vmax + pad

    def sx(v: float) -> float:
        return LEFT + (v - vmin) / (vmax - vmin) * PLOT

    height = TOP + ROW * len(rows) + (30 if total is not None else 10) + 20
    width = LEFT + PLOT + RIGHT
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{sx(0):.2f}" y1="{TOP - 6}" x2="{sx(0):.2f}" y2="{TOP + ROW * len(rows)}" '
        f'stroke="#444" stroke-width="1"/>',
    ]
    for i, (label, p, lo, hi) in enumerate(rows):
        y = TOP + i * ROW
        x0, x1 = sorted((sx(0), sx(p)))
        mid = y + ROW / 2 - 2
        out += [
            f'<g class="bar" data-label="{escape(label)}" data-point="{_fmt(p)}" '
            f'data-ci-lo="{_fmt(lo)}" data-ci-hi="{_fmt(hi)}">',
            f'<text x="{LEFT - 8}" y="{mid + 4:.1f}" text-anchor="end">{escape(label)}</text>',
            f'<rect x="{x0:.2f}" y="{y + 4}" width="{x1 - x0:.2f}" height="{ROW - 12}" fill="#4c78a8"/>',
            f'<line x1="{sx(lo):.2f}" y1="{mid:.1f}" x2="{sx(hi):.2f}" y2="{mid:.1f}" stroke="#000"/>',
            f'<line x1="{sx(lo):.2f}" y1="{mid - 5:.1f}" x2="{sx(lo):.2f}" y2="{mid + 5:.1f}" stroke="#000"/>',
            f'<line x1="{sx(hi):.2f}" y1="{mid - 5:.1f}" x2="{sx(hi):.2f}" y2="{mid + 5:.1f}" stroke="#000"/>',
            f'<text x="{LEFT + PLOT + 6}" y="{mid + 4:.1f}">{_fmt(p)}</text>',
            "</g>",
        ]
    if total is not None:
        y = TOP + ROW * len(rows) + 14
        out += [
            f'<g class="total" data-point="{_fmt(total)}">',
            f'<path d="M {sx(total):.2f} {y - 6} l 6 6 l -6 6 l -6 -6 z" fill="#e45756"/>',
            f'<text x="{LEFT - 8}" y="{y + 4}" text-anchor="end">Total gap</text>',
            f'<text x="{LEFT + PLOT + 6}" y="{y + 4}">{_fmt(total)}</text>',
            "</g>",
        ]
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(report: DecompositionReport, panel: str = "aggregate") -> str:
    """Chart one report section: ``aggregate``, ``covariate`` or ``outcome``.

    Detailed panels show one bar per variable, sorted by attribution
    (largest first; ties keep variable order).
    """
    if panel == "aggregate":
        agg = report.aggregate
        if not agg:
            raise DataError("report has no aggregate section to render")
        rows = [(AGG_LABELS[k], agg[k]["point"], agg[k]["ci_lo"], agg[k]["ci_hi"]) for k in AGG_LABELS]
        return _bars("Aggregate decomposition", rows, agg["total"]["point"])
    if panel not in ("covariate", "outcome"):
        raise DataError(f"unknown panel {panel!r}")
    sec = report.detailed.get(panel)
    if not sec or len(sec.get("phi", [])) < 2:
        raise DataError(f"report has no {panel} attribution to render")
    phi = sec["phi"][1:]
    order = sorted(range(len(phi)), key=lambda j: (-phi[j]["point"], j))
    rows = [(phi[j]["name"], phi[j]["point"], phi[j]["ci_lo"], phi[j]["ci_hi"]) for j in order]
    return _bars(f"Detailed decomposition: conditional {panel} shift", rows)
