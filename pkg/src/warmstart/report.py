"""Tables and an SVG learning-curve plot from a directory of run records."""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from .metrics import DEFAULT_R, LearningCurve, SpeedReport, aggregate
from .training import RunRecord

log = logging.getLogger(__name__)

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


class ReportError(RuntimeError):
    pass


def load_records(folder) -> tuple[dict[str, list[RunRecord]], list[str]]:
    """Arm records found under ``folder`` plus warnings for files that failed to load.

    Old-phase and sequence records are ignored; arms are ordered by name and
    seeds within an arm by seed.
    """
    folder = Path(folder)
    if not folder.is_dir():
        raise ReportError(f"records directory {folder} does not exist")
    records: dict[str, list[RunRecord]] = {}
    warnings = []
    for path in sorted(folder.rglob("*.json")):
        try:
            with open(path) as f:
                raw = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            warnings.append(f"skipped {path.relative_to(folder)}: {exc.__class__.__name__}")
            continue
        if not isinstance(raw, dict) or "eval_iterations" not in raw:
            continue  # configs, metadata
        try:
            rec = RunRecord.from_dict(raw)
        except (TypeError, ValueError) as exc:
            warnings.append(f"skipped {path.relative_to(folder)}: {exc}")
            continue
        if rec.config.get("phase") != "arm":
            continue
        if rec.status != "ok":
            warnings.append(f"skipped {path.relative_to(folder)}: run status {rec.status}")
            continue
        records.setdefault(rec.name, []).append(rec)
    for recs in records.values():
        recs.sort(key=lambda r: r.seed)
    return dict(sorted(records.items())), warnings


def report_from_records(records: dict[str, list[RunRecord]], reference: str = "scratch",
                        target_mode: str = "final", r_values=DEFAULT_R) -> SpeedReport:
    curves = {
        name: [LearningCurve(r.eval_iterations, r.accuracy) for r in recs]
        for name, recs in records.items()
    }
    eval_every = next(iter(records.values()))[0].eval_every if records else None
    return aggregate(curves, reference, target_mode, r_values, eval_every)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def curves_svg(report: SpeedReport, width: int = 720, height: int = 420) -> str:
    """Seed-mean accuracy per arm with a shaded +/- one standard error band."""
    left, right, top, bottom = 60, 200, 20, 50
    pw, ph = width - left - right, height - top - bottom
    x_max = max(int(a.iterations[-1]) for a in report.arms.values()) or 1

    def sx(it):
        return left + pw * it / x_max

    def sy(acc):
        return top + ph * (1.0 - acc)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for tick in np.linspace(0, 1, 6):
        y = sy(tick)
        parts.append(f'<line x1="{left - 4}" y1="{_fmt(y)}" x2="{left}" y2="{_fmt(y)}" stroke="#333"/>')
        parts.append(f'<text x="{left - 8}" y="{_fmt(y + 4)}" text-anchor="end">{tick:.1f}</text>')
    for tick in np.linspace(0, x_max, 5):
        x = sx(tick)
        parts.append(f'<line x1="{_fmt(x)}" y1="{top + ph}" x2="{_fmt(x)}" y2="{top + ph + 4}" stroke="#333"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{top + ph + 16}" text-anchor="middle">{int(round(tick))}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">iteration</text>')
    parts.append(
        f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2})">test accuracy</text>'
    )
    if report.a_scratch is not None:
        y = sy(report.a_scratch)
        parts.append(
            f'<line x1="{left}" y1="{_fmt(y)}" x2="{left + pw}" y2="{_fmt(y)}" '
            'stroke="#999" stroke-dasharray="4 3"/>'
        )
    for i, (name, arm) in enumerate(report.arms.items()):
        color = PALETTE[i % len(PALETTE)]
        xs = [sx(int(t)) for t in arm.iterations]
        hi = np.clip(arm.mean + arm.stderr, 0, 1)
        lo = np.clip(arm.mean - arm.stderr, 0, 1)
        band = [f"{_fmt(x)},{_fmt(sy(v))}" for x, v in zip(xs, hi)]
        band += [f"{_fmt(x)},{_fmt(sy(v))}" for x, v in zip(reversed(xs), lo[::-1])]
        parts.append(f'<polygon class="band" points="{" ".join(band)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{_fmt(x)},{_fmt(sy(v))}" for x, v in zip(xs, arm.mean))
        parts.append(f'<polyline class="mean" points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 14 * i + 10
        parts.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 34}" y="{ly + 4}">{_escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_report(
    records_dir,
    out_dir,
    reference: str = "scratch",
    target_mode: str = "final",
    r_values=DEFAULT_R,
) -> SpeedReport:
    """Write ``report.md``, ``report.csv`` and ``curves.svg`` into ``out_dir``."""
    records, warnings = load_records(records_dir)
    if not records:
        raise ReportError(f"no usable run records under {records_dir}")
    usable = {}
    for name, recs in records.items():
        grids = {tuple(r.eval_iterations) for r in recs}
        if len(grids) > 1:
            warnings.append(f"skipped arm {name}: seeds evaluated on different iteration grids")
            continue
        usable[name] = recs
    if not usable:
        raise ReportError("no arm with a consistent evaluation grid")
    report = report_from_records(usable, reference, target_mode, r_values)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    md = report.to_markdown()
    if warnings:
        md += "\nWarnings:\n" + "".join(f"- {w}\n" for w in warnings)
    (out / "report.md").write_text(md)
    report.to_csv(out / "report.csv")
    (out / "curves.svg").write_text(curves_svg(report))
    for w in warnings:
        log.warning(w)
    return report
