"""Summary tables (CSV/Markdown) and SVG figures.

Everything written here is deterministic: identical inputs give
byte-identical files. SVG is emitted by hand as plain SVG 1.1 with no
external references.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

from .errors import LengthMismatch, MixedActivities, SchemaError
from .kinematics import ACTIVITY_NAMES, AngleSeries
from .metrics import METRICS, OVERALL, PER_ACTIVITY, RECORD_FIELDS, MetricsRecord, SummaryTable

METRIC_LABELS = {
    "rmse": "RMSE",
    "mae": "MAE",
    "nrmse": "NRMSE",
    "pearson": "Correlation",
    "r2": "R²",
}
METRIC_UNITS = {"rmse": "deg", "mae": "deg", "nrmse": "", "pearson": "", "r2": ""}
LOWER_IS_BETTER = {"rmse", "mae", "nrmse"}
# metrics with per-activity bar charts
BAR_METRICS = ("rmse", "mae", "pearson", "r2")

DEFAULT_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#17becf",
)
REFERENCE_COLOR = "#000000"


# --------------------------------------------------------------------------
# records CSV
# --------------------------------------------------------------------------


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def write_records_csv(records: Sequence[MetricsRecord], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([r.subject_id, r.activity_id, r.model] + [_num(getattr(r, f)) for f in RECORD_FIELDS[3:]])
    return path


def read_records_csv(path: str | Path) -> list[MetricsRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != list(RECORD_FIELDS):
            raise SchemaError("header", f"expected columns {','.join(RECORD_FIELDS)}")
        records = []
        for row in reader:
            try:
                opt = {k: (float(row[k]) if row[k] != "" else None) for k in ("rmse", "nrmse", "mae", "pearson", "r2", "fit_rmse")}
                records.append(
                    MetricsRecord(
                        subject_id=row["subject_id"],
                        activity_id=row["activity_id"],
                        model=row["model"],
                        n_samples=int(row["n_samples"]),
                        offset=int(row["offset"]) if row["offset"] != "" else None,
                        **opt,
                    )
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"line {reader.line_num}", str(exc)) from None
    return records


# --------------------------------------------------------------------------
# summary tables
# --------------------------------------------------------------------------


def _cell_text(cell) -> str:
    return "n/a" if cell is None else f"{cell.mean:.2f} ± {cell.std:.2f}"


def table_rows(table: SummaryTable, metric: Optional[str] = None) -> tuple[list[str], list[list[str]]]:
    """Header and rows with ``mean ± std`` cells at two decimals.

    Overall groupings give one row per model and one column per metric.
    The per-activity grouping gives one row per activity and one column per
    model for a single ``metric``.
    """
    models = table.models
    if table.grouping == PER_ACTIVITY:
        metric = metric or "rmse"
        header = ["ID", "Legend", *models]
        rows = [
            [a, ACTIVITY_NAMES.get(a, "")] + [_cell_text(table.get(a, m, metric=metric)) for m in models]
            for a in table.activities
        ]
        return header, rows
    header = ["Model", *(METRIC_LABELS[m] for m in METRICS)]
    rows = [[model] + [_cell_text(table.get(model, metric=m)) for m in METRICS] for model in models]
    return header, rows


def _markdown(header: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def write_summary_table(table: SummaryTable, fmt: str, path: str | Path, metric: Optional[str] = None) -> Path:
    """Write a summary table as ``markdown`` (rounded) or ``csv`` (full precision).

    Markdown for the per-activity grouping holds one section per metric unless
    ``metric`` picks one. CSV is long-form with ``<metric>_mean``,
    ``<metric>_std`` and ``<metric>_n`` columns.
    """
    path = Path(path)
    if not table.cells:
        raise ValueError("empty summary table")
    if fmt == "markdown":
        if table.grouping == PER_ACTIVITY:
            metrics = [metric] if metric else list(METRICS)
            parts = [f"## {METRIC_LABELS[m]}\n\n" + _markdown(*table_rows(table, m)) for m in metrics]
            text = "\n".join(parts)
        else:
            text = _markdown(*table_rows(table))
        path.write_text(text, encoding="utf-8")
        return path
    if fmt != "csv":
        raise ValueError(f"unknown table format {fmt!r}")

    keys = ["activity_id", "activity_name", "model"] if table.grouping == PER_ACTIVITY else ["model"]
    header = keys + [f"{m}_{s}" for m in METRICS for s in ("mean", "std", "n")]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for group, cells in sorted(table.cells.items()):
            row = list(group)
            if table.grouping == PER_ACTIVITY:
                row.insert(1, ACTIVITY_NAMES.get(group[0], ""))
            for m in METRICS:
                c = cells.get(m)
                row += ["", "", "0"] if c is None else [repr(c.mean), repr(c.std), str(c.count)]
            w.writerow(row)
    return path


# --------------------------------------------------------------------------
# SVG
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PlotSpec:
    kind: str = "overlay"
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    width: int = 900
    height: int = 480

    def __post_init__(self):
        if self.kind not in ("overlay", "metric_bars", "summary_bars"):
            raise ValueError(f"unknown plot kind {self.kind!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("width and height must be positive")


def load_palette() -> tuple[str, ...]:
    """Default palette, or one colour per line from $KINEBENCH_PALETTE."""
    override = os.environ.get("KINEBENCH_PALETTE")
    if override:
        colours = [ln.strip() for ln in Path(override).read_text(encoding="utf-8").splitlines()]
        colours = [c for c in colours if c and not c.startswith("#!")]
        if colours:
            return tuple(colours)
    return DEFAULT_PALETTE


def assign_colors(models: Sequence[str], palette: Sequence[str] | None = None) -> dict[str, str]:
    """Stable model -> colour map.

    Each model hashes (md5 of its name) to a palette slot; clashes within
    one figure move to the next free slot, resolved in sorted-name order.
    """
    palette = tuple(palette or load_palette())
    taken: set[int] = set()
    out = {}
    for name in sorted(set(models)):
        slot = int(hashlib.md5(name.encode("utf-8")).hexdigest(), 16) % len(palette)
        if len(taken) < len(palette):
            while slot in taken:
                slot = (slot + 1) % len(palette)
        taken.add(slot)
        out[name] = palette[slot]
    return out


def _f(v: float) -> str:
    return f"{v:.3f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


class _Svg:
    def __init__(self, spec: PlotSpec):
        self.spec = spec
        self.parts: list[str] = []

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self, x, y, s, size=12, anchor="start", cls=None, rotate=None) -> None:
        attrs = f'x="{_f(x)}" y="{_f(y)}" font-size="{size}" text-anchor="{anchor}" font-family="sans-serif"'
        if cls:
            attrs += f' class="{cls}"'
        if rotate is not None:
            attrs += f' transform="rotate({rotate} {_f(x)} {_f(y)})"'
        self.add(f"<text {attrs}>{escape(s)}</text>")

    def line(self, x1, y1, x2, y2, stroke="#444444", width=1.0, cls=None) -> None:
        c = f' class="{cls}"' if cls else ""
        self.add(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{stroke}" stroke-width="{width}"{c}/>'
        )

    def render(self) -> str:
        w, h = self.spec.width, self.spec.height
        head = (
            '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n'
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.render(), encoding="utf-8")
        return path


@dataclass
class _Frame:
    left: float
    top: float
    right: float
    bottom: float
    y_min: float
    y_max: float
    x_min: float = 0.0
    x_max: float = 1.0

    def px_y(self, v: float) -> float:
        return self.bottom - (v - self.y_min) / (self.y_max - self.y_min) * (self.bottom - self.top)

    def px_x(self, v: float) -> float:
        span = self.x_max - self.x_min or 1.0
        return self.left + (v - self.x_min) / span * (self.right - self.left)


def _layout(spec: PlotSpec, legend_width: float = 170.0) -> tuple[float, float, float, float]:
    return 70.0, 50.0, spec.width - legend_width, spec.height - 60.0


def _axes(svg: _Svg, fr: _Frame, spec: PlotSpec, x_ticks: Optional[list[float]] = None) -> None:
    svg.add(
        f'<g class="plot-area" data-left="{_f(fr.left)}" data-top="{_f(fr.top)}" data-right="{_f(fr.right)}" '
        f'data-bottom="{_f(fr.bottom)}" data-y-min="{float(fr.y_min)!r}" data-y-max="{float(fr.y_max)!r}"/>'
    )
    svg.line(fr.left, fr.top, fr.left, fr.bottom, cls="axis")
    svg.line(fr.left, fr.bottom, fr.right, fr.bottom, cls="axis")
    for t in _nice_ticks(fr.y_min, fr.y_max):
        y = fr.px_y(t)
        svg.line(fr.left - 4, y, fr.left, y, cls="tick")
        svg.line(fr.left, y, fr.right, y, stroke="#e5e5e5", width=0.5, cls="grid")
        svg.text(fr.left - 7, y + 4, f"{t:g}", size=11, anchor="end")
    for t in x_ticks or []:
        x = fr.px_x(t)
        svg.line(x, fr.bottom, x, fr.bottom + 4, cls="tick")
        svg.text(x, fr.bottom + 17, f"{t:g}", size=11, anchor="middle")
    if spec.title:
        svg.text(spec.width / 2, 28, spec.title, size=16, anchor="middle", cls="title")
    if spec.x_label:
        svg.text((fr.left + fr.right) / 2, spec.height - 18, spec.x_label, size=12, anchor="middle", cls="x-label")
    if spec.y_label:
        svg.text(18, (fr.top + fr.bottom) / 2, spec.y_label, size=12, anchor="middle", cls="y-label", rotate=-90)


def _legend(svg: _Svg, spec: PlotSpec, entries: list[tuple[str, str]], top: float = 60.0) -> None:
    x = spec.width - 160.0
    svg.add('<g class="legend">')
    for i, (label, colour) in enumerate(entries):
        y = top + 20 * i
        svg.add(f'<rect x="{_f(x)}" y="{_f(y - 9)}" width="14" height="10" fill="{colour}"/>')
        svg.text(x + 20, y, label, size=12, cls="legend-entry")
    svg.add("</g>")


def _padded_range(values: list[float], include_zero: bool) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if include_zero:
        lo, hi = min(lo, 0.0), max(hi, 0.0)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    if include_zero:
        return (lo - pad if lo < 0 else lo), (hi + pad if hi > 0 else hi)
    return lo - pad, hi + pad


def plot_overlay(
    ref: AngleSeries,
    estimates: Sequence[tuple[str, AngleSeries]],
    spec: PlotSpec,
    path: str | Path,
    ref_label: str = "IMU",
) -> Path:
    """Reference and model trajectories on a shared time axis, one polyline each."""
    n = len(ref)
    if n < 2:
        raise LengthMismatch("overlay needs at least 2 samples")
    for name, s in estimates:
        if len(s) != n:
            raise LengthMismatch(f"{name}: {len(s)} samples, reference has {n}")
    all_vals = [float(v) for v in ref.values] + [float(v) for _, s in estimates for v in s.values]
    y_min, y_max = _padded_range(all_vals, include_zero=False)
    left, top, right, bottom = _layout(spec)
    duration = (n - 1) / ref.sample_rate_hz
    fr = _Frame(left, top, right, bottom, y_min, y_max, 0.0, duration)
    svg = _Svg(spec)
    _axes(svg, fr, spec, _nice_ticks(0.0, duration))

    colours = assign_colors([m for m, _ in estimates])
    series = [(ref_label, ref, REFERENCE_COLOR)] + [(m, s, colours[m]) for m, s in estimates]
    for label, s, colour in series:
        pts = " ".join(f"{_f(fr.px_x(i / s.sample_rate_hz))},{_f(fr.px_y(float(v)))}" for i, v in enumerate(s.values))
        svg.add(
            f'<polyline class="series" data-label={quoteattr(label)} fill="none" stroke="{colour}" '
            f'stroke-width="1.5" points="{pts}"/>'
        )
    _legend(svg, spec, [(label, colour) for label, _, colour in series])
    return svg.write(path)


def plot_metric_bars(records: Sequence[MetricsRecord], metric: str, spec: PlotSpec, path: str | Path) -> Path:
    """Grouped bars: one group per subject, one bar per model.

    An absent metric leaves a gap labelled ``n/a`` instead of a zero bar.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to plot")
    activities = {r.activity_id for r in records}
    if len(activities) > 1:
        raise MixedActivities(f"records span activities {sorted(activities)}")
    subjects = sorted({r.subject_id for r in records})
    models = sorted({r.model for r in records})
    lookup = {(r.subject_id, r.model): r.metric(metric) for r in records}
    present = [v for v in lookup.values() if v is not None]
    y_min, y_max = _padded_range(present or [0.0], include_zero=True)

    left, top, right, bottom = _layout(spec)
    fr = _Frame(left, top, right, bottom, y_min, y_max)
    svg = _Svg(spec)
    _axes(svg, fr, spec)
    colours = assign_colors(models)
    group_w = (right - left) / len(subjects)
    bar_w = group_w * 0.8 / len(models)
    zero = fr.px_y(0.0)
    for gi, subject in enumerate(subjects):
        g0 = left + gi * group_w + group_w * 0.1
        svg.text(g0 + group_w * 0.4, bottom + 17, subject, size=11, anchor="middle", cls="group-label")
        for mi, model in enumerate(models):
            x = g0 + mi * bar_w
            v = lookup.get((subject, model))
            if v is None:
                svg.text(x + bar_w / 2, zero - 4, "n/a", size=10, anchor="middle", cls="absent")
                continue
            y = fr.px_y(v)
            svg.add(
                f'<rect class="bar" data-subject={quoteattr(subject)} data-model={quoteattr(model)} '
                f'data-value="{float(v)!r}" x="{_f(x)}" y="{_f(min(y, zero))}" width="{_f(bar_w * 0.92)}" '
                f'height="{_f(abs(zero - y))}" fill="{colours[model]}"/>'
            )
    _legend(svg, spec, [(m, colours[m]) for m in models])
    return svg.write(path)


def normalized_scores(table: SummaryTable) -> tuple[dict[str, dict[str, float]], list[str]]:
    """Per-metric min-max scaling of model means onto [0, 1].

    Returns ``scores[metric][model]`` and the metrics whose values were all
    equal; those sit at 0.5. Orientation is not flipped.
    """
    if table.grouping == PER_ACTIVITY:
        raise ValueError("normalized summary needs an overall grouping")
    models = table.models
    if len(models) < 2:
        raise ValueError("normalized summary needs at least 2 models")
    scores: dict[str, dict[str, float]] = {}
    degenerate = []
    for m in METRICS:
        vals = {model: table.get(model, metric=m).mean for model in models if table.get(model, metric=m) is not None}
        if not vals:
            continue
        lo, hi = min(vals.values()), max(vals.values())
        if hi == lo:
            degenerate.append(m)
            scores[m] = {k: 0.5 for k in vals}
        else:
            scores[m] = {k: (v - lo) / (hi - lo) for k, v in vals.items()}
    return scores, degenerate


def normalized_summary_bars(table: SummaryTable, spec: PlotSpec, path: str | Path) -> Path:
    scores, degenerate = normalized_scores(table)
    models = table.models
    metrics = list(scores)
    left, top, right, bottom = _layout(spec, legend_width=200.0)
    fr = _Frame(left, top, right, bottom, 0.0, 1.05)
    svg = _Svg(spec)
    _axes(svg, fr, spec)
    colours = assign_colors(models)
    group_w = (right - left) / len(metrics)
    bar_w = group_w * 0.8 / len(models)
    for gi, m in enumerate(metrics):
        g0 = left + gi * group_w + group_w * 0.1
        hint = "lower is better" if m in LOWER_IS_BETTER else "higher is better"
        svg.text(g0 + group_w * 0.4, bottom + 17, METRIC_LABELS[m], size=11, anchor="middle", cls="group-label")
        svg.text(g0 + group_w * 0.4, bottom + 30, hint, size=9, anchor="middle", cls="orientation")
        for mi, model in enumerate(models):
            if model not in scores[m]:
                continue
            v = scores[m][model]
            x = g0 + mi * bar_w
            y = fr.px_y(v)
            svg.add(
                f'<rect class="bar" data-metric="{m}" data-model={quoteattr(model)} data-value="{float(v)!r}" '
                f'x="{_f(x)}" y="{_f(y)}" width="{_f(bar_w * 0.92)}" height="{_f(bottom - y)}" fill="{colours[model]}"/>'
            )
        if m in degenerate:
            svg.text(g0 + group_w * 0.4, fr.px_y(0.5) - 6, "all models equal", size=9, anchor="middle", cls="degenerate")
    _legend(svg, spec, [(model, colours[model]) for model in models])
    return svg.write(path)


# --------------------------------------------------------------------------
# bundles
# --------------------------------------------------------------------------


def summary_outputs(records: Sequence[MetricsRecord], out_dir: str | Path, ddof: int = 0) -> list[Path]:
    """All record-derived outputs: summary tables, bar charts, normalized bars."""
    from .metrics import aggregate

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for grouping in (OVERALL, PER_ACTIVITY):
        table = aggregate(records, grouping, ddof=ddof)
        written.append(write_summary_table(table, "csv", out / f"summary_{grouping}.csv"))
        written.append(write_summary_table(table, "markdown", out / f"summary_{grouping}.md"))
    overall = aggregate(records, OVERALL, ddof=ddof)
    for activity in sorted({r.activity_id for r in records}):
        subset = [r for r in records if r.activity_id == activity]
        name = ACTIVITY_NAMES.get(activity, "")
        for m in BAR_METRICS:
            unit = f" ({METRIC_UNITS[m]})" if METRIC_UNITS[m] else ""
            spec = PlotSpec(
                "metric_bars",
                title=f"{METRIC_LABELS[m]} per subject and model, {activity} {name}".rstrip(),
                x_label="Subject",
                y_label=f"{METRIC_LABELS[m]}{unit}",
            )
            written.append(plot_metric_bars(subset, m, spec, out / f"{activity}_{m}.svg"))
    if len(overall.models) >= 2:
        spec = PlotSpec("summary_bars", title="Normalized overall metrics", y_label="Min-max scaled value")
        written.append(normalized_summary_bars(overall, spec, out / "summary_normalized.svg"))
    return written
