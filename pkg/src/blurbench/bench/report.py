"""Hand-written SVG charts and CSV tables from a result store."""

from __future__ import annotations

import math
import os
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

from .store import ALL_SCENES, ResultStore, StoreError, rows_to_csv

WIDTH, HEIGHT = 800, 600
MARGIN = {"left": 80, "right": 180, "top": 50, "bottom": 70}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _num(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.floor(lo / step + 1e-9)
    last = math.ceil(hi / step - 1e-9)
    return [round(k * step, 10) + 0.0 for k in range(first, last + 1)]


class Chart:
    """Minimal SVG canvas with a linear y axis and a categorical/linear x axis."""

    def __init__(self, title: str, xlabel: str, ylabel: str, ylim: tuple[float, float]):
        self.parts: list[str] = []
        self.legend: list[tuple[str, str]] = []
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
        ticks = nice_ticks(*ylim)
        self.ylo, self.yhi = ticks[0], ticks[-1]
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self._yaxis(ticks)

    def y(self, v: float) -> float:
        return self.y0 - (v - self.ylo) / (self.yhi - self.ylo) * (self.y0 - self.y1)

    def _yaxis(self, ticks) -> None:
        p = self.parts
        for t in ticks:
            y = self.y(t)
            p.append(f'<line x1="{self.x0}" y1="{y:.2f}" x2="{self.x1}" y2="{y:.2f}" stroke="#e0e0e0"/>')
            p.append(f'<text x="{self.x0 - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="12">{_num(t)}</text>')
        p.append(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x1}" y2="{self.y0}" stroke="black"/>')
        p.append(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x0}" y2="{self.y1}" stroke="black"/>')
        if self.ylo < 0 < self.yhi:
            y = self.y(0.0)
            p.append(f'<line x1="{self.x0}" y1="{y:.2f}" x2="{self.x1}" y2="{y:.2f}" stroke="black" stroke-dasharray="4 3"/>')

    def xticks(self, labels: list[str]) -> list[float]:
        """Evenly spaced category centres, labelled."""
        step = (self.x1 - self.x0) / len(labels)
        xs = [self.x0 + step * (i + 0.5) for i in range(len(labels))]
        for x, lab in zip(xs, labels):
            self.parts.append(f'<line x1="{x:.2f}" y1="{self.y0}" x2="{x:.2f}" y2="{self.y0 + 5}" stroke="black"/>')
            self.parts.append(
                f'<text x="{x:.2f}" y="{self.y0 + 20}" text-anchor="middle" font-size="12">{escape(lab)}</text>'
            )
        return xs

    def polyline(self, xs, ys, color: str, label: str) -> None:
        pts = " ".join(f"{x:.2f},{self.y(v):.2f}" for x, v in zip(xs, ys))
        self.parts.append(f'<polyline class="series" points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, v in zip(xs, ys):
            self.parts.append(f'<circle cx="{x:.2f}" cy="{self.y(v):.2f}" r="3" fill="{color}"/>')
        self.legend.append((label, color))

    def bar(self, x: float, width: float, v: float, color: str) -> None:
        base = self.y(max(self.ylo, min(0.0, self.yhi)))
        top = self.y(v)
        y, h = min(base, top), abs(base - top)
        self.parts.append(f'<rect class="bar" x="{x:.2f}" y="{y:.2f}" width="{width:.2f}" height="{h:.2f}" fill="{color}"/>')

    def render(self) -> str:
        p = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}"'
            ' font-family="sans-serif">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="28" text-anchor="middle" font-size="18">{escape(self.title)}</text>',
            f'<text x="{(self.x0 + self.x1) / 2}" y="{HEIGHT - 20}" text-anchor="middle" font-size="14">'
            f"{escape(self.xlabel)}</text>",
            f'<text x="20" y="{(self.y0 + self.y1) / 2}" text-anchor="middle" font-size="14"'
            f' transform="rotate(-90 20 {(self.y0 + self.y1) / 2})">{escape(self.ylabel)}</text>',
            *self.parts,
        ]
        for i, (label, color) in enumerate(self.legend):
            y = MARGIN["top"] + 10 + 20 * i
            p.append(f'<rect x="{self.x1 + 15}" y="{y - 9}" width="12" height="12" fill="{color}"/>')
            p.append(f'<text x="{self.x1 + 32}" y="{y + 2}" font-size="12">{escape(label)}</text>')
        p.append("</svg>")
        return "\n".join(p) + "\n"


def _series(rows: list[dict]) -> dict[str, dict[int, dict]]:
    """Scene-averaged rows keyed by ``tracker/scheme`` then level."""
    out: dict[str, dict[int, dict]] = defaultdict(dict)
    for r in rows:
        if r["scene"] == ALL_SCENES:
            out[f"{r['tracker']}/{r['scheme']}"][r["level"]] = r
    return dict(sorted(out.items()))


def _line_chart(series, field: str, title: str, ylabel: str, ylim=(0.0, 1.0)) -> str:
    levels = sorted({lv for s in series.values() for lv in s})
    vals = [r[field] for s in series.values() for r in s.values() if r[field] is not None]
    lo, hi = ylim
    if vals:
        lo, hi = min(lo, min(vals)), max(hi, max(vals))
    chart = Chart(title, "blur level L", ylabel, (lo, hi))
    xs = dict(zip(levels, chart.xticks([str(lv) for lv in levels])))
    for i, (name, by_level) in enumerate(series.items()):
        pts = [(xs[lv], by_level[lv][field]) for lv in sorted(by_level) if by_level[lv][field] is not None]
        if pts:
            chart.polyline([x for x, _ in pts], [v for _, v in pts], PALETTE[i % len(PALETTE)], name)
    return chart.render()


def _bar_chart(groups: list[str], series: dict[str, list[float | None]], title: str, xlabel: str, ylabel: str) -> str:
    vals = [v for vs in series.values() for v in vs if v is not None]
    lo = min([0.0] + vals)
    hi = max([0.0] + vals)
    if hi - lo < 1e-12:
        hi = lo + 0.1
    chart = Chart(title, xlabel, ylabel, (lo, hi))
    xs = chart.xticks(groups)
    slot = (chart.x1 - chart.x0) / max(len(groups), 1)
    n = max(len(series), 1)
    width = 0.8 * slot / n
    for i, (name, values) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        for x, v in zip(xs, values):
            if v is not None:
                chart.bar(x - 0.4 * slot + i * width, width, v, color)
        chart.legend.append((name, color))
    return chart.render()


def emit_report(store: ResultStore | str | os.PathLike, out: str | os.PathLike) -> list[Path]:
    """Write the summary CSV and the four charts; returns the written paths."""
    if not isinstance(store, ResultStore):
        store = ResultStore(store)
    rows = store.summary_rows()
    if not rows:
        raise StoreError("result store is empty")
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StoreError(f"cannot write report to {out}: {exc}") from exc
    series = _series(rows)
    files = {
        "summary.csv": rows_to_csv(rows),
        "robustness.svg": _line_chart(series, "auc", "Blur robustness", "AUC"),
        "nrc.svg": _line_chart(series, "nrc", "Normalized robustness curves", "u_L / u_1"),
    }
    for tracker in sorted({name.split("/", 1)[0] for name in series}):
        own = {name: v for name, v in series.items() if name.split("/", 1)[0] == tracker}
        files[f"robustness_{tracker}.svg"] = _line_chart(own, "auc", f"Blur robustness: {tracker}", "AUC")
    names = list(series)
    stats = ("nrs", "mean_auc", "std_auc")
    first = {name: next(iter(series[name].values())) for name in names}
    files["scores.svg"] = _bar_chart(
        names, {s: [first[n][s] for n in names] for s in stats}, "NRS, mean and std of AUC", "tracker/scheme", "score"
    )
    gain_levels = sorted({lv for s in series.values() for lv in s if lv != 1})
    files["gain.svg"] = _bar_chart(
        [str(lv) for lv in gain_levels],
        {n: [series[n][lv]["gain"] if lv in series[n] else None for lv in gain_levels] for n in names},
        "AUC gain over the sharp subset",
        "blur level L",
        "gain",
    )
    written = []
    for name, text in files.items():
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise StoreError(f"cannot write {path}: {exc}") from exc
        written.append(path)
    return written
