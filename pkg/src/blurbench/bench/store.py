"""On-disk result store and summary tables.

Layout::

    <root>/plan.json           the plan that produced the store
    <root>/cells/<hash>.json   one per-frame record per cell
    <root>/summary.csv         derived; always recomputable from the cells
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import defaultdict
from pathlib import Path

from ..metrics import MetricError, auc_of, nrc, robustness_profile, success_frames

SUMMARY_NAME = "summary.csv"
SUMMARY_COLUMNS = ("tracker", "scheme", "scene", "level", "auc", "gain", "nrc", "nrs", "mean_auc", "std_auc", "frames", "failed")
ALL_SCENES = "ALL"


class StoreError(OSError):
    pass


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


class ResultStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.cells_dir = self.root / "cells"
        try:
            self.cells_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreError(f"cannot create result store at {self.root}: {exc}") from exc
        if not os.access(self.cells_dir, os.W_OK):
            raise StoreError(f"result store {self.root} is not writable")

    def path(self, digest: str) -> Path:
        return self.cells_dir / f"{digest}.json"

    def has(self, digest: str) -> bool:
        p = self.path(digest)
        if not p.exists():
            return False
        try:
            json.loads(p.read_text())
        except (OSError, json.JSONDecodeError):
            return False  # truncated write; recompute
        return True

    def commit(self, record: dict) -> None:
        _atomic_write(self.path(record["hash"]), json.dumps(record, sort_keys=True, indent=1))

    def write_plan(self, plan: dict) -> None:
        _atomic_write(self.root / "plan.json", json.dumps(plan, sort_keys=True, indent=2))

    def records(self, digests: list[str] | None = None) -> list[dict]:
        if digests is None:
            paths = sorted(self.cells_dir.glob("*.json"))
        else:
            paths = [self.path(d) for d in digests]
        out = []
        for p in paths:
            if p.exists():
                out.append(json.loads(p.read_text()))
        return out

    def summary_rows(self, digests: list[str] | None = None) -> list[dict]:
        return summarize(self.records(digests))

    def write_summary(self, digests: list[str] | None = None) -> Path:
        rows = self.summary_rows(digests)
        if digests is None and not rows:
            raise StoreError("result store is empty")
        path = self.root / SUMMARY_NAME
        _atomic_write(path, rows_to_csv(rows))
        return path

    def __len__(self) -> int:
        return sum(1 for _ in self.cells_dir.glob("*.json"))


def frame_ious(record: dict) -> list[float]:
    """IoUs of frames 1..n-1; frame 0 is the initialisation and is skipped.

    Frames a failed run never reached count as IoU 0.
    """
    n = record["n_frames"]
    ious = [0.0] * max(n - 1, 0)
    for fr in record["frames"]:
        if fr["frame"] >= 1:
            ious[fr["frame"] - 1] = fr["iou"]
    return ious


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


def _group_summary(by_level: dict[int, dict]) -> dict:
    """AUC, gain and NRC for one (tracker, scheme, scene)."""
    ious = {lv: frame_ious(r) for lv, r in by_level.items() if r["n_frames"] > 1}
    aucs = {lv: auc_of(v) for lv, v in ious.items()}
    out = {"auc": aucs, "gain": {}, "nrc": {}, "nrs": None, "profile": None}
    if 1 in aucs:
        out["gain"] = {lv: a - aucs[1] for lv, a in aucs.items()}
        try:
            curve = nrc(ious, success_frames(ious[1]))
            out["nrc"], out["nrs"] = curve.u, curve.nrs
        except MetricError:
            pass
    try:
        out["profile"] = robustness_profile(aucs, sorted(by_level))
    except MetricError:
        pass
    return out


def summarize(records: list[dict]) -> list[dict]:
    groups: dict[tuple, dict[int, dict]] = defaultdict(dict)
    for r in records:
        groups[(r["tracker"], r["scheme"], r["scene_id"])][r["level"]] = r
    rows = []
    pooled: dict[tuple, list[tuple[dict, dict]]] = defaultdict(list)
    for (tracker, scheme, scene), by_level in sorted(groups.items()):
        s = _group_summary(by_level)
        pooled[(tracker, scheme)].append((s, by_level))
        for lv in sorted(by_level):
            r = by_level[lv]
            rows.append(
                _row(
                    tracker, scheme, scene, lv,
                    s["auc"].get(lv), s["gain"].get(lv), s["nrc"].get(lv), s["nrs"],
                    s["profile"], max(r["n_frames"] - 1, 0), 1 if r.get("error") else 0,
                )
            )
    # averages over scenes
    for (tracker, scheme), members in sorted(pooled.items()):
        levels = sorted({lv for _, by in members for lv in by})
        auc_mean, gain_mean, nrc_mean = {}, {}, {}
        for lv in levels:
            vals = [s["auc"][lv] for s, _ in members if lv in s["auc"]]
            if vals:
                auc_mean[lv] = _mean(vals)
            vals = [s["gain"][lv] for s, _ in members if lv in s["gain"]]
            if vals:
                gain_mean[lv] = _mean(vals)
            vals = [s["nrc"][lv] for s, _ in members if lv in s["nrc"]]
            if vals:
                nrc_mean[lv] = _mean(vals)
        nrs_vals = [s["nrs"] for s, _ in members if s["nrs"] is not None]
        nrs = _mean(nrs_vals) if nrs_vals else None
        try:
            profile = robustness_profile(auc_mean, levels)
        except MetricError:
            profile = None
        for lv in levels:
            frames = sum(max(by[lv]["n_frames"] - 1, 0) for _, by in members if lv in by)
            failed = sum(1 for _, by in members if lv in by and by[lv].get("error"))
            rows.append(
                _row(tracker, scheme, ALL_SCENES, lv, auc_mean.get(lv), gain_mean.get(lv),
                     nrc_mean.get(lv), nrs, profile, frames, failed)
            )
    return rows


def _row(tracker, scheme, scene, level, auc, gain, nrc_u, nrs, profile, frames, failed) -> dict:
    return {
        "tracker": tracker,
        "scheme": scheme,
        "scene": scene,
        "level": level,
        "auc": auc,
        "gain": gain,
        "nrc": nrc_u,
        "nrs": nrs,
        "mean_auc": profile.mean_auc if profile else None,
        "std_auc": profile.std_auc if profile else None,
        "frames": frames,
        "failed": failed,
    }


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def read_summary(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["level"] = int(row["level"])
        for c in ("auc", "gain", "nrc", "nrs", "mean_auc", "std_auc"):
            row[c] = float(row[c]) if row[c] != "" else None
        row["frames"], row["failed"] = int(row["frames"]), int(row["failed"])
    return rows
