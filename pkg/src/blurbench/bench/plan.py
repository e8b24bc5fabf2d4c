"""Experiment plans: which scenes, levels, trackers and schemes to run."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from ..blurgen import LEVELS
from ..select import DEFAULT_THETA, SCHEMES
from ..synth import SceneConfig, default_suite

WORKERS_ENV = "BLURBENCH_WORKERS"


class PlanError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    scenes: list  # SceneConfig or a source-sequence directory (str)
    trackers: list[dict]
    levels: tuple[int, ...] = LEVELS
    schemes: tuple[str, ...] = ("raw",)
    out_dir: str = "results"
    workers: int = 1
    deblur: str = "blind"
    assessor: str = "laplacian"
    theta: float = DEFAULT_THETA
    stride: int = 8
    source_fps: float = 240.0

    def __post_init__(self):
        if not self.scenes:
            raise PlanError("plan has no scenes")
        if not self.trackers:
            raise PlanError("plan has no trackers")
        if not self.levels:
            raise PlanError("plan has no levels")
        self.levels = tuple(sorted(int(v) for v in self.levels))
        bad = [lv for lv in self.levels if lv not in LEVELS]
        if bad:
            raise PlanError(f"unsupported blur level(s) {bad}")
        self.schemes = tuple(self.schemes)
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise PlanError(f"unknown scheme(s) {bad}")
        self.trackers = [_tracker_entry(t) for t in self.trackers]
        self.scenes = [_scene_entry(s) for s in self.scenes]
        env = os.environ.get(WORKERS_ENV)
        if env:
            self.workers = int(env)
        if self.workers < 1:
            raise PlanError("workers must be >= 1")

    def to_dict(self) -> dict:
        return {
            "scenes": [s.to_dict() if isinstance(s, SceneConfig) else s for s in self.scenes],
            "trackers": self.trackers,
            "levels": list(self.levels),
            "schemes": list(self.schemes),
            "out_dir": self.out_dir,
            "workers": self.workers,
            "deblur": self.deblur,
            "assessor": self.assessor,
            "theta": self.theta,
            "stride": self.stride,
            "source_fps": self.source_fps,
        }


def _tracker_entry(t) -> dict:
    if isinstance(t, str):
        return {"tracker": t}
    if isinstance(t, dict) and "tracker" in t:
        return dict(t)
    raise PlanError(f"bad tracker entry {t!r}")


def _scene_entry(s):
    if isinstance(s, SceneConfig):
        return s
    if isinstance(s, dict):
        d = dict(s)
        for key in ("frame_size", "target_size", "speed", "amplitude", "start"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return SceneConfig(**d)
    if isinstance(s, (str, os.PathLike)):
        return str(s)
    raise PlanError(f"bad scene entry {s!r}")


def expand_scenes(entries) -> list:
    """Expand ``suite:N`` / ``suite:N:seed`` shorthands into scene configs."""
    out = []
    for e in entries:
        if isinstance(e, str) and e.startswith("suite:"):
            parts = e.split(":")
            n = int(parts[1])
            base = int(parts[2]) if len(parts) > 2 else 0
            out.extend(default_suite(n, base))
        else:
            out.append(e)
    return out


_LIST_KEYS = {"levels", "schemes", "trackers", "scenes"}


def _parse_kv(text: str) -> dict:
    d = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PlanError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key in _LIST_KEYS:
            d[key] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            d[key] = value
    return d


def plan_from_dict(d: dict, base_dir: Path | None = None) -> ExperimentPlan:
    d = dict(d)
    if "out" in d and "out_dir" not in d:
        d["out_dir"] = d.pop("out")
    scenes = expand_scenes(d.pop("scenes", ["suite:10"]))
    if base_dir is not None:
        scenes = [
            str((base_dir / s).resolve()) if isinstance(s, str) and not Path(s).is_absolute() else s
            for s in scenes
        ]
    trackers = d.pop("trackers", ["ncc"])
    kwargs = {}
    for key, conv in (
        ("levels", lambda v: tuple(int(x) for x in v)),
        ("schemes", tuple),
        ("out_dir", str),
        ("workers", int),
        ("deblur", str),
        ("assessor", str),
        ("theta", float),
        ("stride", int),
        ("source_fps", float),
    ):
        if key in d:
            kwargs[key] = conv(d.pop(key))
    if d:
        raise PlanError(f"unknown plan key(s) {sorted(d)}")
    if base_dir is not None:
        # relative paths in a plan file are relative to the file
        kwargs["out_dir"] = str(base_dir / kwargs.get("out_dir", "results"))
    return ExperimentPlan(scenes=scenes, trackers=trackers, **kwargs)


def load_plan(path: str | os.PathLike) -> ExperimentPlan:
    """Read a JSON plan or a line-oriented ``key = value`` plan."""
    path = Path(path)
    text = path.read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError:
        d = _parse_kv(text)
    if not isinstance(d, dict):
        raise PlanError("plan must be a mapping")
    return plan_from_dict(d, base_dir=path.parent)
