"""Run an experiment plan cell by cell, with content-hash resumability.

A cell is one (scene, level, tracker, scheme) combination. Its record is
written to ``<out>/cells/<hash>.json`` by the main process as soon as a
worker hands it back, so an interrupted run picks up where it stopped.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from ..assessor import make_assessor
from ..blurgen import build_benchmark
from ..deblur import make_deblurrer
from ..imgseq import list_images, load_sequence
from ..select import SchemeConfig, run_scheme
from ..synth import SceneConfig, generate_scene
from ..trackers import tracker_from_config
from .plan import ExperimentPlan
from .store import ResultStore

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cell:
    scene: dict  # {"synth": config} or {"dir": path, "sha256": digest}
    level: int
    tracker: dict
    scheme: dict
    stride: int

    def key(self) -> dict:
        return {
            "scene": self.scene,
            "level": self.level,
            "tracker": self.tracker,
            "scheme": self.scheme,
            "stride": self.stride,
        }

    @property
    def digest(self) -> str:
        blob = json.dumps(self.key(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:32]


def scene_id(scene: dict) -> str:
    if "synth" in scene:
        return f"synth-{scene['synth']['seed']}"
    return Path(scene["dir"]).name


def directory_digest(path: str | os.PathLike) -> str:
    """Hash of every frame file and the annotation file of a source directory."""
    path = Path(path)
    h = hashlib.sha256()
    files = list_images(path) + [p for p in (path / "groundtruth.txt",) if p.exists()]
    for p in files:
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def scene_key(source, source_fps: float) -> dict:
    if isinstance(source, SceneConfig):
        return {"synth": source.to_dict()}
    return {"dir": str(Path(source).resolve()), "sha256": directory_digest(source), "fps": source_fps}


def scheme_key(name: str, plan: ExperimentPlan) -> dict:
    if name == "raw":
        return {"scheme": "raw"}
    d = {"scheme": name, "deblur": plan.deblur}
    if name == "selective":
        d["assessor"] = plan.assessor
        d["theta"] = plan.theta
    # blind deblurring scores candidates with the assessor too
    if plan.deblur == "blind":
        d["assessor"] = plan.assessor
    return d


def plan_cells(plan: ExperimentPlan) -> list[Cell]:
    """Cells in a fixed order: scene, tracker, scheme, level."""
    cells = []
    for source in plan.scenes:
        sk = scene_key(source, plan.source_fps)
        for tracker in plan.trackers:
            for scheme in plan.schemes:
                for level in plan.levels:
                    cells.append(Cell(sk, level, tracker, scheme_key(scheme, plan), plan.stride))
    return cells


@lru_cache(maxsize=4)
def _benchmark(scene_json: str, levels: tuple[int, ...], stride: int):
    scene = json.loads(scene_json)
    if "synth" in scene:
        src = generate_scene(SceneConfig.from_dict(scene["synth"]))
    else:
        src = load_sequence(scene["dir"], fps=scene.get("fps", 240.0))
    return build_benchmark(src, scene_id(scene), levels, stride)


def run_cell(cell: Cell, levels: tuple[int, ...]) -> dict:
    """Run one cell and return its JSON-ready record."""
    bench = _benchmark(json.dumps(cell.scene, sort_keys=True), levels, cell.stride)
    seq = bench.levels[cell.level]
    tracker = tracker_from_config(cell.tracker)
    scheme = dict(cell.scheme)
    name = scheme.pop("scheme")
    assessor = make_assessor(scheme.get("assessor", "laplacian"))
    deblurrer = make_deblurrer(scheme["deblur"], assessor) if "deblur" in scheme else None
    cfg = SchemeConfig(theta=scheme.get("theta", SchemeConfig.theta), assessor=scheme.get("assessor", "laplacian"))
    result = run_scheme(name, tracker, seq, deblurrer, assessor, cfg)
    return {
        "hash": cell.digest,
        "key": cell.key(),
        "scene_id": bench.scene_id,
        "level": cell.level,
        "tracker": cell.tracker["tracker"],
        "scheme": name,
        "n_frames": len(seq),
        "error": result.error,
        "frames": [r.to_dict(seq.annotations[r.frame]) for r in result.frames],
    }


def _run_cell_safe(cell: Cell, levels: tuple[int, ...]) -> dict:
    try:
        return run_cell(cell, levels)
    except Exception as exc:  # per-cell failures are recorded, the run goes on
        log.exception("cell %s failed", cell.digest)
        return {
            "hash": cell.digest,
            "key": cell.key(),
            "scene_id": scene_id(cell.scene),
            "level": cell.level,
            "tracker": cell.tracker["tracker"],
            "scheme": cell.scheme["scheme"],
            "n_frames": 0,
            "error": f"{type(exc).__name__}: {exc}",
            "frames": [],
        }


def run_plan(plan: ExperimentPlan, out_dir: str | os.PathLike | None = None, workers: int | None = None) -> ResultStore:
    store = ResultStore(out_dir or plan.out_dir)
    store.write_plan(plan.to_dict())
    cells = plan_cells(plan)
    todo = [c for c in cells if not store.has(c.digest)]
    log.info("%d cells, %d already done", len(cells), len(cells) - len(todo))
    workers = workers or plan.workers
    all_levels = tuple(plan.levels)
    if workers <= 1 or len(todo) <= 1:
        for cell in todo:
            store.commit(_run_cell_safe(cell, all_levels))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell_safe, c, all_levels) for c in todo]
            for fut in as_completed(futures):
                store.commit(fut.result())
    store.write_summary([c.digest for c in cells])
    return store
