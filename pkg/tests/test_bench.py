import json
import math
import xml.etree.ElementTree as ET

import pytest

from blurbench.bench import ExperimentPlan, PlanError, ResultStore, emit_report, load_plan, plan_cells, run_plan
from blurbench.bench.report import nice_ticks
from blurbench.bench.store import ALL_SCENES, frame_ious, read_summary, rows_to_csv, summarize
from blurbench.metrics import auc_of, nrc, robustness_profile, success_frames
from blurbench.synth import SceneConfig, default_suite

SVG = "{http://www.w3.org/2000/svg}"


def small_scene(seed=0):
    return SceneConfig(seed=seed, frame_size=(140, 100), speed=(0.3, 0.1), frame_count=60)


def make_plan(tmp_path, **kw):
    base = dict(scenes=[small_scene()], trackers=["ncc"], levels=(1, 2, 4, 8, 16), out_dir=str(tmp_path / "store"))
    base.update(kw)
    return ExperimentPlan(**base)


@pytest.fixture(autouse=True)
def no_worker_env(monkeypatch):
    monkeypatch.delenv("BLURBENCH_WORKERS", raising=False)


def test_cell_count(tmp_path):
    store = run_plan(make_plan(tmp_path))
    assert len(store) == 5


def test_rerun_is_idempotent(tmp_path):
    plan = make_plan(tmp_path)
    store = run_plan(plan)
    before = {p.name: p.read_bytes() for p in store.cells_dir.iterdir()}
    mtimes = {p.name: p.stat().st_mtime_ns for p in store.cells_dir.iterdir()}
    summary = (store.root / "summary.csv").read_bytes()
    store = run_plan(plan)
    assert {p.name: p.read_bytes() for p in store.cells_dir.iterdir()} == before
    assert {p.name: p.stat().st_mtime_ns for p in store.cells_dir.iterdir()} == mtimes
    assert (store.root / "summary.csv").read_bytes() == summary


def test_truncated_cell_is_recomputed(tmp_path):
    plan = make_plan(tmp_path, levels=(1, 2))
    store = run_plan(plan)
    victim = sorted(store.cells_dir.iterdir())[0]
    good = victim.read_bytes()
    victim.write_text("{")
    run_plan(plan)
    assert victim.read_bytes() == good


def test_hash_depends_on_configuration(tmp_path):
    a = {c.digest for c in plan_cells(make_plan(tmp_path))}
    b = {c.digest for c in plan_cells(make_plan(tmp_path, trackers=[{"tracker": "ncc", "search_scale": 2.0}]))}
    c = {c.digest for c in plan_cells(make_plan(tmp_path, scenes=[small_scene(1)]))}
    assert len(a) == 5 and not a & b and not a & c


def test_summary_recomputable_from_frames(tmp_path):
    store = run_plan(make_plan(tmp_path, trackers=["ncc", "mosse"]))
    rows = read_summary(store.root / "summary.csv")
    records = store.records()
    for tracker in ("ncc", "mosse"):
        by_level = {r["level"]: frame_ious(r) for r in records if r["tracker"] == tracker}
        aucs = {lv: auc_of(v) for lv, v in by_level.items()}
        curve = nrc(by_level, success_frames(by_level[1]))
        prof = robustness_profile(aucs)
        for row in rows:
            if row["tracker"] != tracker or row["scene"] == ALL_SCENES:
                continue
            lv = row["level"]
            assert row["auc"] == pytest.approx(aucs[lv], abs=1e-9)
            assert row["gain"] == pytest.approx(aucs[lv] - aucs[1], abs=1e-9)
            assert row["nrc"] == pytest.approx(curve.u[lv], abs=1e-9)
            assert row["nrs"] == pytest.approx(curve.nrs, abs=1e-9)
            assert row["mean_auc"] == pytest.approx(prof.mean_auc, abs=1e-9)
            assert row["std_auc"] == pytest.approx(prof.std_auc, abs=1e-9)


def test_frame_zero_is_not_scored(tmp_path):
    store = run_plan(make_plan(tmp_path, levels=(1,)))
    (record,) = store.records()
    assert record["frames"][0]["frame"] == 0
    assert len(frame_ious(record)) == record["n_frames"] - 1


def test_failed_cell_is_recorded_and_run_continues(tmp_path):
    plan = make_plan(tmp_path, schemes=("raw", "full"), deblur="external:false {input} {output}", levels=(1, 2))
    store = run_plan(plan)
    records = store.records()
    assert len(records) == 4
    failed = [r for r in records if r["error"]]
    assert {r["scheme"] for r in failed} == {"full"}
    rows = read_summary(store.root / "summary.csv")
    assert all(r["failed"] == (1 if r["scheme"] == "full" else 0) for r in rows)


def test_parallel_matches_serial(tmp_path):
    scenes = [small_scene(0), small_scene(1)]
    a = run_plan(make_plan(tmp_path, scenes=scenes, trackers=["ncc", "mosse"]), tmp_path / "serial", workers=1)
    b = run_plan(make_plan(tmp_path, scenes=scenes, trackers=["ncc", "mosse"]), tmp_path / "parallel", workers=2)
    assert (a.root / "summary.csv").read_bytes() == (b.root / "summary.csv").read_bytes()


def test_plan_validation(tmp_path):
    with pytest.raises(PlanError):
        make_plan(tmp_path, scenes=[])
    with pytest.raises(PlanError):
        make_plan(tmp_path, levels=(3,))
    with pytest.raises(PlanError):
        make_plan(tmp_path, schemes=("sometimes",))


def test_worker_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("BLURBENCH_WORKERS", "3")
    assert make_plan(tmp_path).workers == 3


def test_load_kv_plan(tmp_path):
    p = tmp_path / "plan.txt"
    p.write_text("# demo\nscenes = suite:2\nlevels = 1, 16\ntrackers = ncc, mosse\nschemes = raw\nout = res\nworkers = 2\n")
    plan = load_plan(p)
    assert plan.scenes == default_suite(2)
    assert plan.levels == (1, 16) and plan.workers == 2
    assert [t["tracker"] for t in plan.trackers] == ["ncc", "mosse"]


def test_load_json_plan(tmp_path):
    p = tmp_path / "plan.json"
    p.write_text(json.dumps({"scenes": [small_scene().to_dict()], "trackers": [{"tracker": "mosse", "eta": 0.1}],
                             "levels": [1, 2], "theta": 1.5}))
    plan = load_plan(p)
    assert plan.scenes == [small_scene()] and plan.theta == 1.5


def test_unknown_plan_key(tmp_path):
    p = tmp_path / "plan.txt"
    p.write_text("scenes = suite:1\ncolour = blue\n")
    with pytest.raises(PlanError, match="unknown plan key"):
        load_plan(p)


def test_directory_scene(tmp_path):
    from blurbench.imgseq import save_sequence
    from blurbench.synth import generate_scene

    save_sequence(generate_scene(small_scene()), tmp_path / "seqdir")
    store = run_plan(make_plan(tmp_path, scenes=[str(tmp_path / "seqdir")], levels=(1, 4)))
    assert {r["scene_id"] for r in store.records()} == {"seqdir"}
    assert not any(r["error"] for r in store.records())


def _synthetic_record(scene, level, ious, tracker="ncc"):
    frames = [{"frame": 0, "iou": 1.0}] + [{"frame": i + 1, "iou": v} for i, v in enumerate(ious)]
    return {"hash": f"{scene}{level}", "scene_id": scene, "level": level, "tracker": tracker, "scheme": "raw",
            "n_frames": len(ious) + 1, "error": None, "frames": frames}


def _polylines(path):
    return ET.parse(path).getroot().findall(f".//{SVG}polyline")


def test_report_single_tracker(tmp_path):
    store = run_plan(make_plan(tmp_path))
    files = emit_report(store, tmp_path / "rep")
    assert {f.name for f in files} == {"summary.csv", "robustness.svg", "robustness_ncc.svg", "nrc.svg", "scores.svg", "gain.svg"}
    for f in files:
        if f.suffix == ".svg":
            root = ET.parse(f).getroot()  # well-formed XML
            assert root.get("viewBox") == "0 0 800 600"
    (line,) = _polylines(tmp_path / "rep" / "robustness.svg")
    assert len(line.get("points").split()) == 5


def test_report_constant_auc(tmp_path):
    store = ResultStore(tmp_path / "s")
    for lv in (1, 2, 4, 8, 16):
        store.commit(_synthetic_record("a", lv, [0.8, 0.6, 0.9]))
    emit_report(store, tmp_path / "rep")
    (line,) = _polylines(tmp_path / "rep" / "robustness.svg")
    ys = {p.split(",")[1] for p in line.get("points").split()}
    assert len(ys) == 1
    bars = ET.parse(tmp_path / "rep" / "gain.svg").getroot().findall(f".//{SVG}rect[@class='bar']")
    assert len(bars) == 4 and all(float(b.get("height")) == 0.0 for b in bars)


def test_report_empty_store(tmp_path):
    from blurbench.bench import StoreError

    with pytest.raises(StoreError):
        emit_report(ResultStore(tmp_path / "empty"), tmp_path / "rep")


def test_scene_average_rows():
    recs = [_synthetic_record(s, lv, [v] * 4) for s, v in (("a", 0.9), ("b", 0.7)) for lv in (1, 16)]
    rows = {(r["scene"], r["level"]): r for r in summarize(recs)}
    assert rows[(ALL_SCENES, 1)]["auc"] == pytest.approx((auc_of([0.9]) + auc_of([0.7])) / 2)
    assert rows[(ALL_SCENES, 16)]["gain"] == 0.0
    assert rows[(ALL_SCENES, 16)]["nrs"] == 1.0


def test_csv_is_deterministic():
    recs = [_synthetic_record("a", lv, [0.5, 0.7]) for lv in (1, 2)]
    assert rows_to_csv(summarize(recs)) == rows_to_csv(summarize(list(reversed(recs))))


def test_nice_ticks():
    assert nice_ticks(0.0, 1.0) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    t = nice_ticks(-0.13, 0.02)
    assert t[0] <= -0.13 and t[-1] >= 0.02 and all(math.isfinite(v) for v in t)
