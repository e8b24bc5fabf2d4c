"""Command-line entry point: ``blurbench <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .assessor import AssessorError, make_assessor
from .blurgen import DEFAULT_STRIDE, LEVELS, build_benchmark
from .deblur import DEFAULT_K, DeblurError, make_deblurrer
from .imgseq import SequenceError, load_sequence, save_sequence
from .select import DEFAULT_THETA, SCHEMES, SchemeConfig, SchemeError, calibrate_theta, run_scheme
from .synth import SceneConfig, default_suite, generate_scene
from .trackers import TRACKERS, TrackerError, make_tracker
from .bench.plan import PlanError

log = logging.getLogger("blurbench")


def _pair(text: str, conv=float) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
    return tuple(conv(p) for p in parts)


def _levels(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _theta(text: str) -> float:
    return math.inf if text.lower() in ("inf", "+inf", "infinity") else float(text)


def cmd_synth(args) -> int:
    cfg = SceneConfig(
        seed=args.seed,
        frame_size=args.size,
        target_size=args.target,
        trajectory=args.trajectory,
        speed=args.speed,
        amplitude=args.amplitude,
        period=args.period,
        frame_count=args.frames,
        texture_contrast=args.contrast,
        channels=args.channels,
        background_motion=args.background_motion,
    )
    out = save_sequence(generate_scene(cfg), args.out)
    (out / "scene.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    print(out)
    return 0


def cmd_blur(args) -> int:
    src = load_sequence(args.src, args.annot, fps=args.fps)
    bench = build_benchmark(src, Path(args.src).name, args.levels, args.stride)
    for level, seq in sorted(bench.levels.items()):
        print(save_sequence(seq, Path(args.out) / f"L{level}"))
    return 0


def cmd_track(args) -> int:
    seq = load_sequence(args.seq, args.annot)
    params = {}
    if args.search_scale is not None:
        params["search_scale"] = args.search_scale
    if args.tracker == "mosse":
        for key in ("lam", "eta"):
            if getattr(args, key) is not None:
                params[key] = getattr(args, key)
    tracker = make_tracker(args.tracker, **params)
    assessor = make_assessor(args.assessor)
    deblurrer = make_deblurrer(args.deblur, assessor, args.K)
    cfg = SchemeConfig(theta=args.theta, assessor=args.assessor, deblur=args.deblur)
    result = run_scheme(args.scheme, tracker, seq, deblurrer, assessor, cfg)
    doc = {
        "tracker": tracker.config(),
        "scheme": args.scheme,
        "deblur": args.deblur,
        "assessor": args.assessor,
        "theta": None if math.isinf(args.theta) else args.theta,
        "error": result.error,
        "frames": [r.to_dict(seq.annotations[r.frame]) for r in result.frames],
    }
    text = json.dumps(doc, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if result.ok else 3


def cmd_eval(args) -> int:
    from .bench import load_plan, run_plan

    plan = load_plan(args.plan)
    store = run_plan(plan, args.out, args.workers)
    print(store.root / "summary.csv")
    return 0


def cmd_report(args) -> int:
    from .bench import emit_report

    for path in emit_report(args.store, args.out or Path(args.store) / "report"):
        print(path)
    return 0


def cmd_calibrate(args) -> int:
    assessor = make_assessor(args.assessor)
    deblurrer = make_deblurrer(args.deblur, assessor, args.K)
    benches = (build_benchmark(generate_scene(c), c.scene_id) for c in default_suite(args.scenes, args.seed))
    cal = calibrate_theta(benches, deblurrer, assessor)
    print(
        json.dumps(
            {
                "theta": cal.theta,
                "mean_light": cal.mean_light,
                "mean_heavy": cal.mean_heavy,
                "mean_by_level": {str(k): v for k, v in cal.mean_by_level.items()},
            },
            indent=1,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blurbench", description="Motion-blur tracking benchmark toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="render a synthetic high-frame-rate scene")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--frames", type=int, default=240)
    s.add_argument("--size", type=lambda t: _pair(t, int), default=(320, 240), metavar="W,H")
    s.add_argument("--target", type=lambda t: _pair(t, int), default=(40, 40), metavar="W,H")
    s.add_argument("--trajectory", choices=("linear", "sinusoidal"), default="linear")
    s.add_argument("--speed", type=_pair, default=(1.0, 0.0), metavar="VX,VY", help="pixels per source frame")
    s.add_argument("--amplitude", type=_pair, default=(0.0, 0.0), metavar="AX,AY")
    s.add_argument("--period", type=float, default=120.0)
    s.add_argument("--contrast", type=float, default=0.8)
    s.add_argument("--channels", type=int, choices=(1, 3), default=1)
    s.add_argument("--background-motion", type=float, default=0.0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("blur", help="build the blur levels of a source sequence")
    s.add_argument("--src", required=True, help="directory of high-frame-rate frames")
    s.add_argument("--annot", help="annotation file (default: <src>/groundtruth.txt)")
    s.add_argument("--levels", type=_levels, default=LEVELS)
    s.add_argument("--stride", type=int, default=DEFAULT_STRIDE)
    s.add_argument("--fps", type=float, default=240.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_blur)

    s = sub.add_parser("track", help="track one sequence and print per-frame JSON")
    s.add_argument("--tracker", choices=sorted(TRACKERS), default="ncc")
    s.add_argument("--scheme", choices=SCHEMES, default="raw")
    s.add_argument("--deblur", default="blind", help="none | blind | wiener[:LEN,ANGLE] | external:<cmd>")
    s.add_argument("--assessor", default="laplacian", help="laplacian | external:<cmd>")
    s.add_argument("--theta", type=_theta, default=DEFAULT_THETA)
    s.add_argument("--K", type=float, default=DEFAULT_K, help="Wiener noise-to-signal constant")
    s.add_argument("--seq", required=True)
    s.add_argument("--annot")
    s.add_argument("--search-scale", type=float)
    s.add_argument("--lambda", dest="lam", type=float, help="MOSSE regulariser")
    s.add_argument("--eta", type=float, help="MOSSE learning rate")
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("eval", help="run an experiment plan")
    s.add_argument("--plan", required=True, help="JSON or key = value plan file")
    s.add_argument("--out", help="override the plan's output directory")
    s.add_argument("--workers", type=int, help="override the worker count")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("report", help="write CSV tables and SVG charts for a result store")
    s.add_argument("--store", required=True)
    s.add_argument("--out", help="default: <store>/report")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("calibrate-theta", help="calibrate the selection threshold on the synthetic suite")
    s.add_argument("--scenes", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--deblur", default="blind")
    s.add_argument("--assessor", default="laplacian")
    s.add_argument("--K", type=float, default=DEFAULT_K)
    s.set_defaults(func=cmd_calibrate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SequenceError, TrackerError, DeblurError, AssessorError, SchemeError, PlanError, OSError) as exc:
        print(f"blurbench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
