"""Selective-deblurring tracking and its experimental variants.

Every frame, the search region around the previous box is cropped and
deblurred; the tracker steps on both the raw and the deblurred region from
the same pre-step state. A blur-evidence score decides which branch to keep:
above ``theta`` the deblurred branch wins outright, otherwise the branch with
the higher confidence does. Only the kept branch's tracker state is carried
forward.

A two-state Bayesian selector posterior is tracked alongside for reporting;
the hard rule above is what picks the box.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

from .assessor import Assessor, AssessorError, blur_evidence, BlurEvidence, sharpness_score
from .deblur import DeblurError
from .imgseq import BoundingBox, Frame, Sequence, SequenceError
from .metrics import center_error
from .trackers import Tracker, TrackerError, TrackOutput

log = logging.getLogger(__name__)

UNIFORM = ((0.5, 0.5), (0.5, 0.5))
# midpoint calibration of the Laplacian assessor with blind Wiener deblurring
# on the default 10-scene synthetic suite (``blurbench calibrate-theta``)
DEFAULT_THETA = 2.6701250057578223
SCHEMES = ("raw", "full", "selective", "oracle")

Deblurrer = Callable[[Frame], Frame]


class SchemeError(RuntimeError):
    pass


@dataclass(frozen=True)
class SelectorState:
    """posterior[s] = P(s | frames so far); s = 0 raw, s = 1 deblurred."""

    posterior: tuple[float, float] = (0.5, 0.5)
    transition: tuple[tuple[float, float], tuple[float, float]] = UNIFORM

    def __post_init__(self):
        p0, p1 = self.posterior
        if p0 < 0 or p1 < 0 or not math.isclose(p0 + p1, 1.0, abs_tol=1e-9):
            raise SchemeError(f"invalid selector posterior {self.posterior}")
        for row in self.transition:
            if min(row) < 0 or not math.isclose(sum(row), 1.0, abs_tol=1e-9):
                raise SchemeError(f"transition rows must be stochastic: {self.transition}")


@dataclass(frozen=True)
class SchemeConfig:
    theta: float = DEFAULT_THETA
    transition: tuple[tuple[float, float], tuple[float, float]] = UNIFORM
    deblur: str = "blind"
    assessor: str = "laplacian"
    eps: float = 1e-6
    full_frame: bool = False

    def __post_init__(self):
        if not self.theta >= 0:
            raise SchemeError("theta must be >= 0")


@dataclass(frozen=True)
class FrameResult:
    frame: int
    box: BoundingBox
    confidence: float
    selected: int | None = None
    evidence: float | None = None
    p_deblur: float | None = None

    def to_dict(self, truth: BoundingBox | None = None) -> dict:
        from .metrics import iou

        d = {"frame": self.frame, "box": self.box.as_list(), "confidence": self.confidence}
        if truth is not None:
            d["iou"] = iou(self.box, truth)
            d["center_error"] = center_error(self.box, truth)
        if self.selected is not None:
            d["selected"] = self.selected
        if self.evidence is not None:
            d["evidence"] = self.evidence
        if self.p_deblur is not None:
            d["p_deblur"] = self.p_deblur
        return d


@dataclass
class VideoResult:
    frames: list[FrameResult] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def boxes(self) -> list[BoundingBox]:
        return [r.box for r in self.frames]


def selector_likelihood(evidence: float, theta: float, eps: float = 1e-6) -> tuple[float, float]:
    """Normalized (P(I|s=0), P(I|s=1)).

    s=1 is proportional to the evidence; s=0 gets the bounded complement
    ``eps + max(0, 2*theta - evidence)``.
    """
    if math.isinf(theta):
        return 1.0, 0.0
    l1 = max(0.0, evidence)
    l0 = eps + max(0.0, 2.0 * theta - l1)
    z = l0 + l1
    return l0 / z, l1 / z


def selector_posterior(
    state: SelectorState, evidence: BlurEvidence | float, theta: float = DEFAULT_THETA, eps: float = 1e-6
) -> SelectorState:
    e = evidence.evidence if isinstance(evidence, BlurEvidence) else float(evidence)
    (t00, t01), (t10, t11) = state.transition
    p0, p1 = state.posterior
    prior = (t00 * p0 + t10 * p1, t01 * p0 + t11 * p1)
    lik = selector_likelihood(e, theta, eps)
    post = (prior[0] * lik[0], prior[1] * lik[1])
    z = post[0] + post[1]
    if z <= 0:
        post, z = (1.0, 0.0), 1.0
    return SelectorState((post[0] / z, post[1] / z), state.transition)


def fuse(
    raw: TrackOutput, deblurred: TrackOutput, evidence: BlurEvidence | float, cfg: SchemeConfig
) -> tuple[TrackOutput, int]:
    e = evidence.evidence if isinstance(evidence, BlurEvidence) else float(evidence)
    if e > cfg.theta:
        return deblurred, 1
    if deblurred.confidence > raw.confidence:
        return deblurred, 1
    return raw, 0


def _init(tracker: Tracker, seq: Sequence):
    if len(seq) < 1:
        raise SchemeError("empty sequence")
    state = tracker.init(seq.frames[0], seq.annotations[0])
    return state, FrameResult(0, seq.annotations[0], 1.0)


def _guard(run):
    """Run a pipeline body, turning component failures into a diagnostic record."""

    def wrapper(*args, **kwargs) -> VideoResult:
        out = VideoResult()
        try:
            run(out, *args, **kwargs)
        except (TrackerError, DeblurError, AssessorError, SequenceError, SchemeError) as exc:
            n = len(out.frames)
            out.error = f"{type(exc).__name__} at frame {n}: {exc}"
            log.warning("pipeline aborted: %s", out.error)
        return out

    wrapper.__name__ = run.__name__
    wrapper.__doc__ = run.__doc__
    return wrapper


@_guard
def track_video_raw(out: VideoResult, tracker: Tracker, seq: Sequence) -> None:
    state, first = _init(tracker, seq)
    out.frames.append(first)
    for t in range(1, len(seq)):
        o, state = tracker.step(state, seq.frames[t])
        out.frames.append(FrameResult(t, o.box, o.confidence))


@_guard
def track_video_full_deblur(
    out: VideoResult, tracker: Tracker, deblurrer: Deblurrer, seq: Sequence, full_frame: bool = False
) -> None:
    """Deblur every search region (or whole frame) before a single tracker step."""
    state, first = _init(tracker, seq)
    out.frames.append(first)
    for t in range(1, len(seq)):
        frame = seq.frames[t]
        if full_frame:
            o, state = tracker.step(state, deblurrer(frame))
        else:
            region, mapping = tracker.search_region(state, frame)
            o, state = tracker.step_region(state, deblurrer(region), mapping)
        out.frames.append(FrameResult(t, o.box, o.confidence))


@_guard
def track_video_selective(
    out: VideoResult,
    tracker: Tracker,
    deblurrer: Deblurrer,
    assessor: Assessor,
    seq: Sequence,
    cfg: SchemeConfig = SchemeConfig(),
) -> None:
    state, first = _init(tracker, seq)
    out.frames.append(first)
    selector = SelectorState(transition=cfg.transition)
    for t in range(1, len(seq)):
        region, mapping = tracker.search_region(state, seq.frames[t])
        sharp = deblurrer(region)
        raw_out, raw_state = tracker.step_region(state, region, mapping)
        deb_out, deb_state = tracker.step_region(state, sharp, mapping)
        ev = blur_evidence(region, sharp, assessor)
        selector = selector_posterior(selector, ev, cfg.theta, cfg.eps)
        chosen, s = fuse(raw_out, deb_out, ev, cfg)
        state = deb_state if s else raw_state
        out.frames.append(FrameResult(t, chosen.box, chosen.confidence, s, ev.evidence, selector.posterior[1]))


@_guard
def oracle_selective(
    out: VideoResult,
    tracker: Tracker,
    deblurrer: Deblurrer,
    seq: Sequence,
    ground_truth: list[BoundingBox] | None = None,
) -> None:
    """Keep, per frame, whichever branch lands closer to the ground truth."""
    truth = list(ground_truth) if ground_truth is not None else list(seq.annotations)
    if len(truth) != len(seq):
        raise SchemeError("ground truth must cover every frame")
    state, first = _init(tracker, seq)
    out.frames.append(first)
    for t in range(1, len(seq)):
        region, mapping = tracker.search_region(state, seq.frames[t])
        raw_out, raw_state = tracker.step_region(state, region, mapping)
        deb_out, deb_state = tracker.step_region(state, deblurrer(region), mapping)
        if center_error(deb_out.box, truth[t]) < center_error(raw_out.box, truth[t]):
            out.frames.append(FrameResult(t, deb_out.box, deb_out.confidence, 1))
            state = deb_state
        else:
            out.frames.append(FrameResult(t, raw_out.box, raw_out.confidence, 0))
            state = raw_state


def run_scheme(
    scheme: str,
    tracker: Tracker,
    seq: Sequence,
    deblurrer: Deblurrer | None = None,
    assessor: Assessor | None = None,
    cfg: SchemeConfig = SchemeConfig(),
) -> VideoResult:
    if scheme == "raw":
        return track_video_raw(tracker, seq)
    if deblurrer is None:
        raise SchemeError(f"scheme {scheme!r} needs a deblurrer")
    if scheme == "full":
        return track_video_full_deblur(tracker, deblurrer, seq, cfg.full_frame)
    if scheme == "selective":
        return track_video_selective(tracker, deblurrer, assessor or sharpness_score, seq, cfg)
    if scheme == "oracle":
        return oracle_selective(tracker, deblurrer, seq)
    raise SchemeError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


@dataclass(frozen=True)
class Calibration:
    theta: float
    mean_light: float
    mean_heavy: float
    mean_by_level: dict[int, float]


def region_evidence(seq: Sequence, deblurrer: Deblurrer, assessor: Assessor, scale: float = 2.24) -> list[float]:
    """Blur evidence of ground-truth-centred search regions, frames 1..n-1."""
    from .imgseq import crop_region

    out = []
    for f, b in zip(seq.frames[1:], seq.annotations[1:]):
        region, _ = crop_region(f, b, scale)
        out.append(blur_evidence(region, deblurrer(region), assessor).evidence)
    return out


def calibrate_theta(benchmarks, deblurrer: Deblurrer, assessor: Assessor, light=(1, 2), heavy=(8, 16)) -> Calibration:
    """Midpoint between mean evidence on lightly and heavily blurred frames."""
    ev: dict[int, list[float]] = {}
    for bench in benchmarks:
        for level in sorted(set(light) | set(heavy)):
            ev.setdefault(level, []).extend(region_evidence(bench[level], deblurrer, assessor))
    means = {level: math.fsum(v) / len(v) for level, v in sorted(ev.items())}
    lo = math.fsum(x for lv in light for x in ev[lv]) / sum(len(ev[lv]) for lv in light)
    hi = math.fsum(x for lv in heavy for x in ev[lv]) / sum(len(ev[lv]) for lv in heavy)
    return Calibration((lo + hi) / 2.0, lo, hi, means)
