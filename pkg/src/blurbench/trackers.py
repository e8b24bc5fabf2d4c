"""Tracker contract and two intensity-feature baselines (NCC, MOSSE).

Trackers are translation-only and never mutate their state: ``step`` returns
a fresh state, so callers may run several hypothetical steps from one
pre-step state and commit whichever they like.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imgseq import BoundingBox, Frame, RegionMapping, crop_region

DEFAULT_SEARCH_SCALE = 2.24


class TrackerError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrackOutput:
    box: BoundingBox
    confidence: float

    def __post_init__(self):
        c = float(self.confidence)
        if not 0.0 <= c <= 1.0 or math.isnan(c):
            raise TrackerError(f"confidence {c} outside [0, 1]")
        object.__setattr__(self, "confidence", c)


@dataclass(frozen=True, eq=False)
class TrackerState:
    box: BoundingBox
    frame_shape: tuple[int, int, int]
    search_scale: float
    model: dict[str, Any] = field(default_factory=dict)


class Tracker(ABC):
    """Base class; subclasses implement ``init`` and ``step_region``."""

    name = "base"

    def __init__(self, search_scale: float = DEFAULT_SEARCH_SCALE):
        if search_scale < 1:
            raise TrackerError("search_scale must be >= 1")
        self.search_scale = float(search_scale)

    @abstractmethod
    def init(self, frame: Frame, box: BoundingBox) -> TrackerState: ...

    @abstractmethod
    def step_region(
        self, state: TrackerState, region: Frame, mapping: RegionMapping
    ) -> tuple[TrackOutput, TrackerState]:
        """Locate the target inside an already-cropped search region."""

    def search_region(self, state: TrackerState, frame: Frame) -> tuple[Frame, RegionMapping]:
        _check_state(state, frame)
        return crop_region(frame, state.box, state.search_scale)

    def step(self, state: TrackerState, frame: Frame) -> tuple[TrackOutput, TrackerState]:
        region, mapping = self.search_region(state, frame)
        return self.step_region(state, region, mapping)

    def config(self) -> dict:
        return {"tracker": self.name, "search_scale": self.search_scale}


def _check_init(frame: Frame, box: BoundingBox) -> None:
    if box.w <= 0 or box.h <= 0:
        raise TrackerError("degenerate init box")
    if not box.inside(frame.width, frame.height):
        raise TrackerError(f"init box {box.as_list()} lies outside the {frame.width}x{frame.height} frame")


def _check_state(state: TrackerState | None, frame: Frame) -> None:
    if state is None:
        raise TrackerError("tracker state is not initialised")
    if frame.shape != state.frame_shape:
        raise TrackerError(f"frame dimension mismatch: {frame.shape} vs {state.frame_shape}")


def _gray(f: Frame) -> np.ndarray:
    return f.gray()


class NCCTracker(Tracker):
    """Zero-normalized cross-correlation against the fixed first-frame template."""

    name = "ncc"

    def init(self, frame: Frame, box: BoundingBox) -> TrackerState:
        _check_init(frame, box)
        patch, mapping = crop_region(frame, box, 1.0)
        template = _gray(patch)
        # sub-pixel offset of the box relative to the integer template crop
        offset = (box.x - mapping.x0, box.y - mapping.y0)
        t0 = template - template.mean()
        return TrackerState(
            box=box,
            frame_shape=frame.shape,
            search_scale=self.search_scale,
            model={"template": template, "t0": t0, "t0_norm": float(np.sqrt((t0 * t0).sum())), "offset": offset},
        )

    def scores(self, state: TrackerState, region: np.ndarray) -> np.ndarray:
        """ZNCC score for every template placement; -1 where undefined."""
        t0, t0_norm = state.model["t0"], state.model["t0_norm"]
        th, tw = t0.shape
        if region.shape[0] < th or region.shape[1] < tw:
            raise TrackerError("search region smaller than template")
        win = sliding_window_view(region, (th, tw))
        n = th * tw
        num = np.einsum("ijkl,kl->ij", win, t0)
        s1 = win.sum(axis=(2, 3))
        s2 = np.einsum("ijkl,ijkl->ij", win, win)
        var = np.maximum(s2 - s1 * s1 / n, 0.0)
        den = t0_norm * np.sqrt(var)
        out = np.full(num.shape, -1.0)
        ok = den > 1e-6 * n
        out[ok] = np.clip(num[ok] / den[ok], -1.0, 1.0)
        return out

    def step_region(self, state, region, mapping):
        if state is None:
            raise TrackerError("tracker state is not initialised")
        score = self.scores(state, _gray(region))
        if score.max() <= -1.0:
            # textureless region: no evidence, keep the previous box
            return TrackOutput(state.box, 0.0), state
        i, j = np.unravel_index(int(np.argmax(score)), score.shape)
        dx, dy = state.model["offset"]
        box = BoundingBox(mapping.x0 + j + dx, mapping.y0 + i + dy, state.box.w, state.box.h)
        conf = (float(score[i, j]) + 1.0) / 2.0
        return TrackOutput(box, conf), replace(state, box=box)


@dataclass(frozen=True)
class MosseParams:
    lam: float = 1e-2
    eta: float = 0.125
    sigma_factor: float = 1.0 / 16.0
    psr_mu: float = 8.0
    psr_s: float = 2.0
    psr_exclude: int = 11


def _hann2d(h: int, w: int) -> np.ndarray:
    wy = np.hanning(h) if h > 1 else np.ones(1)
    wx = np.hanning(w) if w > 1 else np.ones(1)
    return np.outer(wy, wx)


def psr(response: np.ndarray, peak: tuple[int, int], exclude: int = 11) -> float:
    """Peak-to-sidelobe ratio; the sidelobe excludes an `exclude`-square around the peak."""
    r, c = peak
    half = exclude // 2
    mask = np.ones(response.shape, dtype=bool)
    mask[max(0, r - half) : r + half + 1, max(0, c - half) : c + half + 1] = False
    side = response[mask]
    if side.size < 2:
        return 0.0
    sd = side.std()
    if sd < 1e-12:
        return 0.0
    return float((response[r, c] - side.mean()) / sd)


def _subpixel(resp: np.ndarray, r: int, c: int) -> tuple[float, float]:
    """Parabolic peak refinement along each axis (circular neighbours)."""
    h, w = resp.shape

    def vertex(lo, mid, hi):
        den = lo - 2.0 * mid + hi
        return 0.0 if abs(den) < 1e-12 else float(np.clip(0.5 * (lo - hi) / den, -0.5, 0.5))

    dr = vertex(resp[(r - 1) % h, c], resp[r, c], resp[(r + 1) % h, c]) if h >= 3 else 0.0
    dc = vertex(resp[r, (c - 1) % w], resp[r, c], resp[r, (c + 1) % w]) if w >= 3 else 0.0
    return r + dr, c + dc


class MosseTracker(Tracker):
    """MOSSE-style correlation filter with a running-average update."""

    name = "mosse"

    def __init__(self, search_scale: float = DEFAULT_SEARCH_SCALE, params: MosseParams | None = None, **kw):
        super().__init__(search_scale)
        self.params = params or MosseParams(**kw)

    def config(self) -> dict:
        return {**super().config(), **asdict(self.params)}

    def preprocess(self, region: np.ndarray) -> np.ndarray:
        x = np.log1p(region)
        x = x - x.mean()
        norm = np.sqrt((x * x).sum())
        if norm > 1e-9:
            x = x / norm
        else:
            x = np.zeros_like(x)
        return x * _hann2d(*x.shape)

    def desired_response(self, shape: tuple[int, int], center: tuple[float, float], box: BoundingBox) -> np.ndarray:
        """Gaussian peaked at `center` (region coords, pixel centres at +0.5)."""
        sigma = self.params.sigma_factor * math.hypot(box.w, box.h)
        ys = np.arange(shape[0]) + 0.5
        xs = np.arange(shape[1]) + 0.5
        cx, cy = center
        return np.exp(-((ys[:, None] - cy) ** 2 + (xs[None, :] - cx) ** 2) / (2.0 * sigma * sigma))

    def filter_terms(self, pre: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        F = np.fft.fft2(pre)
        return np.fft.fft2(g) * np.conj(F), F * np.conj(F)

    def response(self, state: TrackerState, pre: np.ndarray) -> np.ndarray:
        H = state.model["A"] / (state.model["B"] + self.params.lam)
        return np.real(np.fft.ifft2(H * np.fft.fft2(pre)))

    def init(self, frame: Frame, box: BoundingBox) -> TrackerState:
        _check_init(frame, box)
        region, mapping = crop_region(frame, box, self.search_scale)
        pre = self.preprocess(_gray(region))
        g = self.desired_response(pre.shape, mapping.to_region(*box.center), box)
        A, B = self.filter_terms(pre, g)
        return TrackerState(box, frame.shape, self.search_scale, {"A": A, "B": B})

    def confidence(self, value: float) -> float:
        p = self.params
        z = (value - p.psr_mu) / p.psr_s
        return float(1.0 / (1.0 + math.exp(-z))) if z > -700 else 0.0

    def step_region(self, state, region, mapping):
        if state is None:
            raise TrackerError("tracker state is not initialised")
        gray = _gray(region)
        if gray.shape != state.model["A"].shape:
            raise TrackerError(f"search region shape {gray.shape} does not match filter {state.model['A'].shape}")
        pre = self.preprocess(gray)
        resp = self.response(state, pre)
        if float(resp.max() - resp.min()) < 1e-12:
            return TrackOutput(state.box, self.confidence(0.0)), state
        r, c = np.unravel_index(int(np.argmax(resp)), resp.shape)
        conf = self.confidence(psr(resp, (r, c), self.params.psr_exclude))
        rr, cc = _subpixel(resp, r, c)
        cx, cy = mapping.to_frame(cc + 0.5, rr + 0.5)
        box = state.box.with_center(cx, cy)
        g = self.desired_response(pre.shape, (cc + 0.5, rr + 0.5), box)
        A_new, B_new = self.filter_terms(pre, g)
        eta = self.params.eta
        model = {"A": eta * A_new + (1 - eta) * state.model["A"], "B": eta * B_new + (1 - eta) * state.model["B"]}
        return TrackOutput(box, conf), replace(state, box=box, model=model)


TRACKERS = {"ncc": NCCTracker, "mosse": MosseTracker}


def make_tracker(name: str, **params) -> Tracker:
    try:
        cls = TRACKERS[name]
    except KeyError:
        raise TrackerError(f"unknown tracker {name!r}; choose from {sorted(TRACKERS)}") from None
    return cls(**params)


def tracker_from_config(cfg: dict) -> Tracker:
    cfg = dict(cfg)
    return make_tracker(cfg.pop("tracker"), **cfg)
