"""Multi-level motion-blur benchmark construction from a high-frame-rate source.

Level ``L`` frames are means of ``L`` consecutive source frames; the blurred
video is then temporally subsampled (stride 8 turns 240 fps into 30 fps) and
its first frame is replaced by the sharp source frame so trackers are always
initialised from an unblurred template.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence as Seq

import numpy as np

from .imgseq import BoundingBox, Frame, Sequence, SequenceError

LEVELS = (1, 2, 4, 8, 16)
DEFAULT_STRIDE = 8


@dataclass(frozen=True)
class BenchmarkSet:
    scene_id: str
    levels: Mapping[int, Sequence] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(s) for s in self.levels.values()}
        if len(lengths) > 1:
            raise SequenceError(f"level sequences differ in length: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(next(iter(self.levels.values()))) if self.levels else 0

    def __getitem__(self, level: int) -> Sequence:
        return self.levels[level]


def average_frames(window: Seq[Frame]) -> Frame:
    if len(window) == 0:
        raise SequenceError("cannot average an empty window")
    shape = window[0].shape
    if any(f.shape != shape for f in window):
        raise SequenceError("dimension mismatch inside averaging window")
    if len(window) == 1:
        return window[0]
    acc = np.zeros(shape, dtype=np.float64)
    for f in window:
        acc += f.pixels
    acc /= len(window)
    # guard against a last-ulp overshoot of the [0, 255] range
    return Frame(np.clip(acc, 0.0, 255.0))


def blur_ground_truth(annots: Seq[BoundingBox]) -> BoundingBox:
    """Average of the middle annotation (odd window) or middle two (even window)."""
    n = len(annots)
    if n == 0:
        raise SequenceError("cannot derive ground truth from an empty window")
    if n % 2:
        return annots[n // 2]
    a, b = annots[n // 2 - 1], annots[n // 2]
    return BoundingBox((a.x + b.x) / 2, (a.y + b.y) / 2, (a.w + b.w) / 2, (a.h + b.h) / 2)


def _blurred_item(src: Sequence, level: int, start: int) -> tuple[Frame, BoundingBox]:
    stop = start + level
    return (
        average_frames(src.frames[start:stop]),
        blur_ground_truth(src.annotations[start:stop]),
    )


def synthesize_level(src: Sequence, level: int) -> Sequence:
    if level < 1:
        raise SequenceError("blur level must be >= 1")
    if level > len(src):
        raise SequenceError(f"blur level {level} exceeds sequence length {len(src)}")
    items = [_blurred_item(src, level, t) for t in range(len(src) - level + 1)]
    return Sequence(
        tuple(f for f, _ in items), tuple(b for _, b in items), fps=src.fps, blur_level=level
    )


def subsample(
    seq: Sequence,
    stride: int = DEFAULT_STRIDE,
    sharp_first: Frame | None = None,
    sharp_first_box: BoundingBox | None = None,
) -> Sequence:
    """Keep every `stride`-th frame; optionally swap in a sharp first frame/box."""
    if stride < 1:
        raise SequenceError("stride must be >= 1")
    frames = list(seq.frames[::stride])
    boxes = list(seq.annotations[::stride])
    if sharp_first is not None:
        frames[0] = sharp_first
    if sharp_first_box is not None:
        boxes[0] = sharp_first_box
    return Sequence(tuple(frames), tuple(boxes), fps=seq.fps / stride, blur_level=seq.blur_level)


def common_length(n_source: int, levels: Iterable[int] = LEVELS, stride: int = DEFAULT_STRIDE) -> int:
    return min(math.ceil((n_source - level + 1) / stride) for level in levels)


def build_benchmark(
    src: Sequence,
    scene_id: str = "scene",
    levels: Iterable[int] = LEVELS,
    stride: int = DEFAULT_STRIDE,
) -> BenchmarkSet:
    """Build every blur level of one scene, truncated to a common length.

    Only the windows that survive subsampling are averaged; the result is
    identical to ``subsample(synthesize_level(src, L), ...)`` truncated.
    """
    levels = tuple(sorted(set(levels)))
    if not levels:
        raise SequenceError("no blur levels requested")
    if len(src) < max(levels):
        raise SequenceError(f"source too short: {len(src)} frames for level {max(levels)}")
    n = common_length(len(src), levels, stride)
    first, first_box = src.frames[0], src.annotations[0]
    out = {}
    for level in levels:
        frames, boxes = [first], [first_box]
        for t in range(1, n):
            f, b = _blurred_item(src, level, t * stride)
            frames.append(f)
            boxes.append(b)
        out[level] = Sequence(tuple(frames), tuple(boxes), fps=src.fps / stride, blur_level=level)
    return BenchmarkSet(scene_id, out)
