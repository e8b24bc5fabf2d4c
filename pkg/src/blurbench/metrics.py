"""Success plots, AUC, blur-robustness profiles, AUC gain and NRC/NRS."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence as Seq

import numpy as np

from .imgseq import BoundingBox

LEVELS = (1, 2, 4, 8, 16)
# 0.00, 0.05, ..., 1.00 built from integers so every threshold is the nearest double
THRESHOLDS = tuple(k / 20 for k in range(21))
SUCCESS_CUTOFF = 0.5


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class SuccessCurve:
    thresholds: tuple[float, ...]
    rates: tuple[float, ...]


@dataclass(frozen=True)
class RobustnessProfile:
    auc_by_level: dict[int, float]
    mean_auc: float
    std_auc: float


@dataclass(frozen=True)
class NRC:
    u: dict[int, float]
    nrs: float

    def as_list(self) -> list[float]:
        return [self.u[level] for level in sorted(self.u)]


def iou(a: BoundingBox, b: BoundingBox) -> float:
    if a.w <= 0 or a.h <= 0 or b.w <= 0 or b.h <= 0:
        raise MetricError("IoU needs positive-area boxes")
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.w * a.h + b.w * b.h - inter
    return min(1.0, max(0.0, inter / union))


def center_error(a: BoundingBox, b: BoundingBox) -> float:
    (ax, ay), (bx, by) = a.center, b.center
    return math.hypot(ax - bx, ay - by)


def success_curve(ious: Seq[float], thresholds: Seq[float] = THRESHOLDS) -> SuccessCurve:
    """Fraction of frames whose IoU is strictly greater than each threshold."""
    values = np.asarray(ious, dtype=np.float64)
    if values.size == 0:
        raise MetricError("success curve of an empty IoU list")
    if values.min() < 0.0 or values.max() > 1.0:
        raise MetricError("IoU values must lie in [0, 1]")
    n = values.size
    rates = tuple(int(np.count_nonzero(values > t)) / n for t in thresholds)
    return SuccessCurve(tuple(thresholds), rates)


def auc(c: SuccessCurve) -> float:
    return math.fsum(c.rates) / len(c.rates)


def auc_of(ious: Seq[float]) -> float:
    return auc(success_curve(ious))


def auc_gain(a_level: float, a_1: float) -> float:
    return a_level - a_1


def success_frames(ious_on_level1: Seq[float], cutoff: float = SUCCESS_CUTOFF) -> list[int]:
    return [i for i, v in enumerate(ious_on_level1) if v > cutoff]


def nrc(per_level_ious: Mapping[int, Seq[float]], i_succ: Iterable[int]) -> NRC:
    """Normalized robustness curve over the sharp-success frame set.

    ``u_L`` is the mean IoU on level ``L`` over `i_succ`; the vector is divided
    by ``u_1`` and its mean is the normalized robustness score.
    """
    idx = sorted(set(i_succ))
    if not idx:
        raise MetricError("tracker never succeeded on sharp subset")
    if 1 not in per_level_ious:
        raise MetricError("level 1 IoUs are required")
    raw = {}
    for level, values in per_level_ious.items():
        if idx[-1] >= len(values):
            raise MetricError(f"level {level} IoU list does not cover the success frames")
        raw[level] = math.fsum(values[i] for i in idx) / len(idx)
    u1 = raw[1]
    if u1 <= 0:
        raise MetricError("u_1 is zero")
    u = {level: (1.0 if level == 1 else raw[level] / u1) for level in sorted(raw)}
    return NRC(u, math.fsum(u.values()) / len(u))


def nrc_from_raw_means(raw_means: Mapping[int, float]) -> NRC:
    u1 = raw_means[1]
    if u1 <= 0:
        raise MetricError("u_1 is zero")
    u = {level: (1.0 if level == 1 else raw_means[level] / u1) for level in sorted(raw_means)}
    return NRC(u, math.fsum(u.values()) / len(u))


def robustness_profile(auc_by_level: Mapping[int, float], levels: Seq[int] = LEVELS) -> RobustnessProfile:
    missing = [level for level in levels if level not in auc_by_level]
    if missing:
        raise MetricError(f"missing level(s) {missing}")
    values = [float(auc_by_level[level]) for level in levels]
    mean = math.fsum(values) / len(values)
    var = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return RobustnessProfile({level: auc_by_level[level] for level in levels}, mean, math.sqrt(var))
