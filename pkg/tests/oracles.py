"""Independent reference computations the tests compare against.

These are deliberately naive (pixel loops, rasterization) so they share no
code path with the package.
"""

from __future__ import annotations

import math

import numpy as np


def raster_iou(a, b, step: float = 1 / 256) -> float:
    """IoU by counting cell centres of a fine grid inside each box."""
    x_lo, x_hi = min(a[0], b[0]), max(a[0] + a[2], b[0] + b[2])
    y_lo, y_hi = min(a[1], b[1]), max(a[1] + a[3], b[1] + b[3])
    xs = np.arange(x_lo + step / 2, x_hi, step)
    ys = np.arange(y_lo + step / 2, y_hi, step)

    def inside(box):
        ix = (xs >= box[0]) & (xs < box[0] + box[2])
        iy = (ys >= box[1]) & (ys < box[1] + box[3])
        return ix, iy

    ax, ay = inside(a)
    bx, by = inside(b)
    inter = np.count_nonzero(ax & bx) * np.count_nonzero(ay & by)
    union = np.count_nonzero(ax) * np.count_nonzero(ay) + np.count_nonzero(bx) * np.count_nonzero(by) - inter
    return inter / union if union else 0.0


def loop_auc(ious) -> float:
    total = 0
    for k in range(21):
        t = k / 20
        total += sum(1 for v in ious if v > t) / len(ious)
    return total / 21


def loop_zncc(region: np.ndarray, template: np.ndarray) -> np.ndarray:
    th, tw = template.shape
    h, w = region.shape
    t = template - template.mean()
    out = np.full((h - th + 1, w - tw + 1), -1.0)
    for i in range(h - th + 1):
        for j in range(w - tw + 1):
            p = region[i : i + th, j : j + tw]
            p = p - p.mean()
            den = math.sqrt((p * p).sum() * (t * t).sum())
            if den > 1e-6 * th * tw:
                out[i, j] = (p * t).sum() / den
    return out


def loop_convolve_reflect(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    r = k.shape[0] // 2
    h, w = img.shape
    out = np.zeros_like(img, dtype=float)
    for y in range(h):
        for x in range(w):
            s = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy, xx = y - dy, x - dx
                    # numpy "reflect": mirror without repeating the edge
                    yy = -yy if yy < 0 else (2 * (h - 1) - yy if yy >= h else yy)
                    xx = -xx if xx < 0 else (2 * (w - 1) - xx if xx >= w else xx)
                    s += k[dy + r, dx + r] * img[yy, xx]
            out[y, x] = s
    return out


def loop_laplacian_var(gray: np.ndarray) -> float:
    vals = []
    h, w = gray.shape
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            vals.append(gray[y - 1, x] + gray[y + 1, x] + gray[y, x - 1] + gray[y, x + 1] - 4 * gray[y, x])
    m = sum(vals) / len(vals)
    return sum((v - m) ** 2 for v in vals) / len(vals)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    mse = float(np.mean((np.asarray(a, float) - np.asarray(b, float)) ** 2))
    return math.inf if mse == 0 else 10 * math.log10(255.0**2 / mse)
