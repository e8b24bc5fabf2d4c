"""Small builders shared by the test modules."""

import numpy as np

from blurbench.imgseq import BoundingBox, Frame, Sequence


def textured_frame(rng, h=48, w=64, channels=1) -> Frame:
    from blurbench.synth import value_noise

    n = value_noise(rng, (h, w), cells=(8, 4, 2))
    img = 40 + 170 * n
    return Frame(np.repeat(img[:, :, None], channels, axis=2))


def tiny_sequence(n=5, h=20, w=30) -> Sequence:
    frames = [Frame(np.full((h, w), float((10 * i) % 256))) for i in range(n)]
    boxes = [BoundingBox(i, 2 * i, 4 + i, 5) for i in range(n)]
    return Sequence(tuple(frames), tuple(boxes), fps=240.0)
