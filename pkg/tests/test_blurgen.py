import numpy as np
import pytest

from blurbench.blurgen import (
    average_frames,
    blur_ground_truth,
    build_benchmark,
    common_length,
    subsample,
    synthesize_level,
)
from blurbench.imgseq import BoundingBox, Frame, SequenceError
from helpers import tiny_sequence


def test_average_of_one_is_identity():
    f = Frame(np.full((3, 3), 7.0))
    assert average_frames([f]) is f


def test_average_values():
    a, b = Frame(np.full((2, 2), 10.0)), Frame(np.full((2, 2), 20.0))
    assert (average_frames([a, b]).pixels == 15.0).all()


def test_average_rejects_mixed_shapes():
    with pytest.raises(SequenceError):
        average_frames([Frame(np.zeros((2, 2))), Frame(np.zeros((2, 3)))])


def test_ground_truth_odd_and_even():
    boxes = [BoundingBox(i, 0, 10, 10) for i in range(4)]
    assert blur_ground_truth(boxes[:3]).x == 1
    assert blur_ground_truth(boxes).x == 1.5


def test_synthesize_level_length_and_content():
    seq = tiny_sequence(6)
    lv = synthesize_level(seq, 4)
    assert len(lv) == 3
    # frames hold 0, 10, ..., 50: window [1..4] averages to 25
    assert lv.frames[1].pixels[0, 0, 0] == 25.0
    assert lv.annotations[1].x == 2.5


def test_synthesize_level_too_long():
    with pytest.raises(SequenceError):
        synthesize_level(tiny_sequence(3), 4)


def test_subsample_sharp_first():
    seq = tiny_sequence(10)
    sharp = Frame(np.full((20, 30), 99.0))
    out = subsample(seq, 4, sharp, BoundingBox(0, 0, 1, 1))
    assert len(out) == 3
    assert out.frames[0] == sharp
    assert out.frames[1] == seq.frames[4]


def test_common_length_240():
    assert common_length(240) == 29


def test_build_benchmark_matches_reference_path():
    seq = tiny_sequence(40)
    bench = build_benchmark(seq, "t", stride=8)
    n = common_length(40)
    for level in (1, 2, 4, 8, 16):
        ref = subsample(synthesize_level(seq, level), 8, seq.frames[0], seq.annotations[0])
        got = bench[level]
        assert len(got) == n
        assert got.frames == ref.frames[:n]
        assert got.annotations == ref.annotations[:n]
        assert got.fps == seq.fps / 8


def test_build_benchmark_source_too_short():
    with pytest.raises(SequenceError):
        build_benchmark(tiny_sequence(10))
