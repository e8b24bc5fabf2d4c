import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blurbench.imgseq import (
    BoundingBox,
    Frame,
    RegionMapping,
    Sequence,
    SequenceError,
    crop_region,
    load_sequence,
    parse_annotation_line,
    read_annotations,
    read_image,
    save_sequence,
    to_gray,
    write_image,
)
from helpers import tiny_sequence


def test_frame_accepts_2d_and_is_read_only():
    f = Frame(np.zeros((4, 5)))
    assert f.shape == (4, 5, 1)
    with pytest.raises(ValueError):
        f.pixels[0, 0, 0] = 1.0


@pytest.mark.parametrize("bad", [np.full((3, 3), 256.0), np.full((3, 3), -1.0), np.full((3, 3), np.nan)])
def test_frame_rejects_out_of_range(bad):
    with pytest.raises(SequenceError):
        Frame(bad)


def test_frame_rejects_two_channels():
    with pytest.raises(SequenceError):
        Frame(np.zeros((3, 3, 2)))


def test_clipped_frame():
    f = Frame.clipped(np.array([[-5.0, 300.0]]))
    assert f.pixels.ravel().tolist() == [0.0, 255.0]


def test_gray_luma():
    f = Frame(np.array([[[100.0, 50.0, 200.0]]]))
    assert to_gray(f).pixels[0, 0, 0] == pytest.approx(0.299 * 100 + 0.587 * 50 + 0.114 * 200)


def test_box_validation():
    with pytest.raises(SequenceError):
        BoundingBox(0, 0, 0, 3)
    with pytest.raises(SequenceError):
        BoundingBox(0, math.inf, 2, 3)
    b = BoundingBox(1, 2, 4, 6)
    assert b.center == (3.0, 5.0)
    assert b.with_center(*b.center) == b


def test_sequence_count_mismatch():
    f = Frame(np.zeros((4, 4)))
    with pytest.raises(SequenceError, match="annotation count mismatch"):
        Sequence((f, f), (BoundingBox(0, 0, 1, 1),))


def test_sequence_dimension_mismatch():
    with pytest.raises(SequenceError):
        Sequence((Frame(np.zeros((4, 4))), Frame(np.zeros((4, 5)))), (BoundingBox(0, 0, 1, 1),) * 2)


def test_annotation_parsing():
    assert parse_annotation_line("1, 2.5,3,4").as_list() == [1, 2.5, 3, 4]
    assert parse_annotation_line("1\t2 3 4").as_list() == [1, 2, 3, 4]
    with pytest.raises(SequenceError):
        parse_annotation_line("1,2,3")


def test_crop_region_inside_frame():
    img = np.arange(100 * 80, dtype=float).reshape(80, 100) % 255
    f = Frame(img)
    box = BoundingBox(40, 30, 10, 10)
    region, m = crop_region(f, box, 2.0)
    assert (region.width, region.height) == (20, 20)
    assert (m.x0, m.y0) == (35, 25)
    np.testing.assert_array_equal(region.pixels[:, :, 0], img[25:45, 35:55])


def test_crop_region_edge_replication():
    img = np.tile(np.arange(10, dtype=float), (10, 1))
    region, m = crop_region(Frame(img), BoundingBox(0, 0, 4, 4), 3.0)
    assert m.x0 < 0
    # columns left of the frame repeat column 0
    assert (region.pixels[:, : -m.x0, 0] == 0).all()


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-50, 150), st.floats(-50, 150), st.floats(1, 40), st.floats(1, 40), st.floats(1, 3)
)
def test_region_mapping_roundtrip(x, y, w, h, scale):
    f = Frame(np.zeros((60, 70)))
    region, m = crop_region(f, BoundingBox(x, y, w, h), scale)
    assert (region.width, region.height) == (m.width, m.height)
    box = BoundingBox(x, y, w, h)
    assert m.box_to_frame(m.box_to_region(box)).as_list() == pytest.approx(box.as_list())
    # the box centre lands within half a pixel of the region centre
    cx, cy = m.to_region(*box.center)
    assert abs(cx - m.width / 2) <= 0.5 + 1e-9 and abs(cy - m.height / 2) <= 0.5 + 1e-9


def test_image_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    for channels in (1, 3):
        f = Frame(rng.integers(0, 256, (7, 9, channels)).astype(float))
        path = tmp_path / f"im{channels}.png"
        write_image(f, path)
        assert read_image(path) == f


def test_sequence_roundtrip(tmp_path):
    seq = tiny_sequence()
    save_sequence(seq, tmp_path / "s")
    back = load_sequence(tmp_path / "s")
    assert back.frames == seq.frames
    assert back.annotations == seq.annotations


def test_load_sequence_count_mismatch(tmp_path):
    save_sequence(tiny_sequence(), tmp_path)
    lines = (tmp_path / "groundtruth.txt").read_text().splitlines()
    (tmp_path / "groundtruth.txt").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(SequenceError, match="annotation count mismatch"):
        load_sequence(tmp_path)


def test_read_annotations_skips_blank_lines(tmp_path):
    p = tmp_path / "gt.txt"
    p.write_text("1,2,3,4\n\n5,6,7,8\n")
    assert [b.as_list() for b in read_annotations(p)] == [[1, 2, 3, 4], [5, 6, 7, 8]]


def test_region_mapping_translation():
    m = RegionMapping(5, -3, 10, 10)
    assert m.to_frame(1.5, 2.0) == (6.5, -1.0)
