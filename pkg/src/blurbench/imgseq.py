"""Frames, bounding boxes and sequences, plus image/annotation I/O."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence as Seq

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm", ".jpg", ".jpeg", ".bmp")
ANNOTATION_NAME = "groundtruth.txt"
LUMA = np.array([0.299, 0.587, 0.114])


class SequenceError(ValueError):
    """Raised for malformed sequences, annotation files or images."""


@dataclass(frozen=True, eq=False)
class Frame:
    """An image buffer of shape (height, width, channels) holding reals in [0, 255]."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise SequenceError(f"unsupported frame shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise SequenceError("frame must be at least 1x1")
        if arr.size and (not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 255.0):
            raise SequenceError("pixel values must lie in [0, 255]")
        if arr is self.pixels:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def clipped(cls, pixels: np.ndarray) -> "Frame":
        """Build a frame after clipping values into [0, 255]."""
        return cls(np.clip(np.nan_to_num(pixels, nan=0.0, posinf=255.0, neginf=0.0), 0.0, 255.0))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pixels.shape

    def gray(self) -> np.ndarray:
        """2-D luma array."""
        return to_gray(self).pixels[:, :, 0]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box; (x, y) is the top-left corner, 0-based pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise SequenceError(f"box {name} must be finite")
            object.__setattr__(self, name, value)
        if self.w <= 0 or self.h <= 0:
            raise SequenceError(f"degenerate box: w={self.w}, h={self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def translated(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)

    def with_center(self, cx: float, cy: float) -> "BoundingBox":
        return BoundingBox(cx - self.w / 2.0, cy - self.h / 2.0, self.w, self.h)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    def inside(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x + self.w <= width and self.y + self.h <= height


@dataclass(frozen=True)
class Sequence:
    frames: tuple[Frame, ...]
    annotations: tuple[BoundingBox, ...]
    fps: float = 30.0
    blur_level: int | str = "source"

    def __post_init__(self):
        frames = tuple(self.frames)
        annotations = tuple(self.annotations)
        if not frames:
            raise SequenceError("sequence must contain at least one frame")
        if len(frames) != len(annotations):
            raise SequenceError(
                f"annotation count mismatch: {len(frames)} frames, {len(annotations)} annotations"
            )
        shape = frames[0].shape
        if any(f.shape != shape for f in frames):
            raise SequenceError("all frames in a sequence must share dimensions")
        if self.fps <= 0:
            raise SequenceError("fps must be positive")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "annotations", annotations)

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class RegionMapping:
    """Maps region-local coordinates back to frame coordinates.

    A region is an unscaled window, so the map is a pure translation by the
    integer offset of the region's top-left corner.
    """

    x0: int
    y0: int
    width: int
    height: int

    def to_frame(self, u: float, v: float) -> tuple[float, float]:
        return u + self.x0, v + self.y0

    def to_region(self, x: float, y: float) -> tuple[float, float]:
        return x - self.x0, y - self.y0

    def box_to_frame(self, box: BoundingBox) -> BoundingBox:
        return box.translated(self.x0, self.y0)

    def box_to_region(self, box: BoundingBox) -> BoundingBox:
        return box.translated(-self.x0, -self.y0)


def to_gray(f: Frame) -> Frame:
    if f.channels == 1:
        return f
    if f.channels != 3:
        raise SequenceError(f"unsupported channel count {f.channels}")
    gray = f.pixels @ LUMA
    return Frame(np.clip(gray, 0.0, 255.0))


def region_size(box: BoundingBox, scale: float) -> tuple[int, int]:
    """Integer (width, height) of a search region `scale` times the box."""
    return max(1, int(round(scale * box.w))), max(1, int(round(scale * box.h)))


def crop_region(f: Frame, b: BoundingBox, scale: float = 2.24) -> tuple[Frame, RegionMapping]:
    """Crop a window of `scale` x box size centred on the box centre.

    Pixels outside the frame are filled by edge replication.
    """
    if b.w <= 0 or b.h <= 0:
        raise SequenceError("degenerate box")
    if scale < 1:
        raise SequenceError("scale must be >= 1")
    rw, rh = region_size(b, scale)
    cx, cy = b.center
    x0 = int(math.floor(cx - rw / 2.0 + 0.5))
    y0 = int(math.floor(cy - rh / 2.0 + 0.5))
    rows = np.clip(np.arange(y0, y0 + rh), 0, f.height - 1)
    cols = np.clip(np.arange(x0, x0 + rw), 0, f.width - 1)
    region = f.pixels[np.ix_(rows, cols)]
    return Frame(region), RegionMapping(x0, y0, rw, rh)


def read_image(path: str | os.PathLike) -> Frame:
    try:
        with Image.open(path) as im:
            if im.mode in ("1", "L", "LA", "I", "I;16", "F"):
                arr = np.asarray(im.convert("L"), dtype=np.float64)
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise SequenceError(f"unreadable image {path}: {exc}") from exc
    return Frame(arr)


def write_image(f: Frame, path: str | os.PathLike) -> None:
    """Write a frame, quantizing to 8 bits (round half to even, then clip)."""
    data = np.clip(np.rint(f.pixels), 0, 255).astype(np.uint8)
    img = Image.fromarray(data[:, :, 0] if f.channels == 1 else data)
    img.save(path)


def parse_annotation_line(line: str, lineno: int = 0) -> BoundingBox:
    parts = [p for p in line.replace("\t", ",").replace(" ", ",").split(",") if p]
    if len(parts) != 4:
        raise SequenceError(f"unparsable annotation line {lineno}: {line!r}")
    try:
        return BoundingBox(*(float(p) for p in parts))
    except ValueError as exc:
        raise SequenceError(f"unparsable annotation line {lineno}: {line!r}") from exc


def read_annotations(path: str | os.PathLike) -> list[BoundingBox]:
    boxes = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                boxes.append(parse_annotation_line(line.strip(), i))
    return boxes


def format_box(b: BoundingBox) -> str:
    return ",".join(repr(float(v)) if not float(v).is_integer() else str(int(v)) for v in b.as_list())


def write_annotations(boxes: Iterable[BoundingBox], path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        for b in boxes:
            fh.write(format_box(b) + "\n")


def list_images(frame_dir: str | os.PathLike) -> list[Path]:
    return sorted(p for p in Path(frame_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def load_sequence(
    frame_dir: str | os.PathLike,
    annotation_file: str | os.PathLike | None = None,
    fps: float = 30.0,
    blur_level: int | str = "source",
) -> Sequence:
    """Load lexicographically ordered images plus an x,y,w,h annotation file.

    If `annotation_file` is None, ``groundtruth.txt`` inside `frame_dir` is used.
    """
    frame_dir = Path(frame_dir)
    if annotation_file is None:
        annotation_file = frame_dir / ANNOTATION_NAME
    paths = list_images(frame_dir)
    boxes = read_annotations(annotation_file)
    if len(paths) != len(boxes):
        raise SequenceError(
            f"annotation count mismatch: {len(paths)} images, {len(boxes)} annotation lines"
        )
    frames = [read_image(p) for p in paths]
    return Sequence(tuple(frames), tuple(boxes), fps=fps, blur_level=blur_level)


def save_sequence(seq: Sequence, out_dir: str | os.PathLike, suffix: str = ".png") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(seq) - 1)))
    for i, f in enumerate(seq.frames):
        write_image(f, out_dir / f"{i:0{width}d}{suffix}")
    write_annotations(seq.annotations, out_dir / ANNOTATION_NAME)
    return out_dir


def stack(frames: Seq[Frame]) -> np.ndarray:
    return np.stack([f.pixels for f in frames])
