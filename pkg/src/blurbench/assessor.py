"""Blur assessors and the raw/deblurred evidence score.

An assessor is any callable ``Frame -> float`` where larger means sharper.
It is only ever consumed through the difference between its score on a
deblurred region and on the raw region, so scene content largely cancels.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .imgseq import Frame, write_image

Assessor = Callable[[Frame], float]


class AssessorError(RuntimeError):
    pass


@dataclass(frozen=True)
class BlurEvidence:
    score_raw: float
    score_deblurred: float
    evidence: float


def laplacian(gray: np.ndarray) -> np.ndarray:
    """4-neighbour Laplacian over the valid interior."""
    return (
        gray[:-2, 1:-1] + gray[2:, 1:-1] + gray[1:-1, :-2] + gray[1:-1, 2:] - 4.0 * gray[1:-1, 1:-1]
    )


def sharpness_score(f: Frame) -> float:
    """log(1 + variance of the Laplacian) of the grayscale frame."""
    if f.height < 3 or f.width < 3:
        raise AssessorError("frame too small for a 3x3 Laplacian")
    lap = laplacian(f.gray())
    return math.log1p(float(lap.var()))


class LaplacianAssessor:
    name = "laplacian"

    def __call__(self, f: Frame) -> float:
        return sharpness_score(f)

    def config(self) -> dict:
        return {"assessor": self.name}


class ExternalAssessor:
    """Runs ``template`` with ``{input}`` replaced by an image path and
    parses a single real number from standard output."""

    name = "external"

    def __init__(self, template: str, timeout: float = 30.0):
        if "{input}" not in template:
            raise AssessorError("assessor template needs an {input} placeholder")
        self.template = template
        self.timeout = timeout

    def __call__(self, f: Frame) -> float:
        with tempfile.TemporaryDirectory(prefix="blurbench-assess-") as tmp:
            path = Path(tmp) / "region.png"
            write_image(f, path)
            try:
                proc = subprocess.run(
                    self.template.format(input=shlex.quote(str(path))),
                    shell=True,
                    capture_output=True,
                    timeout=self.timeout,
                )
            except subprocess.TimeoutExpired as exc:
                raise AssessorError(f"external assessor timed out after {self.timeout} s") from exc
        if proc.returncode != 0:
            raise AssessorError(f"external assessor failed (exit {proc.returncode})")
        try:
            value = float(proc.stdout.decode().strip().split()[0])
        except (ValueError, IndexError) as exc:
            raise AssessorError(f"external assessor printed no number: {proc.stdout!r}") from exc
        if not math.isfinite(value):
            raise AssessorError("external assessor returned a non-finite score")
        return value

    def config(self) -> dict:
        return {"assessor": self.name, "template": self.template}


def make_assessor(spec: str) -> Assessor:
    if spec == "laplacian":
        return LaplacianAssessor()
    if spec.startswith("external:"):
        return ExternalAssessor(spec.split(":", 1)[1])
    raise AssessorError(f"unknown assessor {spec!r}")


def blur_evidence(raw: Frame, deblurred: Frame, assessor: Assessor = sharpness_score) -> BlurEvidence:
    if raw.shape != deblurred.shape:
        raise AssessorError(f"dimension mismatch: {raw.shape} vs {deblurred.shape}")
    s_raw = float(assessor(raw))
    s_deb = s_raw if deblurred is raw or raw == deblurred else float(assessor(deblurred))
    return BlurEvidence(s_raw, s_deb, abs(s_deb - s_raw))
