"""Deblur operators: linear motion PSFs, Wiener deconvolution, a blind grid
search, and a subprocess bridge for external deblurring programs."""

from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .imgseq import Frame, SequenceError, read_image, write_image

DEFAULT_K = 0.01
BLIND_LENGTHS = (3, 5, 9, 15)
BLIND_ANGLES = (0.0, 45.0, 90.0, 135.0)


class DeblurError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MotionPSF:
    length: float
    angle: float
    kernel: np.ndarray

    @property
    def radius(self) -> int:
        return self.kernel.shape[0] // 2

    @property
    def is_identity(self) -> bool:
        return self.kernel.size == 1


class Deblurrer(Protocol):
    def __call__(self, f: Frame) -> Frame: ...


def linear_psf(length: float, angle: float = 0.0) -> MotionPSF:
    """Anti-aliased line segment of `length` pixels at `angle` degrees.

    Each pixel's weight is the segment length covered by its cell along the
    motion direction times a linear falloff across it.
    """
    if not length > 0:
        raise DeblurError("PSF length must be positive")
    if length < 1:
        raise DeblurError("PSF length must be >= 1")
    if length == 1:
        return MotionPSF(1.0, float(angle), np.ones((1, 1)))
    radius = int(math.ceil(length / 2.0)) + 1
    theta = math.radians(angle)
    ux, uy = math.cos(theta), -math.sin(theta)  # image rows grow downwards
    ys, xs = np.mgrid[-radius : radius + 1, -radius : radius + 1].astype(np.float64)
    along = xs * ux + ys * uy
    across = -xs * uy + ys * ux
    half = length / 2.0
    cover = np.clip(np.minimum(along + 0.5, half) - np.maximum(along - 0.5, -half), 0.0, 1.0)
    falloff = np.clip(1.0 - np.abs(across), 0.0, 1.0)
    k = cover * falloff
    k[k < 1e-12] = 0.0
    k = k / k.sum()
    # trim empty border rows/cols symmetrically so the kernel stays centred
    nz_r, nz_c = np.nonzero(k.sum(axis=1))[0], np.nonzero(k.sum(axis=0))[0]
    trim = min(nz_r[0], k.shape[0] - 1 - nz_r[-1], nz_c[0], k.shape[1] - 1 - nz_c[-1])
    if trim:
        k = k[trim:-trim, trim:-trim]
    return MotionPSF(float(length), float(angle), k)


def identity_psf() -> MotionPSF:
    return linear_psf(1)


def convolve(image: np.ndarray, kernel: np.ndarray, mode: str = "reflect") -> np.ndarray:
    """Direct spatial convolution of a 2-D array with a small odd kernel."""
    r = kernel.shape[0] // 2
    padded = np.pad(image, r, mode=mode)
    out = np.zeros_like(image, dtype=np.float64)
    h, w = image.shape
    for dy in range(kernel.shape[0]):
        for dx in range(kernel.shape[1]):
            k = kernel[dy, dx]
            if k:
                # convolution flips the kernel
                out += k * padded[2 * r - dy : 2 * r - dy + h, 2 * r - dx : 2 * r - dx + w]
    return out


def blur_frame(f: Frame, psf: MotionPSF) -> Frame:
    chans = [convolve(f.pixels[:, :, c], psf.kernel) for c in range(f.channels)]
    return Frame.clipped(np.stack(chans, axis=-1))


def _kernel_otf(kernel: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    padded = np.zeros(shape)
    kh, kw = kernel.shape
    padded[:kh, :kw] = kernel
    padded = np.roll(padded, (-(kh // 2), -(kw // 2)), axis=(0, 1))
    return np.fft.rfft2(padded)


def _even_extension(a: np.ndarray) -> np.ndarray:
    """Whole-sample symmetric periodic extension (period 2n - 2 per axis)."""
    if a.shape[1] > 2:
        a = np.concatenate([a, a[:, -2:0:-1]], axis=1)
    if a.shape[0] > 2:
        a = np.concatenate([a, a[-2:0:-1]], axis=0)
    return a


def periodic_smooth(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split u = p + s with p seam-free under periodic wrap and s smooth.

    s solves a Poisson equation driven by the jumps across the wrapped
    borders (periodic-plus-smooth decomposition).
    """
    m, n = u.shape
    v = np.zeros_like(u, dtype=np.float64)
    v[0, :] += u[-1, :] - u[0, :]
    v[-1, :] += u[0, :] - u[-1, :]
    v[:, 0] += u[:, -1] - u[:, 0]
    v[:, -1] += u[:, 0] - u[:, -1]
    denom = 2 * np.cos(2 * np.pi * np.arange(m) / m)[:, None] + 2 * np.cos(2 * np.pi * np.arange(n) / n)[None, :] - 4
    denom[0, 0] = 1.0
    S = np.fft.fft2(v) / denom
    S[0, 0] = 0.0
    smooth = np.fft.ifft2(S).real
    return u - smooth, smooth


def _check_kernel(kernel: np.ndarray) -> None:
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1] or kernel.shape[0] % 2 == 0:
        raise DeblurError("PSF kernel must be a square odd-sized grid")
    if not np.isfinite(kernel).all() or kernel.sum() <= 0:
        raise DeblurError("degenerate PSF kernel")


def _mirror_symmetric(kernel: np.ndarray) -> bool:
    return np.allclose(kernel, kernel[::-1], atol=1e-12) and np.allclose(kernel, kernel[:, ::-1], atol=1e-12)


@lru_cache(maxsize=256)
def _wiener_filter(kernel_bytes: bytes, ksize: int, shape: tuple[int, int], K: float) -> np.ndarray:
    kernel = np.frombuffer(kernel_bytes).reshape(ksize, ksize)
    H = _kernel_otf(kernel, shape)
    G = np.conj(H) / (np.abs(H) ** 2 + K)
    G.flags.writeable = False
    return G


def _filter_for(psf: MotionPSF, shape: tuple[int, int], K: float) -> np.ndarray:
    k = np.ascontiguousarray(psf.kernel, dtype=np.float64)
    return _wiener_filter(k.tobytes(), k.shape[0], shape, float(K))


class _Spectra:
    """Per-channel FFTs of a frame under both boundary models, built lazily.

    Mirror-symmetric kernels (horizontal, vertical) commute with the even
    extension, so the circular model is exact on it. Other kernels would see
    the mirrored kernel in the reflected copies; they run on the periodic
    component instead and the smooth remainder is added back unfiltered.
    """

    def __init__(self, f: Frame):
        self.f = f
        self._even = None
        self._periodic = None

    def even(self) -> list[np.ndarray]:
        if self._even is None:
            self._even = [np.fft.rfft2(_even_extension(self.f.pixels[:, :, c])) for c in range(self.f.channels)]
        return self._even

    def periodic(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        if self._periodic is None:
            parts = [periodic_smooth(self.f.pixels[:, :, c]) for c in range(self.f.channels)]
            self._periodic = ([np.fft.rfft2(p) for p, _ in parts], [s for _, s in parts])
        return self._periodic

    def deblur(self, psf: MotionPSF, K: float) -> Frame:
        f = self.f
        out = np.empty(f.shape)
        if _mirror_symmetric(psf.kernel):
            shape = _extended_shape(f)
            G = _filter_for(psf, shape, K)
            for c, F in enumerate(self.even()):
                out[:, :, c] = np.fft.irfft2(F * G, s=shape)[: f.height, : f.width]
        else:
            shape = (f.height, f.width)
            G = _filter_for(psf, shape, K)
            spectra, smooth = self.periodic()
            for c, F in enumerate(spectra):
                out[:, :, c] = np.fft.irfft2(F * G, s=shape) + smooth[c]
        return Frame.clipped(out)


def _extended_shape(f: Frame) -> tuple[int, int]:
    h, w = f.height, f.width
    return (2 * h - 2 if h > 2 else h, 2 * w - 2 if w > 2 else w)


def wiener_deblur(f: Frame, psf: MotionPSF, K: float = DEFAULT_K) -> Frame:
    """Wiener deconvolution per channel, conj(H) / (|H|^2 + K).

    The FFT never sees a wrap-around seam: horizontal and vertical kernels
    run on the mirror-reflected periodic extension (reflect padding carried
    out to a full period), other kernels on the periodic component of the
    frame. Output is clipped to [0, 255].
    """
    if not K > 0:
        raise DeblurError("Wiener K must be positive")
    _check_kernel(psf.kernel)
    if psf.kernel.shape[0] > min(f.height, f.width):
        raise DeblurError("PSF kernel larger than frame")
    if psf.is_identity:
        return f
    return _Spectra(f).deblur(psf, K)


def blind_candidates(lengths=BLIND_LENGTHS, angles=BLIND_ANGLES) -> list[MotionPSF]:
    return [identity_psf()] + [linear_psf(n, a) for n in lengths for a in angles]


def blind_deblur(
    f: Frame,
    assessor: Callable[[Frame], float],
    K: float = DEFAULT_K,
    candidates: list[MotionPSF] | None = None,
) -> tuple[Frame, MotionPSF]:
    """Exhaustive PSF grid search keeping the output the assessor scores sharpest.

    Ties resolve to the earliest candidate; the identity comes first.
    """
    if not K > 0:
        raise DeblurError("Wiener K must be positive")
    spectra = _Spectra(f)  # shared by every candidate
    best = None
    for psf in candidates or blind_candidates():
        if psf.kernel.shape[0] > min(f.height, f.width):
            continue
        out = f if psf.is_identity else spectra.deblur(psf, K)
        score = assessor(out)
        if best is None or score > best[0]:
            best = (score, out, psf)
    if best is None:
        raise DeblurError("no PSF candidate fits the frame")
    return best[1], best[2]


def external_deblur(f: Frame, command_template: str, timeout: float = 30.0) -> Frame:
    """Run an external program on a temporary image and read its output back.

    `command_template` must contain ``{input}`` and ``{output}`` placeholders.
    """
    if "{input}" not in command_template or "{output}" not in command_template:
        raise DeblurError("command template needs {input} and {output} placeholders")
    with tempfile.TemporaryDirectory(prefix="blurbench-") as tmp:
        src, dst = Path(tmp) / "input.png", Path(tmp) / "output.png"
        write_image(f, src)
        cmd = command_template.format(input=shlex.quote(str(src)), output=shlex.quote(str(dst)))
        try:
            proc = subprocess.run(cmd, shell=True, capture_output=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            raise DeblurError(f"external deblurrer timed out after {timeout} s") from exc
        if proc.returncode != 0:
            raise DeblurError(
                f"external deblurrer failed (exit {proc.returncode}): {proc.stderr.decode(errors='replace').strip()}"
            )
        if not dst.exists():
            raise DeblurError("external deblurrer produced no output image")
        try:
            out = read_image(dst)
        except SequenceError as exc:
            raise DeblurError(str(exc)) from exc
    if (out.height, out.width) != (f.height, f.width):
        raise DeblurError(f"dimension mismatch: got {out.width}x{out.height}, expected {f.width}x{f.height}")
    if out.channels != f.channels:
        out = Frame(np.repeat(out.pixels, f.channels, axis=2)) if out.channels == 1 else Frame(out.gray())
    return out


class IdentityDeblur:
    name = "none"

    def __call__(self, f: Frame) -> Frame:
        return f

    def config(self) -> dict:
        return {"deblur": self.name}


class WienerDeblur:
    """Known-PSF Wiener deconvolution."""

    name = "wiener"

    def __init__(self, length: float = 9, angle: float = 0.0, K: float = DEFAULT_K):
        self.psf = linear_psf(length, angle)
        self.K = K

    def __call__(self, f: Frame) -> Frame:
        return wiener_deblur(f, self.psf, self.K)

    def config(self) -> dict:
        return {"deblur": self.name, "length": self.psf.length, "angle": self.psf.angle, "K": self.K}


class BlindWienerDeblur:
    name = "blind"

    def __init__(self, assessor: Callable[[Frame], float], K: float = DEFAULT_K):
        self.assessor = assessor
        self.K = K
        self.candidates = blind_candidates()

    def __call__(self, f: Frame) -> Frame:
        return blind_deblur(f, self.assessor, self.K, self.candidates)[0]

    def config(self) -> dict:
        return {"deblur": self.name, "K": self.K, "assessor": getattr(self.assessor, "name", "custom")}


class ExternalDeblur:
    name = "external"

    def __init__(self, template: str, timeout: float = 30.0):
        if "{input}" not in template or "{output}" not in template:
            raise DeblurError("command template needs {input} and {output} placeholders")
        self.template = template
        self.timeout = timeout

    def __call__(self, f: Frame) -> Frame:
        return external_deblur(f, self.template, self.timeout)

    def config(self) -> dict:
        return {"deblur": self.name, "template": self.template}


def make_deblurrer(spec: str, assessor: Callable[[Frame], float] | None = None, K: float = DEFAULT_K):
    """Parse ``wiener | blind | external:<template> | none``."""
    if spec in ("none", "identity", ""):
        return IdentityDeblur()
    if spec == "wiener":
        return WienerDeblur(K=K)
    if spec.startswith("wiener:"):
        length, _, angle = spec.split(":", 1)[1].partition(",")
        return WienerDeblur(float(length), float(angle or 0.0), K)
    if spec == "blind":
        if assessor is None:
            from .assessor import LaplacianAssessor

            assessor = LaplacianAssessor()
        return BlindWienerDeblur(assessor, K)
    if spec.startswith("external:"):
        return ExternalDeblur(spec.split(":", 1)[1])
    raise DeblurError(f"unknown deblur mode {spec!r}")
