"""Float image grids plus the numeric plumbing shared by every search path.

Images are ``H x W x C`` float64 grids with values in ``[-1, 1]``.  All
internal math stays in double precision; 8-bit PNG is the only external
format, so quantization happens exactly once at the codec boundary.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

# Slack for range checks on generator/codec outputs.
RANGE_EPS = 1e-6


class DimensionError(ValueError):
    """Image dimensions incompatible with the requested operation."""


class CodecError(ValueError):
    """Bytes could not be decoded as, or converted to, 8-bit RGB PNG."""


@dataclass(frozen=True)
class ImageBuffer:
    """Immutable ``H x W x C`` float64 image, row-major, channel-interleaved.

    Values produced by generators and the PNG codec stay within
    ``[-1 - RANGE_EPS, 1 + RANGE_EPS]``; intermediate buffers built by
    callers (perturbed probes, sums) only need to be finite.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise DimensionError(f"expected H x W x C data, got shape {arr.shape}")
        if arr.size == 0:
            raise DimensionError("empty image")
        if not np.isfinite(arr).all():
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def flat(self) -> np.ndarray:
        """Row-major, channel-interleaved view of the pixel data."""
        return self.data.reshape(-1)


def check_output_range(img: ImageBuffer, context: str = "image") -> ImageBuffer:
    """Assert the range contract for generator/codec outputs."""
    lo = float(img.data.min())
    hi = float(img.data.max())
    if lo < -1.0 - RANGE_EPS or hi > 1.0 + RANGE_EPS:
        raise ValueError(f"{context} values outside [-1, 1]: min={lo}, max={hi}")
    return img


def downscale_average(img: ImageBuffer, target_side: int) -> ImageBuffer:
    """Average disjoint pixel blocks down to a ``target_side`` square image.

    Requires ``target_side`` to divide both height and width.  Block
    averaging preserves the global mean of each channel.
    """
    if target_side < 1:
        raise DimensionError(f"target_side must be positive, got {target_side}")
    h, w = img.height, img.width
    if h % target_side or w % target_side:
        raise DimensionError(
            f"target_side {target_side} does not divide image dims {h}x{w}"
        )
    by, bx = h // target_side, w // target_side
    if by == 1 and bx == 1:
        return ImageBuffer(img.data.copy())
    blocks = img.data.reshape(target_side, by, target_side, bx, img.channels)
    return ImageBuffer(blocks.mean(axis=(1, 3)))


def downscale_average_adjoint(grad_small: np.ndarray, source_shape: tuple[int, int, int]) -> np.ndarray:
    """Adjoint of :func:`downscale_average` as a raw-array operation.

    Each source pixel receives its block's gradient divided by the block
    size, matching the 1/(by*bx) weight it carried in the forward mean.
    """
    h, w, c = source_shape
    t = grad_small.shape[0]
    by, bx = h // t, w // t
    g = np.repeat(np.repeat(grad_small, by, axis=0), bx, axis=1)
    return g / (by * bx)


def circular_shift(img: ImageBuffer, dy: int, dx: int) -> ImageBuffer:
    """Shift pixels down by ``dy`` and right by ``dx``, wrapping around."""
    return ImageBuffer(np.roll(img.data, shift=(dy, dx), axis=(0, 1)))


def encode_png(img: ImageBuffer) -> bytes:
    """Quantize to 8-bit RGB PNG via ``v -> round((v + 1) / 2 * 255)``."""
    if img.channels != 3:
        raise CodecError(f"PNG codec handles 3 channels, got {img.channels}")
    scaled = np.round((img.data + 1.0) / 2.0 * 255.0)
    quantized = np.clip(scaled, 0.0, 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(quantized, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> ImageBuffer:
    """Invert the codec's affine map back to float pixels in ``[-1, 1]``."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise CodecError(f"not a decodable PNG: {exc}") from exc
    return check_output_range(ImageBuffer(arr / 255.0 * 2.0 - 1.0), "decoded PNG")


def finite_difference_gradient(
    f: Callable[[np.ndarray], float], z: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient estimate, one coordinate at a time.

    This is the reference oracle every analytic gradient in the package is
    checked against.  Raises if ``f`` returns a non-finite value.
    """
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    z = np.asarray(z, dtype=np.float64)
    grad = np.zeros_like(z)
    for i in range(z.size):
        zp = z.copy()
        zp[i] += h
        zm = z.copy()
        zm[i] -= h
        fp = float(f(zp))
        fm = float(f(zm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite objective value near coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


@dataclass(frozen=True)
class GradCheckReport:
    """Aggregate of analytic-vs-finite-difference comparisons."""

    max_abs_error: float
    rel_error_l2: float
    probe_count: int


def gradient_check(
    f: Callable[[np.ndarray], float],
    grad_f: Callable[[np.ndarray], np.ndarray],
    probes: Sequence[np.ndarray],
    h: float = 1e-5,
) -> GradCheckReport:
    """Compare an analytic gradient against central differences at probe points.

    ``rel_error_l2`` is the worst per-probe relative L2 error; probes where
    the reference gradient vanishes fall back to absolute error.
    """
    max_abs = 0.0
    worst_rel = 0.0
    count = 0
    for z in probes:
        ref = finite_difference_gradient(f, np.asarray(z, dtype=np.float64), h)
        got = np.asarray(grad_f(np.asarray(z, dtype=np.float64)), dtype=np.float64)
        if got.shape != ref.shape:
            raise ValueError(f"gradient shape {got.shape} != probe shape {ref.shape}")
        diff = float(np.linalg.norm(got - ref))
        denom = float(np.linalg.norm(ref))
        max_abs = max(max_abs, float(np.max(np.abs(got - ref))))
        worst_rel = max(worst_rel, diff / denom if denom > 0 else diff)
        count += 1
    return GradCheckReport(max_abs_error=max_abs, rel_error_l2=worst_rel, probe_count=count)
