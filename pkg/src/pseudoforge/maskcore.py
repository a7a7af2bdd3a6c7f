"""Mask representations, codecs, geometric kernels, and IoU metrics.

All types are immutable values; all operations are pure functions, so
everything here is safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    CountMismatch,
    DimensionMismatch,
    InvalidThreshold,
    NoBoundary,
)


def _freeze(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BitMask:
    """Binary instance mask on a pixel grid."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise DimensionMismatch(f"mask must be 2-D and non-empty, got shape {bits.shape}")
        object.__setattr__(self, "bits", _freeze(bits))

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def area(self):
        return int(self.bits.sum())

    def __eq__(self, other):
        return isinstance(other, BitMask) and np.array_equal(self.bits, other.bits)


@dataclass(frozen=True, eq=False)
class ProbMask:
    """Per-pixel foreground probability map; every value in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise DimensionMismatch(f"probability map must be 2-D and non-empty, got shape {vals.shape}")
        if not np.all((vals >= 0.0) & (vals <= 1.0)):
            raise ValueError("probability values must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def __eq__(self, other):
        return isinstance(other, ProbMask) and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class RleMask:
    """Column-major run-length encoding, alternating runs starting with background."""

    height: int
    width: int
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if self.height < 1 or self.width < 1:
            raise DimensionMismatch("RLE dimensions must be at least 1x1")
        if any(c < 0 for c in counts):
            raise CountMismatch("run lengths must be non-negative")
        for a, b in zip(counts, counts[1:]):
            if a == 0 and b == 0:
                raise CountMismatch("consecutive zero-length runs")
        if sum(counts) != self.height * self.width:
            raise CountMismatch(
                f"run lengths sum to {sum(counts)}, expected {self.height * self.width}"
            )


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Euclidean pixel distance of every pixel to the nearest boundary pixel."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


def rle_encode(mask: BitMask) -> RleMask:
    """Encode a mask as column-major alternating run lengths."""
    counts = _kernels.rle_encode(mask.bits)
    return RleMask(mask.height, mask.width, tuple(int(c) for c in counts))


def rle_decode(rle: RleMask) -> BitMask:
    """Exact inverse of rle_encode."""
    total = sum(rle.counts)
    if total != rle.height * rle.width:
        raise CountMismatch(f"run lengths sum to {total}, expected {rle.height * rle.width}")
    bits = _kernels.rle_decode(np.asarray(rle.counts, dtype=np.int64), rle.height, rle.width)
    return BitMask(bits)


def binarize(p: ProbMask, t: float = 0.5) -> BitMask:
    """Threshold a probability map: foreground where value >= t.

    The test-time pipeline constant is t = 0.5; calibrated pipelines pass
    the solved pixel threshold instead.
    """
    if not (0.0 < t < 1.0):
        raise InvalidThreshold(f"threshold must lie in (0, 1), got {t}")
    return BitMask(p.values >= t)


def extract_boundary(mask: BitMask) -> BitMask:
    """Inner 4-connected boundary; pixels outside the image count as background."""
    return BitMask(_boundary_bits(mask.bits))


def _boundary_bits(bits):
    padded = np.pad(bits, 1, mode="constant", constant_values=False)
    has_bg_neighbor = ~(
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return bits & has_bg_neighbor


def distance_to_boundary(mask: BitMask) -> DistanceField:
    """Exact Euclidean distance of every pixel to the mask's nearest boundary pixel."""
    boundary = _boundary_bits(mask.bits)
    if not boundary.any():
        raise NoBoundary("mask has no boundary pixels (all background)")
    return DistanceField(_kernels.distance_field(boundary))


def downsample_mask(mask: BitMask, size: int) -> BitMask:
    """Area-average the mask onto a size x size grid, binarized at >= 0.5.

    Overlap weights are integers scaled by `size`, so the area fraction per
    output cell is an exact rational and the >= 0.5 tie (mapped to
    foreground) is decided exactly.
    """
    if size < 1:
        raise DimensionMismatch(f"target size must be >= 1, got {size}")
    h, w = mask.height, mask.width
    num = _overlap_matrix(size, h) @ mask.bits.astype(np.int64) @ _overlap_matrix(size, w).T
    # cell area fraction = num / (h * w); foreground iff fraction >= 1/2
    return BitMask(2 * num >= h * w)


def _overlap_matrix(size, n):
    """Integer overlap lengths (scaled by size) between output and input cells."""
    out = np.zeros((size, n), dtype=np.int64)
    for i in range(size):
        lo, hi = i * n, (i + 1) * n  # output cell in units of 1/size input pixels
        r0, r1 = lo // size, (hi + size - 1) // size
        for r in range(r0, min(r1, n)):
            out[i, r] = min(hi, (r + 1) * size) - max(lo, r * size)
    return out


def mask_iou(a: BitMask, b: BitMask) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    if a.bits.shape != b.bits.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.bits.shape} vs {b.bits.shape}")
    inter = int(np.count_nonzero(a.bits & b.bits))
    union = int(np.count_nonzero(a.bits | b.bits))
    return 1.0 if union == 0 else inter / union


def boundary_iou(a: BitMask, b: BitMask, d: float) -> float:
    """IoU restricted to the bands of each mask within distance d of its boundary.

    1.0 when both bands are empty (both masks empty).
    """
    if a.bits.shape != b.bits.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.bits.shape} vs {b.bits.shape}")
    if d < 1:
        raise ValueError(f"band width must be >= 1, got {d}")
    band_a = _boundary_band(a, d)
    band_b = _boundary_band(b, d)
    inter = int(np.count_nonzero(band_a & band_b))
    union = int(np.count_nonzero(band_a | band_b))
    return 1.0 if union == 0 else inter / union


def _boundary_band(mask: BitMask, d: float):
    if not mask.bits.any():
        return np.zeros_like(mask.bits)
    dist = distance_to_boundary(mask).values
    return mask.bits & (dist <= d)


def default_boundary_band(height: int, width: int) -> int:
    """Band width convention: 2% of the image diagonal, at least one pixel."""
    return max(1, round(0.02 * math.hypot(height, width)))


def tta_fuse(masks, transforms, size=None) -> ProbMask:
    """Average probability maps from weakly augmented inference passes.

    Each map is paired with the transform that produced it: "identity",
    "hflip", or "scale:<s>". Maps are inverse-transformed back to the base
    frame (hflip is its own inverse; scaled maps are bilinearly resampled)
    and averaged pixel-wise. The base frame size is taken from `size` or
    inferred from the first size-preserving transform.
    """
    if len(masks) != len(transforms):
        raise DimensionMismatch("one transform required per mask")
    if not masks:
        raise DimensionMismatch("nothing to fuse")
    parsed = [parse_transform(t) for t in transforms]
    if size is None:
        for m, (kind, _) in zip(masks, parsed):
            if kind in ("identity", "hflip"):
                size = (m.height, m.width)
                break
        else:
            raise DimensionMismatch(
                "base size cannot be inferred from scale-only transforms; pass size="
            )
    acc = np.zeros(size, dtype=np.float64)
    for m, (kind, s) in zip(masks, parsed):
        vals = m.values
        if kind == "hflip":
            vals = vals[:, ::-1]
        if kind in ("identity", "hflip"):
            if vals.shape != tuple(size):
                raise DimensionMismatch(
                    f"map shape {vals.shape} differs from base {tuple(size)}"
                )
        else:
            vals = _bilinear_resize(vals, size)
        acc += vals
    acc /= len(masks)
    return ProbMask(np.clip(acc, 0.0, 1.0))


def parse_transform(t):
    if t == "identity" or t == "hflip":
        return t, None
    if isinstance(t, str) and t.startswith("scale:"):
        s = float(t.split(":", 1)[1])
        if s <= 0:
            raise ValueError(f"scale factor must be positive, got {s}")
        return "scale", s
    raise ValueError(f"unknown transform {t!r}")


def _bilinear_resize(values, size):
    """Bilinear resampling with pixel centers at (i + 0.5) / n."""
    h, w = values.shape
    hh, ww = size
    ys = (np.arange(hh) + 0.5) * (h / hh) - 0.5
    xs = (np.arange(ww) + 0.5) * (w / ww) - 0.5
    ys = np.clip(ys, 0.0, h - 1.0)
    xs = np.clip(xs, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    v00 = values[np.ix_(y0, x0)]
    v01 = values[np.ix_(y0, x1)]
    v10 = values[np.ix_(y1, x0)]
    v11 = values[np.ix_(y1, x1)]
    top = v00 * (1 - fx) + v01 * fx
    bot = v10 * (1 - fx) + v11 * fx
    return top * (1 - fy) + bot * fy
