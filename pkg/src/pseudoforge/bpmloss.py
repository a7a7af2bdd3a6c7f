"""Boundary-weight maps, re-weighted mask losses, and dual-resolution targets.

The weight map is the absolute discrete Laplacian of a probability map,
mean-normalized with a small floor. It dips to ~0 exactly on a soft edge's
0.5-crossing, peaks one or two pixels away, and decays with distance, so
re-weighting the per-pixel loss with it emphasizes near-boundary detail
while suppressing the noisiest pixels, those sitting right on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, EmptyBox, NonFinite
from .maskcore import BitMask, ProbMask, downsample_mask
from .calib import box_region

LOGIT_CLIP = 30.0  # keeps log(sigmoid) finite


@dataclass(frozen=True, eq=False)
class BpmMap:
    """Per-pixel loss weights: non-negative, mean 1, floored at ~epsilon.

    The floor is applied before the final mean-normalization, so the
    guaranteed lower bound on stored weights is floor / (1 + floor).
    """

    weights: np.ndarray
    floor: float = 0.05

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise DimensionMismatch("weight grid must be 2-D")
        if abs(w.mean() - 1.0) > 1e-9:
            raise ValueError(f"weights must be mean-normalized to 1, got mean {w.mean()}")
        if w.min() < self.floor / (1.0 + self.floor) - 1e-12:
            raise ValueError("weights fall below the normalized floor")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def height(self):
        return self.weights.shape[0]

    @property
    def width(self):
        return self.weights.shape[1]


@dataclass(frozen=True)
class NtmTargets:
    """Dual-resolution supervision targets; low is always the downsampled high."""

    high: BitMask
    low: BitMask

    def __post_init__(self):
        if self.low != downsample_mask(self.high, self.low.height):
            raise ValueError("low target must equal the downsampled high target")


@dataclass(frozen=True, eq=False)
class MaskLossReport:
    """Composite dual-branch loss with per-branch gradients."""

    total: float
    high_res_term: float
    low_res_term: float
    grad_high: np.ndarray
    grad_low: np.ndarray
    alpha: float


def laplacian(p):
    """Signed 5-point Laplacian with replicate padding.

    Accepts a ProbMask or any real 2-D grid (the operator is linear, so it
    is useful on raw grids too).
    """
    values = p.values if isinstance(p, ProbMask) else np.asarray(p, dtype=np.float64)
    return _kernels.laplacian5(values)


def bpm_from_prob(p: ProbMask, floor: float = 0.05) -> BpmMap:
    """Weight map |laplacian(p)|, mean-normalized to 1 with a floor.

    A constant map (no response anywhere) degenerates to uniform weights.
    The weights are constants with respect to any loss gradient; nothing
    differentiates through them.
    """
    raw = np.abs(laplacian(p))
    mean = raw.mean()
    weights = raw / mean if mean > 0 else np.ones_like(raw)
    weights = np.maximum(weights, floor)
    weights = weights / weights.mean()
    return BpmMap(weights, floor)


def _as_weights(weights, shape):
    if weights is None:
        return np.ones(shape)
    if isinstance(weights, BpmMap):
        return weights.weights
    return np.asarray(weights, dtype=np.float64)


def weighted_bce(logits, target, weights=None):
    """Mean binary cross entropy with per-pixel constant weights.

    Returns (loss, gradient-wrt-logits). Logits are clipped to +-30 inside
    the loss so log terms stay finite; the gradient is w * (sigmoid(z) - y) / N
    with the weights treated as constants.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = target.bits.astype(np.float64) if isinstance(target, BitMask) else np.asarray(
        target, dtype=np.float64
    )
    if z.shape != y.shape:
        raise DimensionMismatch(f"logit grid {z.shape} vs target grid {y.shape}")
    if not np.all(np.isfinite(z)):
        raise NonFinite("logits contain NaN or infinity")
    w = _as_weights(weights, z.shape)
    if w.shape != z.shape:
        raise DimensionMismatch(f"weight grid {w.shape} vs logit grid {z.shape}")

    zc = np.clip(z, -LOGIT_CLIP, LOGIT_CLIP)
    # -y*log(sig(z)) - (1-y)*log(1-sig(z)) == max(z,0) - z*y + log1p(exp(-|z|))
    per_pixel = np.maximum(zc, 0.0) - zc * y + np.log1p(np.exp(-np.abs(zc)))
    n = z.size
    loss = float((w * per_pixel).sum() / n)
    sig = 1.0 / (1.0 + np.exp(-zc))
    grad = w * (sig - y) / n
    return loss, grad


def make_ntm_targets(gt_full: BitMask, box, s_high: int = 28, s_low: int = 14) -> NtmTargets:
    """Crop the full-image mask to the box and build both target resolutions."""
    region = box_region(box, gt_full.height, gt_full.width)
    if region is None:
        raise EmptyBox(f"box {box} does not intersect a {gt_full.height}x{gt_full.width} image")
    r0, r1, c0, c1 = region
    crop = BitMask(gt_full.bits[r0:r1, c0:c1])
    high = downsample_mask(crop, s_high)
    low = downsample_mask(high, s_low)
    return NtmTargets(high=high, low=low)


def ntm_loss(logits_high, logits_low, targets: NtmTargets, bpm: BpmMap, alpha: float = 1.0):
    """Composite loss: boundary-weighted high branch plus uniform low branch."""
    logits_high = np.asarray(logits_high, dtype=np.float64)
    logits_low = np.asarray(logits_low, dtype=np.float64)
    if bpm.weights.shape != logits_high.shape:
        raise DimensionMismatch(
            f"weight grid {bpm.weights.shape} vs high logit grid {logits_high.shape}"
        )
    high_term, grad_high = weighted_bce(logits_high, targets.high, bpm)
    low_term, grad_low = weighted_bce(logits_low, targets.low, None)
    return MaskLossReport(
        total=high_term + alpha * low_term,
        high_res_term=high_term,
        low_res_term=low_term,
        grad_high=grad_high,
        grad_low=alpha * grad_low,  # gradient of the composite total
        alpha=alpha,
    )
