"""Synthetic masks with boundary-localized noise and the curves built from them.

Noise is injected by flipping each pixel independently with probability
q(d) = q0 * exp(-d / d0), d being its distance to the ground-truth boundary,
which concentrates label errors near boundaries. The analysis suite then
measures accuracy against distance, IoU against mask size, and the
boundary-weight profile, at desk scale and fully deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .bpmloss import bpm_from_prob
from .errors import DimensionMismatch
from .maskcore import (
    BitMask,
    ProbMask,
    boundary_iou,
    default_boundary_band,
    distance_to_boundary,
    downsample_mask,
    mask_iou,
)

# Noise draws use a stream distinct from shape generation.
NOISE_SEED_OFFSET = 1_000_000


@dataclass(frozen=True)
class SyntheticInstance:
    """One ground-truth mask, optionally paired with its simulated pseudo mask."""

    gt: BitMask
    seed: int
    shape_params: Mapping
    noisy: BitMask | None = None
    noise_params: tuple | None = None  # (q0, d0)


@dataclass(frozen=True)
class DistanceAccuracyCurve:
    """Mean pixel accuracy per normalized-distance bin."""

    bin_edges: tuple  # num_bins + 1 edges over [0, max distance]
    mean_accuracy: tuple  # NaN for empty bins
    counts: tuple

    @property
    def overall_accuracy(self):
        correct = sum(
            a * c for a, c in zip(self.mean_accuracy, self.counts) if c > 0
        )
        return correct / sum(self.counts)


@dataclass(frozen=True)
class SizeIouCurve:
    """Population-mean IoUs after downsampling both masks to each size."""

    sizes: tuple
    mask_iou: tuple
    boundary_iou: tuple


@dataclass(frozen=True)
class BpmProfile:
    """Boundary-weight behaviour: weight vs distance, accuracy vs weight rank."""

    distance_bins: tuple  # integer (rounded) pixel distances
    mean_weight: tuple
    weight_counts: tuple
    quantile_edges: tuple
    accuracy_per_quantile: tuple
    quantile_counts: tuple


def ellipse_mask(grid, cx, cy, a, b, theta=0.0) -> BitMask:
    """Filled rotated ellipse rasterized by pixel centers."""
    ii, jj = np.mgrid[0:grid, 0:grid]
    dx, dy = jj - cx, ii - cy
    u = dx * math.cos(theta) + dy * math.sin(theta)
    v = -dx * math.sin(theta) + dy * math.cos(theta)
    return BitMask((u / a) ** 2 + (v / b) ** 2 <= 1.0)


def _star_polygon_mask(grid, cx, cy, radii, angles) -> BitMask:
    ii, jj = np.mgrid[0:grid, 0:grid]
    alpha = np.arctan2(ii - cy, jj - cx)
    rho = np.hypot(jj - cx, ii - cy)
    order = np.argsort(angles)
    ang = angles[order]
    rad = radii[order]
    ang_ext = np.concatenate((ang, [ang[0] + 2 * math.pi]))
    rad_ext = np.concatenate((rad, [rad[0]]))
    r_at = np.interp(np.mod(alpha - ang[0], 2 * math.pi) + ang[0], ang_ext, rad_ext)
    return BitMask(rho <= r_at)


def gen_instances(
    n,
    grid,
    rng_seed,
    shape_family="ellipse",
    area_range=(0.1, 0.6),
    mapper=map,
):
    """Deterministic ground-truth masks, each occupying 10-60% of the grid.

    Instance i draws from its own stream seeded with rng_seed + i, so
    parallel and serial generation agree. Both area bounds are enforced on
    the rasterized mask.
    """
    if n < 1 or grid < 16:
        raise ValueError("need n >= 1 and grid >= 16")
    if shape_family not in ("ellipse", "polygon"):
        raise ValueError(f"unknown shape family {shape_family!r}")
    lo, hi = area_range
    if not (0.1 <= lo < hi <= 0.6):
        raise ValueError("area range must sit inside [0.1, 0.6]")

    def build(i):
        rng = np.random.default_rng(rng_seed + i)
        for _ in range(64):
            cx = grid * rng.uniform(0.44, 0.56)
            cy = grid * rng.uniform(0.44, 0.56)
            frac = rng.uniform(lo, hi)
            target = frac * grid * grid
            if shape_family == "ellipse":
                aspect = rng.uniform(0.7, 1.0)
                a = math.sqrt(target / (math.pi * aspect))
                b = a * aspect
                theta = rng.uniform(0.0, math.pi)
                if a + 2 > min(cx, cy, grid - 1 - cx, grid - 1 - cy):
                    continue
                mask = ellipse_mask(grid, cx, cy, a, b, theta)
                params = {
                    "family": "ellipse", "cx": cx, "cy": cy,
                    "a": a, "b": b, "theta": theta,
                }
            else:
                k = int(rng.integers(6, 12))
                angles = np.sort(rng.uniform(0.0, 2 * math.pi, k))
                rel = rng.uniform(0.55, 1.0, k)
                scale = math.sqrt(target / (math.pi * float(np.mean(rel**2))))
                radii = rel * scale
                if radii.max() + 2 > min(cx, cy, grid - 1 - cx, grid - 1 - cy):
                    continue
                mask = _star_polygon_mask(grid, cx, cy, radii, angles)
                params = {
                    "family": "polygon", "cx": cx, "cy": cy,
                    "radii": tuple(radii.tolist()), "angles": tuple(angles.tolist()),
                }
            area = mask.area / (grid * grid)
            if 0.1 <= area <= 0.6 and mask.bits.any():
                return SyntheticInstance(gt=mask, seed=rng_seed + i, shape_params=params)
        raise RuntimeError(f"shape sampling failed to converge for instance {i}")

    return list(mapper(build, range(n)))


def inject_boundary_noise(gt: BitMask, q0, d0, rng_seed) -> BitMask:
    """Flip each pixel with probability q0 * exp(-d / d0), d = distance to boundary."""
    if not (0.0 <= q0 <= 1.0):
        raise ValueError(f"q0 must lie in [0, 1], got {q0}")
    if not d0 > 0:
        raise ValueError(f"d0 must be positive, got {d0}")
    dist = distance_to_boundary(gt).values
    q = q0 * np.exp(-dist / d0)
    flips = np.random.default_rng(rng_seed).random(dist.shape) < q
    return BitMask(gt.bits ^ flips)


def apply_noise(instances, q0, d0, mapper=map):
    """Attach a noisy pseudo mask to each instance (seeded per instance)."""

    def one(inst):
        noisy = inject_boundary_noise(inst.gt, q0, d0, inst.seed + NOISE_SEED_OFFSET)
        return replace(inst, noisy=noisy, noise_params=(q0, d0))

    return list(mapper(one, instances))


def _require_noisy(inst):
    if inst.noisy is None:
        raise ValueError("instance has no noisy mask; run apply_noise first")
    if inst.noisy.bits.shape != inst.gt.bits.shape:
        raise DimensionMismatch("gt and noisy mask shapes differ")


def tight_box(mask: BitMask):
    """(r0, r1, c0, c1) bounds of the foreground, or None for an empty mask."""
    rows = np.flatnonzero(mask.bits.any(axis=1))
    cols = np.flatnonzero(mask.bits.any(axis=0))
    if rows.size == 0:
        return None
    return int(rows[0]), int(rows[-1]) + 1, int(cols[0]), int(cols[-1]) + 1


def _box_pixels(inst):
    """Per-pixel (normalized distance, correctness, weight-source slice) inside
    the GT instance's bounding box; distances normalize by the box diagonal."""
    r0, r1, c0, c1 = tight_box(inst.gt)
    diag = math.hypot(r1 - r0, c1 - c0)
    dist = distance_to_boundary(inst.gt).values[r0:r1, c0:c1]
    correct = (inst.noisy.bits == inst.gt.bits)[r0:r1, c0:c1]
    return dist / diag, dist, correct, (r0, r1, c0, c1)


def accuracy_vs_distance(instances, num_bins=10, mapper=map) -> DistanceAccuracyCurve:
    """Bucket per-pixel correctness by normalized distance to the GT boundary."""
    if not instances:
        raise ValueError("no instances to analyze")
    for inst in instances:
        _require_noisy(inst)

    per = list(mapper(_box_pixels, instances))
    xmax = max(float(nd.max()) for nd, _, _, _ in per)
    edges = np.linspace(0.0, xmax, num_bins + 1)
    counts = np.zeros(num_bins, dtype=np.int64)
    correct_sum = np.zeros(num_bins, dtype=np.int64)
    for nd, _, correct, _ in per:
        idx = np.minimum((nd.ravel() / xmax * num_bins).astype(np.int64), num_bins - 1)
        counts += np.bincount(idx, minlength=num_bins)
        correct_sum += np.bincount(idx, weights=correct.ravel(), minlength=num_bins).astype(
            np.int64
        )
    mean = np.full(num_bins, np.nan)
    nz = counts > 0
    mean[nz] = correct_sum[nz] / counts[nz]
    return DistanceAccuracyCurve(
        bin_edges=tuple(edges.tolist()),
        mean_accuracy=tuple(mean.tolist()),
        counts=tuple(int(c) for c in counts),
    )


def iou_vs_size(instances, sizes=(7, 14, 28, 56), band=None, mapper=map) -> SizeIouCurve:
    """Downsample gt and noisy masks to each size and average both IoUs.

    band is the boundary-IoU band width; None applies the 2%-of-diagonal
    convention at each size.
    """
    if not sizes:
        raise ValueError("no sizes given")
    if any(s < 4 for s in sizes):
        raise ValueError("sizes must be >= 4")
    for inst in instances:
        _require_noisy(inst)

    def one(inst):
        row = []
        for s in sizes:
            gt_s = downsample_mask(inst.gt, s)
            noisy_s = downsample_mask(inst.noisy, s)
            d = band if band is not None else default_boundary_band(s, s)
            row.append((mask_iou(gt_s, noisy_s), boundary_iou(gt_s, noisy_s, d)))
        return row

    rows = list(mapper(one, instances))
    n = len(rows)
    mask_means = tuple(sum(r[i][0] for r in rows) / n for i in range(len(sizes)))
    bnd_means = tuple(sum(r[i][1] for r in rows) / n for i in range(len(sizes)))
    return SizeIouCurve(sizes=tuple(sizes), mask_iou=mask_means, boundary_iou=bnd_means)


def box_smooth(bits, radius):
    """Normalized box filter of a binary mask (replicate padding)."""
    vals = np.asarray(bits, dtype=np.float64)
    if radius < 1:
        return vals
    k = 2 * radius + 1
    p = np.pad(vals, radius, mode="edge")
    s = np.zeros((p.shape[0] + 1, p.shape[1] + 1))
    s[1:, 1:] = p.cumsum(axis=0).cumsum(axis=1)
    h, w = vals.shape
    window = s[k : k + h, k : k + w] - s[:h, k : k + w] - s[k : k + h, :w] + s[:h, :w]
    return np.clip(window / (k * k), 0.0, 1.0)


def bpm_profile(instances, smoothing=2, floor=0.05, num_quantiles=10, mapper=map) -> BpmProfile:
    """Boundary-weight curves over a noisy population.

    Each noisy mask is softened with a radius-`smoothing` box filter to stand
    in for a network's probability output, the weight map is computed from
    it, and pixels inside the GT box feed two curves: mean weight per
    rounded distance, and mean accuracy per weight-quantile bucket.
    """
    if not instances:
        raise ValueError("no instances to analyze")
    for inst in instances:
        _require_noisy(inst)

    def one(inst):
        prob = ProbMask(box_smooth(inst.noisy.bits, smoothing))
        weights = bpm_from_prob(prob, floor).weights
        _, dist, correct, (r0, r1, c0, c1) = _box_pixels(inst)
        w = weights[r0:r1, c0:c1]
        return dist.ravel(), w.ravel(), correct.ravel()

    per = list(mapper(one, instances))
    dist = np.concatenate([p[0] for p in per])
    weight = np.concatenate([p[1] for p in per])
    correct = np.concatenate([p[2] for p in per])

    dbin = np.floor(dist + 0.5).astype(np.int64)
    nbins = int(dbin.max()) + 1
    counts = np.bincount(dbin, minlength=nbins)
    wsum = np.bincount(dbin, weights=weight, minlength=nbins)
    mean_weight = np.full(nbins, np.nan)
    nz = counts > 0
    mean_weight[nz] = wsum[nz] / counts[nz]

    qedges = np.quantile(weight, np.linspace(0.0, 1.0, num_quantiles + 1))
    qidx = np.clip(np.searchsorted(qedges[1:-1], weight, side="right"), 0, num_quantiles - 1)
    qcounts = np.bincount(qidx, minlength=num_quantiles)
    qcorrect = np.bincount(qidx, weights=correct, minlength=num_quantiles)
    qacc = np.full(num_quantiles, np.nan)
    qnz = qcounts > 0
    qacc[qnz] = qcorrect[qnz] / qcounts[qnz]

    return BpmProfile(
        distance_bins=tuple(range(nbins)),
        mean_weight=tuple(mean_weight.tolist()),
        weight_counts=tuple(int(c) for c in counts),
        quantile_edges=tuple(qedges.tolist()),
        accuracy_per_quantile=tuple(qacc.tolist()),
        quantile_counts=tuple(int(c) for c in qcounts),
    )
