"""Distribution-matched threshold calibration and pseudo-label generation.

Box thresholds are solved per category so the kept detections per unlabeled
image match the labeled set's instance rate; one class-agnostic pixel
threshold then matches the foreground/background pixel ratio observed
inside labeled boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import EmptyDataset, NoRetainedDetections, UnknownImage
from .maskcore import BitMask, ProbMask, RleMask, binarize, rle_decode, rle_encode

# Any value above 1.0 keeps nothing, since scores never exceed 1.0.
# Serialized as 1.0 plus a degenerate flag.
KEEP_NOTHING = math.nextafter(1.0, 2.0)


def round_half_up(x: float) -> int:
    """round() with deterministic half-up ties (2.5 -> 3)."""
    return int(math.floor(x + 0.5))


def box_region(box, height, width):
    """Discrete pixel region (r0, r1, c0, c1) covered by an (x, y, w, h) box.

    Clipped to the image; returns None when the box misses it entirely.
    """
    x, y, w, h = box
    r0 = max(0, math.floor(y))
    r1 = min(height, math.ceil(y + h))
    c0 = max(0, math.floor(x))
    c1 = min(width, math.ceil(x + w))
    if r1 <= r0 or c1 <= c0:
        return None
    return r0, r1, c0, c1


@dataclass(frozen=True)
class GroundTruthInstance:
    image_id: int
    category_id: int
    box: tuple
    mask: RleMask  # full-image extent


@dataclass(frozen=True)
class AnnotationSet:
    """Ground-truth-style document: image sizes plus instances."""

    images: Mapping[int, tuple]  # id -> (height, width)
    instances: tuple
    categories: Mapping[int, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Detection:
    """One teacher prediction: box plus a box-aligned S x S probability mask."""

    image_id: int
    category_id: int
    score: float
    box: tuple  # x, y, w, h
    mask: ProbMask

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        x, y, w, h = self.box
        if w <= 0 or h <= 0:
            raise ValueError(f"box must have positive extent, got w={w}, h={h}")


@dataclass(frozen=True)
class LabeledStats:
    """Distribution summary of the labeled set used as the calibration target."""

    num_images: int
    instances_per_category: Mapping[int, int]
    fg_pixel_fraction: float

    def rate(self, category_id) -> float:
        return self.instances_per_category.get(category_id, 0) / self.num_images


@dataclass(frozen=True)
class ThresholdSet:
    """Calibrated per-category box thresholds plus the pixel threshold."""

    box_thresholds: Mapping[int, float]
    pixel_threshold: float
    provenance: Mapping

    def is_degenerate(self, category_id) -> bool:
        return self.box_thresholds.get(category_id, KEEP_NOTHING) > 1.0

    def keeps(self, det: Detection) -> bool:
        return det.score >= self.box_thresholds.get(det.category_id, KEEP_NOTHING)


@dataclass(frozen=True)
class PseudoInstance:
    category_id: int
    box: tuple
    mask: RleMask  # full-image extent


@dataclass(frozen=True)
class PseudoLabelSet:
    """Per-image pseudo instances plus the thresholds that produced them."""

    instances: Mapping[int, tuple]  # image_id -> tuple of PseudoInstance
    thresholds: ThresholdSet
    kept_per_category: Mapping[int, int]
    dropped_below_threshold: Mapping[int, int]
    dropped_empty: int


def compute_labeled_stats(annotations: AnnotationSet) -> LabeledStats:
    """Instance rates per category and the in-box foreground pixel fraction.

    Overlapping boxes are counted per box: each instance contributes its own
    mask's pixels within its own box.
    """
    if not annotations.images:
        raise EmptyDataset("annotation document contains no images")
    counts: dict = {}
    fg = 0
    total = 0
    for inst in annotations.instances:
        counts[inst.category_id] = counts.get(inst.category_id, 0) + 1
        height, width = annotations.images[inst.image_id]
        region = box_region(inst.box, height, width)
        if region is None:
            continue
        r0, r1, c0, c1 = region
        bits = rle_decode(inst.mask).bits
        fg += int(bits[r0:r1, c0:c1].sum())
        total += (r1 - r0) * (c1 - c0)
    return LabeledStats(
        num_images=len(annotations.images),
        instances_per_category=counts,
        fg_pixel_fraction=fg / total if total else 0.0,
    )


def solve_box_thresholds(preds, stats: LabeledStats, num_unlabeled_images: int):
    """Per-category score cutoffs matching the labeled instance rates.

    For category c with labeled rate r_c the target keep count is
    k_c = round(r_c * num_unlabeled_images) and the threshold is the k_c-th
    highest score. k_c = 0, or a category with no detections, degenerates to
    the keep-nothing sentinel; k_c beyond the available detections keeps all
    of them. Ties at the cutoff are all kept (the test is >=).
    """
    if num_unlabeled_images < 1:
        raise EmptyDataset("need at least one unlabeled image")
    categories = set(stats.instances_per_category) | {d.category_id for d in preds}
    scores_by_cat: dict = {c: [] for c in categories}
    for d in preds:
        scores_by_cat[d.category_id].append(d.score)
    thresholds = {}
    for c in sorted(categories):
        k = round_half_up(stats.rate(c) * num_unlabeled_images)
        scores = sorted(scores_by_cat[c], reverse=True)
        if k == 0 or not scores:
            thresholds[c] = KEEP_NOTHING
        elif k >= len(scores):
            thresholds[c] = scores[-1]
        else:
            thresholds[c] = scores[k - 1]
    return thresholds


def solve_pixel_threshold(retained, stats: LabeledStats) -> float:
    """Class-agnostic probability cutoff matching the labeled fg/bg pixel ratio.

    Pools every probability value from every retained mask (detection masks
    are box-aligned, so all their pixels count) and picks the pooled value
    whose >= fraction is closest to the labeled foreground fraction, ties
    toward the larger value. A winning value of exactly 0 or 1 is nudged
    into the open interval, where thresholds must live.
    """
    if not retained:
        raise NoRetainedDetections("no detections retained by the box thresholds")
    pool = np.sort(np.concatenate([d.mask.values.ravel() for d in retained]))
    target = stats.fg_pixel_fraction * pool.size
    values = np.unique(pool)  # ascending
    count_ge = pool.size - np.searchsorted(pool, values, side="left")
    err = np.abs(count_ge - target)
    best = err.min()
    theta = float(values[err == best].max())  # tie toward larger threshold
    if theta <= 0.0:
        theta = math.nextafter(0.0, 1.0)
    elif theta >= 1.0:
        theta = math.nextafter(1.0, 0.0)
    return theta


def calibrate(preds, stats: LabeledStats, num_unlabeled_images: int) -> ThresholdSet:
    """Solve both threshold kinds and record provenance for the report."""
    box_thresholds = solve_box_thresholds(preds, stats, num_unlabeled_images)
    retained = [d for d in preds if d.score >= box_thresholds[d.category_id]]
    theta = solve_pixel_threshold(retained, stats)
    pool_size = sum(d.mask.values.size for d in retained)
    achieved = sum(int((d.mask.values >= theta).sum()) for d in retained) / pool_size
    per_category = {}
    for c, tau in sorted(box_thresholds.items()):
        available = sum(1 for d in preds if d.category_id == c)
        kept = sum(1 for d in preds if d.category_id == c and d.score >= tau)
        per_category[c] = {
            "rate": stats.rate(c),
            "target_keep": round_half_up(stats.rate(c) * num_unlabeled_images),
            "available": available,
            "kept": kept,
            "degenerate": tau > 1.0,
        }
    provenance = {
        "num_unlabeled_images": num_unlabeled_images,
        "target_fg_fraction": stats.fg_pixel_fraction,
        "achieved_fg_fraction": achieved,
        "pool_size": pool_size,
        "per_category": per_category,
    }
    return ThresholdSet(box_thresholds, theta, provenance)


def generate_pseudo_labels(preds, thresholds: ThresholdSet, image_sizes) -> PseudoLabelSet:
    """Threshold, binarize, and paste detections into full-image pseudo masks.

    Kept masks are binarized at the pixel threshold and nearest-neighbor
    upscaled into their (clipped) box region. Masks that come out empty are
    dropped and counted.
    """
    instances: dict = {}
    kept_per_category: dict = {}
    dropped_below: dict = {}
    dropped_empty = 0
    for det in preds:
        if det.image_id not in image_sizes:
            raise UnknownImage(f"detection references unknown image id {det.image_id}")
        if not thresholds.keeps(det):
            dropped_below[det.category_id] = dropped_below.get(det.category_id, 0) + 1
            continue
        height, width = image_sizes[det.image_id]
        small = binarize(det.mask, thresholds.pixel_threshold).bits
        region = box_region(det.box, height, width)
        full = np.zeros((height, width), dtype=bool)
        if region is not None:
            r0, r1, c0, c1 = region
            full[r0:r1, c0:c1] = _nearest_upscale(small, r1 - r0, c1 - c0)
        if not full.any():
            dropped_empty += 1
            continue
        kept_per_category[det.category_id] = kept_per_category.get(det.category_id, 0) + 1
        r0, r1, c0, c1 = region
        inst = PseudoInstance(
            category_id=det.category_id,
            box=(float(c0), float(r0), float(c1 - c0), float(r1 - r0)),
            mask=rle_encode(BitMask(full)),
        )
        instances.setdefault(det.image_id, []).append(inst)
    return PseudoLabelSet(
        instances={k: tuple(v) for k, v in instances.items()},
        thresholds=thresholds,
        kept_per_category=kept_per_category,
        dropped_below_threshold=dropped_below,
        dropped_empty=dropped_empty,
    )


def _nearest_upscale(bits, out_h, out_w):
    h, w = bits.shape
    rows = np.minimum((np.arange(out_h) + 0.5) * h // out_h, h - 1).astype(np.int64)
    cols = np.minimum((np.arange(out_w) + 0.5) * w // out_w, w - 1).astype(np.int64)
    return bits[np.ix_(rows, cols)]
