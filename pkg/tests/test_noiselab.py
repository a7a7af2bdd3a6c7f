import math

import numpy as np
import pytest

from pseudoforge.bpmloss import bpm_from_prob
from pseudoforge.maskcore import BitMask, ProbMask, distance_to_boundary
from pseudoforge.noiselab import (
    SyntheticInstance,
    accuracy_vs_distance,
    apply_noise,
    box_smooth,
    bpm_profile,
    ellipse_mask,
    gen_instances,
    inject_boundary_noise,
    iou_vs_size,
    tight_box,
)


class TestGenInstances:
    def test_determinism(self):
        a = gen_instances(20, 64, rng_seed=5)
        b = gen_instances(20, 64, rng_seed=5)
        for x, y in zip(a, b):
            assert x.gt == y.gt
            assert x.shape_params == y.shape_params

    def test_population_sanity(self):
        insts = gen_instances(100, 64, rng_seed=1)
        assert len(insts) == 100
        for inst in insts:
            area = inst.gt.area / (64 * 64)
            assert 0.1 <= area <= 0.6
            # non-empty boundary
            distance_to_boundary(inst.gt)

    def test_polygon_family(self):
        insts = gen_instances(30, 64, rng_seed=2, shape_family="polygon")
        for inst in insts:
            assert inst.shape_params["family"] == "polygon"
            assert 0.1 <= inst.gt.area / 4096 <= 0.6

    def test_circle_area_close_to_analytic(self):
        for r in (6.0, 10.0, 14.0, 20.0):
            mask = ellipse_mask(64, 31.7, 32.3, r, r)
            assert abs(mask.area - math.pi * r * r) <= 2 * r

    def test_parallel_mapper_agrees_with_serial(self):
        from concurrent.futures import ThreadPoolExecutor

        serial = gen_instances(16, 64, rng_seed=9)
        with ThreadPoolExecutor(4) as pool:
            parallel = gen_instances(16, 64, rng_seed=9, mapper=pool.map)
        for x, y in zip(serial, parallel):
            assert x.gt == y.gt


class TestInjectNoise:
    def test_zero_noise_is_identity(self):
        gt = gen_instances(1, 64, rng_seed=3)[0].gt
        assert inject_boundary_noise(gt, 0.0, 1.5, rng_seed=1) == gt

    def test_full_noise_flips_everything(self):
        gt = gen_instances(1, 64, rng_seed=4)[0].gt
        noisy = inject_boundary_noise(gt, 1.0, np.inf, rng_seed=1)
        assert noisy == BitMask(~gt.bits)

    def test_determinism(self):
        gt = gen_instances(1, 64, rng_seed=6)[0].gt
        a = inject_boundary_noise(gt, 0.4, 2.0, rng_seed=11)
        b = inject_boundary_noise(gt, 0.4, 2.0, rng_seed=11)
        assert a == b

    def test_flip_rates_match_model_within_3_sigma(self):
        q0, d0 = 0.3, 2.0
        insts = apply_noise(gen_instances(300, 64, rng_seed=7), q0, d0)
        for lo, hi in ((0.0, 1.0), (1.0, 2.0)):
            flips, probs = [], []
            for inst in insts:
                d = distance_to_boundary(inst.gt).values
                sel = (d >= lo) & (d < hi)
                flips.append((inst.noisy.bits != inst.gt.bits)[sel])
                probs.append(q0 * np.exp(-d[sel] / d0))
            flips = np.concatenate(flips)
            probs = np.concatenate(probs)
            n = flips.size
            assert n >= 10_000
            expected = probs.mean()
            sigma = math.sqrt(float((probs * (1 - probs)).mean()) / n)
            assert abs(flips.mean() - expected) <= 3 * sigma


class TestAccuracyVsDistance:
    def test_noiseless_population_is_perfect(self):
        insts = apply_noise(gen_instances(20, 64, rng_seed=8), 0.0, 1.5)
        curve = accuracy_vs_distance(insts)
        for acc, count in zip(curve.mean_accuracy, curve.counts):
            if count:
                assert acc == 1.0
        assert curve.overall_accuracy == 1.0

    def test_model_prediction_in_nearest_bin(self):
        q0, d0 = 0.5, 2.0
        insts = apply_noise(gen_instances(200, 64, rng_seed=12), q0, d0)
        curve = accuracy_vs_distance(insts, num_bins=10)
        # expected accuracy in the nearest bin from the flip model itself
        lo, hi = curve.bin_edges[0], curve.bin_edges[1]
        probs = []
        for inst in insts:
            r0, r1, c0, c1 = tight_box(inst.gt)
            diag = math.hypot(r1 - r0, c1 - c0)
            d = distance_to_boundary(inst.gt).values[r0:r1, c0:c1]
            nd = d / diag
            sel = nd < hi if hi < curve.bin_edges[-1] else nd <= hi
            probs.append(q0 * np.exp(-d[sel] / d0))
        probs = np.concatenate(probs)
        expected = 1.0 - probs.mean()
        assert curve.mean_accuracy[0] == pytest.approx(expected, abs=0.01)

    def test_monotone_beyond_first_bin(self):
        insts = apply_noise(gen_instances(200, 64, rng_seed=0), 0.45, 1.5)
        curve = accuracy_vs_distance(insts, num_bins=10)
        vals = [a for a, c in zip(curve.mean_accuracy[1:], curve.counts[1:]) if c > 0]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_counts_cover_all_box_pixels(self):
        insts = apply_noise(gen_instances(10, 64, rng_seed=14), 0.3, 1.5)
        curve = accuracy_vs_distance(insts)
        total = sum(
            (r1 - r0) * (c1 - c0)
            for r0, r1, c0, c1 in (tight_box(i.gt) for i in insts)
        )
        assert sum(curve.counts) == total


class TestIouVsSize:
    def test_noiseless_is_perfect_everywhere(self):
        insts = apply_noise(gen_instances(10, 64, rng_seed=15), 0.0, 1.5)
        curve = iou_vs_size(insts, sizes=(7, 14, 28, 56))
        assert all(v == 1.0 for v in curve.mask_iou)
        assert all(v == 1.0 for v in curve.boundary_iou)

    def test_boundary_iou_improves_as_size_decreases(self):
        insts = apply_noise(gen_instances(200, 64, rng_seed=0), 0.45, 1.5)
        curve = iou_vs_size(insts, sizes=(14, 28, 56))
        b = dict(zip(curve.sizes, curve.boundary_iou))
        assert b[14] > b[28] + 0.01
        assert b[28] > b[56] + 0.01
        m = dict(zip(curve.sizes, curve.mask_iou))
        assert m[14] >= m[56] - 0.01


def half_plane_instance(grid=32, edge=16):
    bits = np.zeros((grid, grid), dtype=bool)
    bits[:, edge:] = True
    gt = BitMask(bits)
    return SyntheticInstance(gt=gt, seed=0, shape_params={}, noisy=gt, noise_params=(0.0, 1.0))


class TestBpmProfile:
    def test_sharp_edge_peak_and_decay(self):
        prof = bpm_profile([half_plane_instance()], smoothing=2)
        weights = np.array(prof.mean_weight)
        peak = int(np.nanargmax(weights))
        assert 1 <= peak <= 2
        assert weights[0] < weights[peak]  # dip exactly on the boundary
        far = weights[7:]
        assert np.nanmax(far) < 0.25 * weights[peak]

    def test_constant_probability_gives_flat_unit_weights(self):
        smooth = box_smooth(np.ones((16, 16), dtype=bool), 2)
        bpm = bpm_from_prob(ProbMask(smooth))
        np.testing.assert_array_equal(bpm.weights, np.ones((16, 16)))

    def test_noisy_population_keeps_the_dip(self):
        insts = apply_noise(gen_instances(50, 64, rng_seed=0), 0.45, 1.5)
        prof = bpm_profile(insts, smoothing=2)
        weights = np.array(prof.mean_weight)
        peak = int(np.nanargmax(weights))
        assert weights[0] < weights[peak]

    def test_quantile_curve_partitions_pixels(self):
        insts = apply_noise(gen_instances(20, 64, rng_seed=21), 0.45, 1.5)
        prof = bpm_profile(insts)
        assert sum(prof.quantile_counts) == sum(prof.weight_counts)
        assert len(prof.accuracy_per_quantile) == 10


class TestBoxSmooth:
    def test_constant_preserved(self):
        np.testing.assert_allclose(box_smooth(np.ones((5, 5)), 2), 1.0)

    def test_radius_zero_is_identity(self):
        rng = np.random.default_rng(2)
        bits = rng.random((6, 6)) < 0.5
        np.testing.assert_array_equal(box_smooth(bits, 0), bits.astype(float))

    def test_interior_window_mean(self):
        bits = np.zeros((7, 7), dtype=bool)
        bits[3, 3] = True
        sm = box_smooth(bits, 1)
        assert sm[3, 3] == pytest.approx(1 / 9)
        assert sm[0, 0] == 0.0
