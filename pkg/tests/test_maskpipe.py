"""Mask pipeline: grayscale, Otsu, morphology, median, end-to-end derivation."""

import logging

import numpy as np
import pytest

import reference
from conftest import random_clip
from compfx import (BinaryMaskVideo, GrayVideo, MorphParams, binarize,
                    derive_effect_mask, dilate, erode, generate, median_filter,
                    otsu_threshold, perturb, random_scene, to_grayscale)
from compfx.errors import DegenerateHistogramError, ValidationError
from compfx.maskpipe import gray_histogram, otsu_from_counts


# --- grayscale ---------------------------------------------------------------

def test_grayscale_matches_scalar_oracle(rng):
    clip = random_clip(rng)
    expected = reference.luma_scalar(clip.frames)
    assert np.abs(to_grayscale(clip).frames - expected).max() <= 1e-7


def test_grayscale_extremes():
    white = random_clip(np.random.default_rng(0))
    white.frames[:] = 1.0
    black_frames = np.zeros_like(white.frames)
    assert np.all(to_grayscale(white).frames == 1.0)
    from compfx import VideoClip
    assert np.all(to_grayscale(VideoClip(black_frames)).frames == 0.0)
    green = np.zeros((1, 2, 2, 3), dtype=np.float32)
    green[..., 1] = 1.0
    assert np.abs(to_grayscale(VideoClip(green)).frames - 0.587).max() <= 1e-7


# --- Otsu --------------------------------------------------------------------

def test_otsu_two_spike_histogram():
    counts = np.zeros(256, dtype=np.int64)
    counts[50] = 1000
    counts[200] = 1000
    cut = otsu_from_counts(counts)
    assert 50 < cut <= 200
    # Binarizing at the returned threshold separates the populations exactly.
    gray = GrayVideo(np.array([[[50 / 255, 200 / 255]]], dtype=np.float32))
    mask = binarize(gray, cut / 255.0)
    assert mask.frames.tolist() == [[[0, 1]]]


def test_otsu_matches_exhaustive_scan(rng):
    for _ in range(100):
        counts = rng.integers(0, 1000, size=256)
        # Keep a couple of levels occupied so the histogram is non-degenerate.
        counts[int(rng.integers(0, 128))] += 1
        counts[int(rng.integers(128, 256))] += 1
        assert otsu_from_counts(counts) == reference.otsu_scan(counts)


def test_otsu_scale_invariant(rng):
    counts = rng.integers(0, 50, size=256)
    counts[3] += 5
    counts[200] += 5
    assert otsu_from_counts(counts) == otsu_from_counts(counts * 17)


def test_otsu_degenerate_histogram():
    counts = np.zeros(256, dtype=np.int64)
    counts[77] = 4096
    with pytest.raises(DegenerateHistogramError):
        otsu_from_counts(counts)
    constant = GrayVideo(np.full((2, 8, 8), 0.5, dtype=np.float32))
    with pytest.raises(DegenerateHistogramError):
        otsu_threshold(constant)


def test_gray_histogram_is_global(rng):
    gray = GrayVideo(rng.random((3, 8, 8)).astype(np.float32))
    counts = gray_histogram(gray)
    assert counts.sum() == gray.frames.size


# --- binarize ----------------------------------------------------------------

def test_binarize_strictly_above(rng):
    gray = GrayVideo(rng.random((2, 6, 6)).astype(np.float32))
    threshold = 0.5
    mask = binarize(gray, threshold)
    expected = (gray.frames > threshold).astype(np.uint8)
    assert np.array_equal(mask.frames, expected)
    at_threshold = GrayVideo(np.full((1, 2, 2), 0.5, dtype=np.float32))
    assert not binarize(at_threshold, 0.5).frames.any()


def test_binarize_extreme_thresholds(rng):
    positive = GrayVideo((rng.random((2, 5, 5)) * 0.9 + 0.05).astype(np.float32))
    assert binarize(positive, 0.0).frames.all()
    assert not binarize(positive, 1.0).frames.any()


# --- morphology --------------------------------------------------------------

def _random_masks(rng, n=50, size=16):
    for _ in range(n):
        yield (rng.random((size, size)) < rng.uniform(0.2, 0.8)).astype(np.uint8)


def test_erode_matches_neighborhood_min_oracle(rng):
    for frame in _random_masks(rng):
        got = erode(BinaryMaskVideo(frame[None]), 1).frames[0]
        assert np.array_equal(got, reference.erode_scalar(frame))


def test_dilate_matches_neighborhood_max_oracle(rng):
    for frame in _random_masks(rng):
        got = dilate(BinaryMaskVideo(frame[None]), 1).frames[0]
        assert np.array_equal(got, reference.dilate_scalar(frame))


def test_median_matches_majority_oracle(rng):
    for frame in _random_masks(rng):
        for kernel in (3, 5):
            got = median_filter(BinaryMaskVideo(frame[None]), kernel).frames[0]
            assert np.array_equal(got, reference.median_scalar(frame, kernel))


def test_erode_all_ones_clears_border():
    mask = BinaryMaskVideo(np.ones((1, 8, 8), dtype=np.uint8))
    out = erode(mask, 1).frames[0]
    assert out[1:-1, 1:-1].all()
    assert not out[0].any() and not out[-1].any()
    assert not out[:, 0].any() and not out[:, -1].any()


def test_dilate_single_pixel_grows_box():
    frame = np.zeros((1, 9, 9), dtype=np.uint8)
    frame[0, 4, 4] = 1
    out = dilate(BinaryMaskVideo(frame), 1).frames[0]
    expected = np.zeros((9, 9), dtype=np.uint8)
    expected[3:6, 3:6] = 1
    assert np.array_equal(out, expected)


def test_erosion_dilation_duality(rng):
    # erode(m) == ~dilate(~m) holds exactly once the mask has an empty
    # border ring (the shared 0-outside convention meets at the border).
    for frame in _random_masks(rng, n=20):
        frame[0, :] = frame[-1, :] = frame[:, 0] = frame[:, -1] = 0
        mask = BinaryMaskVideo(frame[None])
        complement = BinaryMaskVideo(1 - frame[None])
        left = erode(mask, 1).frames
        right = 1 - dilate(complement, 1).frames
        assert np.array_equal(left, right)


def test_erosion_anti_extensive_dilation_extensive(rng):
    for frame in _random_masks(rng, n=10):
        mask = BinaryMaskVideo(frame[None])
        eroded = erode(mask, 2).frames
        dilated = dilate(mask, 2).frames
        assert not (eroded & ~mask.frames).any()   # erode(m) subset of m
        assert not (mask.frames & ~dilated).any()  # m subset of dilate(m)


def test_zero_iterations_are_identity(rng):
    frame = (rng.random((2, 8, 8)) < 0.5).astype(np.uint8)
    mask = BinaryMaskVideo(frame)
    assert np.array_equal(erode(mask, 0).frames, frame)
    assert np.array_equal(dilate(mask, 0).frames, frame)
    assert np.array_equal(median_filter(mask, 1).frames, frame)


def test_median_removes_isolated_pixel():
    frame = np.zeros((1, 7, 7), dtype=np.uint8)
    frame[0, 3, 3] = 1
    assert not median_filter(BinaryMaskVideo(frame), 3).frames.any()


def test_median_iteration_settles_and_slow_masks_are_logged(rng, caplog):
    # Repeated majority smoothing is a symmetric threshold update, so every
    # trajectory must fall into a cycle of period 1 or 2.  Dense uniform noise
    # routinely needs more than three passes to get there; such masks are not
    # failures but are logged as counterexamples to the three-pass heuristic.
    logged = 0
    with caplog.at_level(logging.WARNING, logger=__name__):
        for trial in range(20):
            frame = (rng.random((16, 16)) < 0.5).astype(np.uint8)
            mask = BinaryMaskVideo(frame[None])
            history = [mask.frames.tobytes()]
            period = entry = None
            for step in range(1, 65):
                mask = median_filter(mask, 3)
                key = mask.frames.tobytes()
                if key in history:
                    entry = history.index(key)
                    period = step - entry
                    break
                history.append(key)
            assert period in (1, 2), f"trial {trial}: no short cycle within 64 steps"
            if not (period == 1 and entry <= 3):
                logged += 1
                logging.getLogger(__name__).warning(
                    "median counterexample: trial %d settled after %d passes "
                    "with period %d: %s",
                    trial, entry, period, np.packbits(frame).tobytes().hex(),
                )
    counterexample_records = [r for r in caplog.records if "median counterexample" in r.message]
    assert len(counterexample_records) == logged


def test_median_rejects_even_kernel(rng):
    mask = BinaryMaskVideo(np.zeros((1, 4, 4), dtype=np.uint8))
    with pytest.raises(ValidationError):
        median_filter(mask, 4)
    with pytest.raises(ValidationError):
        MorphParams(median_kernel=2)


def test_morph_params_bounds():
    with pytest.raises(ValidationError):
        MorphParams(erode_iters=-1)
    with pytest.raises(ValidationError):
        MorphParams(dilate_iters=99)


# --- end-to-end derivation ---------------------------------------------------

def test_derive_mask_on_oracle_scene():
    bundle = generate(random_scene(7))
    mask = derive_effect_mask(bundle.gt, bundle.over_clip, bundle.subject_mask)
    assert reference.iou(mask.frames, bundle.effect_truth.frames) >= 0.9


def test_derive_mask_never_overlaps_subject():
    for seed in range(5):
        bundle = generate(random_scene(seed))
        mask = derive_effect_mask(bundle.gt, bundle.over_clip, bundle.subject_mask)
        assert not (mask.frames & bundle.subject_mask.frames).any()


def test_derive_mask_identical_inputs_empty():
    bundle = generate(random_scene(11))
    mask = derive_effect_mask(bundle.over_clip, bundle.over_clip,
                              bundle.subject_mask)
    assert not mask.frames.any()


def test_derive_mask_noise_robustness_and_median_ablation():
    bundle = generate(random_scene(13))
    noisy = perturb(bundle, salt_pepper_frac=0.01, seed=99)
    with_median = derive_effect_mask(noisy.gt, noisy.over_clip, noisy.subject_mask)
    no_median = derive_effect_mask(noisy.gt, noisy.over_clip, noisy.subject_mask,
                                   MorphParams(median_kernel=1))
    iou_with = reference.iou(with_median.frames, bundle.effect_truth.frames)
    iou_without = reference.iou(no_median.frames, bundle.effect_truth.frames)
    assert iou_with >= 0.85
    assert iou_with > iou_without


def test_derive_mask_reports_threshold():
    bundle = generate(random_scene(3))
    mask, threshold = derive_effect_mask(bundle.gt, bundle.over_clip,
                                         bundle.subject_mask, return_threshold=True)
    assert mask.frames.any()
    assert 0.0 < threshold < 1.0
    empty, none = derive_effect_mask(bundle.over_clip, bundle.over_clip,
                                     bundle.subject_mask, return_threshold=True)
    assert none is None and not empty.frames.any()
