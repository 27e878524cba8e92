"""Acceptance gate: one test per top-level criterion.

Each test prints a single PASS/FAIL line with the measured values at the
stated tolerance, so the suite output doubles as the acceptance report.
Run with -s (or read test_output.txt) to see the lines.
"""

import hashlib
import json
import sys
import time

import numpy as np
import pytest

import reference
from compfx import (BinaryMaskVideo, KeyframeSet, MockEmbedder, MorphParams,
                    VideoClip, blend, clip_dir, derive_effect_mask, dilate,
                    erode, expand_keyframes, generate, gray_augment,
                    median_filter, over, perturb, plan, psnr, random_scene,
                    read_manifest, ssim, trimask_from_binary, validate_trimask,
                    write_manifest)
from compfx.cli import main as cli_main
from compfx.dataset import DatasetSample, Manifest, build_from_layers
from compfx.errors import (DataQualityError, NoGeneratedChangeError,
                           NoReferenceChangeError)
from compfx.maskpipe import otsu_from_counts
from compfx import frameio


def _report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    print(line)
    assert ok, line


def test_acceptance_compositing_algebra(rng):
    start = time.perf_counter()
    t, h, w = 4, 24, 32

    def clip():
        return VideoClip(rng.random((t, h, w, 3)).astype(np.float32))

    def alpha():
        from compfx.clips import AlphaMatte
        return AlphaMatte(rng.random((t, h, w)).astype(np.float32))

    fg, bg = clip(), clip()
    from compfx.clips import AlphaMatte
    ones = AlphaMatte(np.ones((t, h, w), dtype=np.float32))
    zeros = AlphaMatte(np.zeros((t, h, w), dtype=np.float32))
    identity_ok = (np.array_equal(over(fg, ones, bg).frames, fg.frames)
                   and np.array_equal(over(fg, zeros, bg).frames, bg.frames))

    worst_oracle = 0.0
    for _ in range(10):
        f, b, a = clip(), clip(), alpha()
        expected = reference.over_scalar(f.frames, a.frames, b.frames)
        worst_oracle = max(worst_oracle,
                           float(np.abs(over(f, a, b).frames - expected).max()))

    # Three-layer associativity: top over (mid over bottom) vs the
    # two-layer combine of (top, mid) composited over bottom.
    from compfx.compose import over_layers
    worst_assoc = 0.0
    for _ in range(10):
        top, mid, bottom = clip(), clip(), clip()
        a_top, a_mid = alpha(), alpha()
        inner = over(mid, a_mid, bottom)
        left = over(top, a_top, inner).frames
        merged_rgb, merged_a = over_layers(top, a_top, mid, a_mid)
        right = over(merged_rgb, merged_a, bottom).frames
        worst_assoc = max(worst_assoc, float(np.abs(left - right).max()))

    elapsed = time.perf_counter() - start
    ok = identity_ok and worst_oracle <= 1e-6 and worst_assoc <= 1e-5 and elapsed < 5
    _report("compositing-algebra", ok,
            f"identities exact={identity_ok}, oracle max err {worst_oracle:.2e} "
            f"(tol 1e-6), associativity max err {worst_assoc:.2e} (tol 1e-5), "
            f"{elapsed:.2f}s (< 5s)")


def test_acceptance_otsu(rng):
    start = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        counts = rng.integers(0, 1000, size=256)
        counts[int(rng.integers(0, 128))] += 1
        counts[int(rng.integers(128, 256))] += 1
        if otsu_from_counts(counts) != reference.otsu_scan(counts):
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 1
    _report("otsu-threshold", ok,
            f"{mismatches}/100 mismatches vs exhaustive scan, {elapsed:.3f}s (< 1s)")


def test_acceptance_morphology(rng):
    erode_bad = dilate_bad = median_bad = duality_bad = 0
    for _ in range(50):
        frame = (rng.random((16, 16)) < rng.uniform(0.2, 0.8)).astype(np.uint8)
        mask = BinaryMaskVideo(frame[None])
        if not np.array_equal(erode(mask, 1).frames[0],
                              reference.erode_scalar(frame)):
            erode_bad += 1
        if not np.array_equal(dilate(mask, 1).frames[0],
                              reference.dilate_scalar(frame)):
            dilate_bad += 1
        if not np.array_equal(median_filter(mask, 3).frames[0],
                              reference.median_scalar(frame, 3)):
            median_bad += 1
        bordered = frame.copy()
        bordered[0, :] = bordered[-1, :] = bordered[:, 0] = bordered[:, -1] = 0
        left = erode(BinaryMaskVideo(bordered[None]), 1).frames
        right = 1 - dilate(BinaryMaskVideo(1 - bordered[None]), 1).frames
        if not np.array_equal(left, right):
            duality_bad += 1
    ok = erode_bad == dilate_bad == median_bad == duality_bad == 0
    _report("morphology-median", ok,
            f"oracle mismatches on 50 masks: erode {erode_bad}, dilate {dilate_bad}, "
            f"median {median_bad}; duality violations {duality_bad}")


def test_acceptance_mask_derivation():
    start = time.perf_counter()
    clean, noisy, ablated = [], [], []
    strictly_above = True
    for seed in range(20):
        bundle = generate(random_scene(seed, resolution=(64, 64), frames=24))
        truth = bundle.effect_truth.frames
        mask = derive_effect_mask(bundle.gt, bundle.over_clip, bundle.subject_mask)
        clean.append(reference.iou(mask.frames, truth))
        perturbed = perturb(bundle, salt_pepper_frac=0.01, seed=seed + 1000)
        with_median = derive_effect_mask(perturbed.gt, perturbed.over_clip,
                                         perturbed.subject_mask)
        no_median = derive_effect_mask(perturbed.gt, perturbed.over_clip,
                                       perturbed.subject_mask,
                                       MorphParams(median_kernel=1))
        noisy.append(reference.iou(with_median.frames, truth))
        ablated.append(reference.iou(no_median.frames, truth))
        if noisy[-1] <= ablated[-1]:
            strictly_above = False
    elapsed = time.perf_counter() - start
    clean_mean, clean_min = float(np.mean(clean)), float(np.min(clean))
    noisy_mean, ablated_mean = float(np.mean(noisy)), float(np.mean(ablated))
    ok = (clean_mean >= 0.90 and clean_min >= 0.80 and noisy_mean >= 0.85
          and strictly_above and elapsed < 30)
    _report("mask-derivation", ok,
            f"20 scenes 64x64x24: clean IoU mean {clean_mean:.4f} (>= 0.90) "
            f"min {clean_min:.4f} (>= 0.80); 1% salt-pepper IoU mean {noisy_mean:.4f} "
            f"(>= 0.85) vs median_kernel=1 ablation {ablated_mean:.4f}, strictly "
            f"above per scene={strictly_above}; {elapsed:.1f}s (< 30s)")


def test_acceptance_trimask():
    rng = np.random.default_rng(77)
    binary = BinaryMaskVideo((rng.random((10_000, 2, 2)) < 0.5).astype(np.uint8))
    base = trimask_from_binary(binary)
    augmented = gray_augment(base, 0.5, seed=7)
    fraction = 1.0 - float(augmented.annotated.mean())
    # 3 sigma for Binomial(10000, 0.5) is 0.015 around 0.5.
    fraction_ok = 0.485 <= fraction <= 0.515

    closure_ok = (validate_trimask(base) is None
                  and validate_trimask(augmented) is None)
    pattern = np.zeros((8, 8), dtype=np.uint8)
    pattern[2:5, 3:6] = 1
    expanded = expand_keyframes(KeyframeSet(((50, pattern),)), total_frames=100)
    closure_ok = closure_ok and validate_trimask(expanded) is None
    others = np.delete(expanded.frames, 50, axis=0)
    keyframe_ok = (expanded.annotated.sum() == 1 and bool(expanded.annotated[50])
                   and np.array_equal(expanded.frames[50] == 255, pattern == 1)
                   and (others == 128).all())

    ok = fraction_ok and closure_ok and keyframe_ok
    _report("tri-mask", ok,
            f"gray fraction {fraction:.4f} in [0.485, 0.515] (3-sigma at p=0.5, "
            f"n=10000)={fraction_ok}; validate closure={closure_ok}; "
            f"single-keyframe expansion pattern={keyframe_ok}")


def test_acceptance_clip_dir(rng):
    e_src = np.array([1.0, 0.0, 0.0])
    up = np.array([0.0, 1.0, 0.0])
    side = np.array([0.0, 0.0, 1.0])
    trivial_err = max(abs(clip_dir(e_src + up, e_src, e_src + 2 * up) - 100.0),
                      abs(clip_dir(e_src + up, e_src, e_src + side) - 0.0),
                      abs(clip_dir(e_src + up, e_src, e_src - up) + 100.0))

    worst_oracle = 0.0
    for _ in range(1000):
        e_ref, e_s, e_out = rng.standard_normal((3, 16))
        expected = reference.clip_dir_scalar(e_ref, e_s, e_out)
        worst_oracle = max(worst_oracle, abs(clip_dir(e_ref, e_s, e_out) - expected))

    worst_scaling = 0.0
    for _ in range(100):
        e_s = rng.standard_normal(8)
        d_ref, d_out = rng.standard_normal((2, 8))
        base = clip_dir(e_s + d_ref, e_s, e_s + d_out)
        scaled = clip_dir(e_s + 31.0 * d_ref, e_s, e_s + 0.02 * d_out)
        worst_scaling = max(worst_scaling, abs(base - scaled))

    try:
        clip_dir(e_src, e_src, e_src + up)
        degenerate_ok = False
    except NoReferenceChangeError:
        try:
            clip_dir(e_src + up, e_src, e_src)
            degenerate_ok = False
        except NoGeneratedChangeError:
            degenerate_ok = True

    ok = (trivial_err <= 1e-9 and worst_oracle <= 1e-6
          and worst_scaling <= 1e-6 and degenerate_ok)
    _report("clip-dir", ok,
            f"trivial 100/0/-100 max err {trivial_err:.2e} (tol 1e-9); 1000 "
            f"triples max err {worst_oracle:.2e} (tol 1e-6); scaling invariance "
            f"max err {worst_scaling:.2e} (tol 1e-6); degenerate errors "
            f"raised={degenerate_ok}")


def test_acceptance_ssim_psnr(rng):
    frame = rng.random((32, 32, 3)).astype(np.float32)
    self_ssim = ssim(frame, frame)
    offset_psnr = psnr(np.zeros((16, 16, 3)), np.full((16, 16, 3), 0.1))
    worst = 0.0
    for _ in range(20):
        a = rng.random((16, 20)).astype(np.float32)
        b = np.clip(a + rng.normal(0, 0.08, a.shape), 0, 1).astype(np.float32)
        worst = max(worst, abs(ssim(a, b) - reference.ssim_direct(a, b)))
    ok = self_ssim == 1.0 and abs(offset_psnr - 20.0) <= 1e-9 and worst <= 1e-6
    _report("ssim-psnr", ok,
            f"SSIM(a,a)={self_ssim} (exact 1); uniform-0.1-offset PSNR "
            f"{offset_psnr:.12f} dB (20 within 1e-9); direct-summation SSIM "
            f"max err {worst:.2e} on 20 pairs (tol 1e-6)")


def test_acceptance_windowing(rng):
    worst_partition = 0.0
    for total in range(1, 301):
        p = plan(total)
        worst_partition = max(worst_partition,
                              float(np.abs(p.coverage() - 1.0).max()))

    frames = rng.random((149, 4, 4, 3)).astype(np.float32)
    p149 = plan(149)
    merged = blend(p149, [VideoClip(frames[s:e]) for s, e in p149.windows])
    reconstruction_err = float(np.abs(merged.frames - frames).max())

    enumeration_ok = p149.windows == [(0, 85), (64, 149)]
    w0, w1 = p149.weights
    for f in range(64, 85):
        if abs(w0[f] - (85 - f) / 22) > 1e-12 or abs(w1[f - 64] - (f - 63) / 22) > 1e-12:
            enumeration_ok = False

    ok = (worst_partition <= 1e-9 and reconstruction_err <= 1e-6 and enumeration_ok)
    _report("windowing", ok,
            f"partition-of-unity worst {worst_partition:.2e} over lengths 1..300 "
            f"(tol 1e-9); identity reconstruction err {reconstruction_err:.2e} "
            f"(tol 1e-6); 149-frame enumeration [(0,85),(64,149)] with "
            f"(85-f)/22,(f-63)/22 overlap={enumeration_ok}")


def test_acceptance_dataset(tmp_path, rng):
    start = time.perf_counter()

    # Manifest round-trips: fuzzed corpora plus the documented-mix dummy corpus.
    def paired(i, kind):
        return DatasetSample(id=f"s{i:05d}", kind=kind, gt_ref=f"samples/s{i:05d}/gt",
                             over_ref=f"samples/s{i:05d}/over",
                             trimask_ref=f"samples/s{i:05d}/trimask",
                             caption=f"caption {i}")

    def unpaired(i):
        return DatasetSample(id=f"u{i:05d}", kind="unpaired",
                             gt_ref=f"samples/u{i:05d}/gt", caption=f"caption {i}")

    roundtrip_ok = True
    for trial in range(3):
        samples = [paired(trial * 100 + i, "paired_real") if rng.random() < 0.3
                   else unpaired(trial * 100 + i) for i in range(30)]
        path = tmp_path / f"fuzz{trial}.jsonl"
        write_manifest(Manifest(samples=samples), path)
        roundtrip_ok &= read_manifest(path).samples == samples
    corpus = ([paired(i, "paired_real") for i in range(54)]
              + [paired(100 + i, "paired_synthetic") for i in range(573)]
              + [unpaired(1000 + i) for i in range(460)])
    corpus_path = tmp_path / "corpus.jsonl"
    corpus_start = time.perf_counter()
    write_manifest(Manifest(samples=corpus), corpus_path)
    roundtrip_ok &= read_manifest(corpus_path).samples == corpus
    corpus_elapsed = time.perf_counter() - corpus_start

    # Corrupted staged layers must be rejected.
    layers = tmp_path / "layers"
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(random_scene(3, frames=4).to_json())
    assert cli_main(["oracle", "--scene", str(scene_path),
                     "--out", str(layers / "broken-001")]) == 0
    bg = frameio.read_clip(layers / "broken-001" / "bg")
    frameio.write_clip(VideoClip(np.clip(bg.frames + 0.3, 0, 1)),
                       layers / "broken-001" / "bg")
    try:
        build_from_layers(layers, tmp_path / "rejected")
        rejection_ok = False
    except DataQualityError:
        rejection_ok = True

    # End-to-end CLI pipeline, twice, byte-identical for a fixed seed.
    def run(root):
        root.mkdir(parents=True, exist_ok=True)
        scene = root / "scene.json"
        scene.write_text(random_scene(5, frames=4).to_json())
        sample = root / "layers" / "acc-0001"
        assert cli_main(["--seed", "11", "oracle", "--scene", str(scene),
                         "--out", str(sample)]) == 0
        assert cli_main(["--seed", "11", "build-dataset",
                         "--layers", str(root / "layers"),
                         "--out", str(root / "dataset"),
                         "--gray-prob", "0.25"]) == 0
        built = root / "dataset" / "samples" / "acc-0001"
        assert cli_main(["derive-mask", "--gt", str(built / "gt"),
                         "--over", str(built / "over"),
                         "--subject", str(sample / "subject"),
                         "--out", str(root / "mask")]) == 0
        assert cli_main(["evaluate", "--gt", str(built / "gt"),
                         "--over", str(built / "over"),
                         "--gen", str(built / "gt"),
                         "--provider", "mock",
                         "--report", str(root / "report.json")]) == 0
        digests = {}
        for path in sorted(root.rglob("*")):
            if path.is_file():
                digests[str(path.relative_to(root))] = hashlib.sha256(
                    path.read_bytes()).hexdigest()
        return digests

    import shutil
    run_root = tmp_path / "pipeline"
    first = run(run_root)
    shutil.rmtree(run_root)
    second = run(run_root)
    identical_ok = first == second
    elapsed = time.perf_counter() - start

    ok = (roundtrip_ok and rejection_ok and identical_ok
          and corpus_elapsed < 1 and elapsed < 60)
    _report("dataset", ok,
            f"manifest round-trips lossless={roundtrip_ok} (54+573+460 corpus in "
            f"{corpus_elapsed:.3f}s < 1s); corrupted-layer rejection={rejection_ok}; "
            f"end-to-end CLI pipeline byte-identical across reruns={identical_ok}; "
            f"total {elapsed:.1f}s (< 60s)")
