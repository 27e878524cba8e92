"""Frame-level evaluation metrics and the paired-clip evaluation report.

Metrics follow the common conventions for generative video evaluation:
SSIM on BT.601 grayscale with an 11x11 Gaussian window (sigma 1.5) over
valid window positions, PSNR over RGB with a 100 dB cap for identical
frames, and CLIP-style embedding scores scaled by 100. The directional
score measures whether the generated output moved away from the no-effect
composite in the same embedding direction as the ground truth did.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .clips import VideoClip, bt601_luma, require_same_extent
from .errors import (NoGeneratedChangeError, NoReferenceChangeError, ProviderError,
                     ValidationError)
from .providers import EmbeddingProvider

logger = logging.getLogger(__name__)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 1.0

PSNR_CAP_DB = 100.0

CLIP_DIR_EPS = 1e-8

# Metric slots filled by external tools and merged into reports downstream.
EXTERNAL_METRICS = ("lpips", "fvd", "vmaf", "vbench")


def l2_normalize(vector: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Scale a vector to unit L2 norm; a (near-)zero vector is an error."""
    vector = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(vector))
    if norm <= eps:
        raise ValidationError("cannot normalize a zero embedding")
    return vector / norm


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity scaled by 100; zero-norm inputs are errors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine similarity of a zero vector is undefined")
    return 100.0 * float(np.dot(a, b)) / (na * nb)


def clip_dir(e_ref: np.ndarray, e_src: np.ndarray, e_out: np.ndarray,
             eps: float = CLIP_DIR_EPS) -> float:
    """Directional similarity (x100) of embedding changes measured from a source.

    Compares the direction from the source (no-effect) embedding to the
    reference embedding against the direction from the source to the
    output embedding. Degenerate directions raise: NoReferenceChangeError
    when the reference equals the source, NoGeneratedChangeError when the
    output does. Symmetric in reference and output, and invariant to
    positive scaling of either difference.
    """
    e_ref = np.asarray(e_ref, dtype=np.float64)
    e_src = np.asarray(e_src, dtype=np.float64)
    e_out = np.asarray(e_out, dtype=np.float64)
    d_ref = e_ref - e_src
    d_out = e_out - e_src
    n_ref = float(np.linalg.norm(d_ref))
    n_out = float(np.linalg.norm(d_out))
    if n_ref <= eps:
        raise NoReferenceChangeError(
            "reference and source embeddings coincide; direction undefined")
    if n_out <= eps:
        raise NoGeneratedChangeError(
            "output and source embeddings coincide; direction undefined")
    return 100.0 * float(np.dot(d_ref, d_out)) / (n_ref * n_out)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    window = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    return window / window.sum()


def _as_gray64(frame: np.ndarray, name: str) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim == 3 and frame.shape[-1] == 3:
        return bt601_luma(frame).astype(np.float64)
    if frame.ndim == 2:
        return frame.astype(np.float64)
    raise ValidationError(f"{name} must be (H, W) or (H, W, 3), got {frame.shape}")


def _valid_filter(image: np.ndarray, window: np.ndarray) -> np.ndarray:
    # Separable correlation; cropping the filter radius afterwards leaves
    # exactly the positions whose window fits inside the image.
    radius = window.size // 2
    out = correlate1d(image, window, axis=0, mode="constant")
    out = correlate1d(out, window, axis=1, mode="constant")
    return out[radius:-radius, radius:-radius]


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Single-scale SSIM between two frames on [0, 1] grayscale.

    RGB inputs are converted with BT.601 luma first. The score is the mean
    of the SSIM map over valid (fully interior) window positions, so
    frames must be at least the window size in both dimensions.
    """
    gray_a = _as_gray64(a, "a")
    gray_b = _as_gray64(b, "b")
    if gray_a.shape != gray_b.shape:
        raise ValidationError(f"frame shapes differ: {gray_a.shape} vs {gray_b.shape}")
    if min(gray_a.shape) < SSIM_WINDOW:
        raise ValidationError(
            f"frames must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM, "
            f"got {gray_a.shape}")

    window = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2

    mu_a = _valid_filter(gray_a, window)
    mu_b = _valid_filter(gray_b, window)
    var_a = _valid_filter(gray_a * gray_a, window) - mu_a * mu_a
    var_b = _valid_filter(gray_b * gray_b, window) - mu_b * mu_b
    cov = _valid_filter(gray_a * gray_b, window) - mu_a * mu_b

    ssim_map = (((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)))
    return float(ssim_map.mean())


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB over all channels, capped at 100 dB for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"frame shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10((SSIM_L ** 2) / mse), PSNR_CAP_DB)


def _mean(series: list) -> float | None:
    values = [v for v in series if v is not None]
    return float(np.mean(values)) if values else None


@dataclass
class MetricReport:
    """Evaluation summary for one (gt, over, generated) clip triple.

    Per-frame series all have length ``frames_evaluated``; frames whose
    provider calls failed hold None in the embedding-backed series and are
    excluded from means. ``external`` reserves slots for metrics computed
    by outside tools.
    """

    provider: str
    frames_evaluated: int
    per_frame: dict = field(default_factory=dict)
    means: dict = field(default_factory=dict)
    degenerate: dict = field(default_factory=dict)
    provider_failures: int = 0
    caption: str | None = None
    external: dict = field(default_factory=lambda: {m: None for m in EXTERNAL_METRICS})
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "provider": self.provider,
            "frames_evaluated": self.frames_evaluated,
            "caption": self.caption,
            "per_frame": self.per_frame,
            "means": self.means,
            "degenerate": self.degenerate,
            "provider_failures": self.provider_failures,
            "external": self.external,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def evaluate_pair(gt: VideoClip, over_clip: VideoClip, gen: VideoClip,
                  provider: EmbeddingProvider, caption: str | None = None,
                  metadata: dict | None = None) -> MetricReport:
    """Compute frame-level metrics for a generated clip against its targets.

    Clips of unequal length are uniformly trimmed to the shortest with a
    warning. SSIM and PSNR compare generated frames to ground truth;
    embedding metrics additionally use the no-effect composite as the
    direction source. Degenerate directional frames are counted by cause
    and excluded from the directional mean; provider failures blank all
    embedding metrics for that frame.
    """
    t = min(gt.t, over_clip.t, gen.t)
    if not gt.t == over_clip.t == gen.t:
        logger.warning("clip lengths differ (gt=%d, over=%d, gen=%d); trimming to %d",
                       gt.t, over_clip.t, gen.t, t)
    require_same_extent((t,) + gt.frames.shape[1:], (t,) + over_clip.frames.shape[1:],
                        "gt", "over")
    require_same_extent((t,) + gt.frames.shape[1:], (t,) + gen.frames.shape[1:],
                        "gt", "gen")

    series: dict[str, list] = {"ssim": [], "psnr": [], "clip_dir": [], "clip_img": []}
    degenerate = {"no_reference_change": 0, "no_generated_change": 0}
    provider_failures = 0

    text_embedding: np.ndarray | None = None
    if caption is not None and provider.supports_text:
        try:
            text_embedding = provider.embed_text(caption)
        except ProviderError as exc:
            logger.warning("caption embedding failed: %s", exc)
    if text_embedding is not None:
        series["clip_text"] = []

    for i in range(t):
        gt_frame = gt.frames[i]
        gen_frame = gen.frames[i]
        series["ssim"].append(ssim(gen_frame, gt_frame))
        series["psnr"].append(psnr(gen_frame, gt_frame))
        try:
            e_ref = provider.embed_image(gt_frame)
            e_src = provider.embed_image(over_clip.frames[i])
            e_out = provider.embed_image(gen_frame)
        except ProviderError as exc:
            logger.warning("provider failed on frame %d: %s", i, exc)
            provider_failures += 1
            series["clip_dir"].append(None)
            series["clip_img"].append(None)
            if text_embedding is not None:
                series["clip_text"].append(None)
            continue
        try:
            series["clip_dir"].append(clip_dir(e_ref, e_src, e_out))
        except NoReferenceChangeError:
            degenerate["no_reference_change"] += 1
            series["clip_dir"].append(None)
        except NoGeneratedChangeError:
            degenerate["no_generated_change"] += 1
            series["clip_dir"].append(None)
        series["clip_img"].append(cosine_sim(e_out, e_ref))
        if text_embedding is not None:
            series["clip_text"].append(cosine_sim(e_out, text_embedding))

    return MetricReport(
        provider=provider.provider_id,
        frames_evaluated=t,
        per_frame=series,
        means={name: _mean(values) for name, values in series.items()},
        degenerate=degenerate,
        provider_failures=provider_failures,
        caption=caption,
        metadata=dict(metadata or {}),
    )
