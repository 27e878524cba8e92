"""Effect-mask derivation: difference, grayscale, Otsu, morphology.

Given a ground-truth clip and its no-effect composite, the pixels that
changed are exactly the footprint of the removed effects. The pipeline
binarizes the difference with a single global Otsu threshold and cleans
the result with (optional) erosion and dilation followed by a median
filter, then removes anything inside the subject mask.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .clips import BinaryMaskVideo, GrayVideo, VideoClip, bt601_luma, require_same_extent
from .compose import diff_delta
from .errors import DegenerateHistogramError, ValidationError

logger = logging.getLogger(__name__)

HISTOGRAM_BINS = 256

# Fixed 3x3 square structuring element, applied per frame (no temporal extent).
_STRUCTURE = np.ones((1, 3, 3), dtype=bool)

_MAX_MORPH_ITERS = 16


@dataclass(frozen=True)
class MorphParams:
    """Cleanup parameters for the binarized difference mask.

    Erosion and dilation iterations may be zero (no-op); the median kernel
    must be odd, and a kernel of 1 is the identity. The defaults keep the
    footprint geometry intact and let the median filter remove isolated
    salt-and-pepper responses.
    """

    erode_iters: int = 0
    dilate_iters: int = 0
    median_kernel: int = 5

    def __post_init__(self) -> None:
        for name in ("erode_iters", "dilate_iters"):
            value = getattr(self, name)
            if not 0 <= value <= _MAX_MORPH_ITERS:
                raise ValidationError(f"{name} must be in [0, {_MAX_MORPH_ITERS}], got {value}")
        if self.median_kernel < 1 or self.median_kernel % 2 == 0:
            raise ValidationError(f"median_kernel must be odd and >= 1, got {self.median_kernel}")


def to_grayscale(clip: VideoClip) -> GrayVideo:
    """BT.601 luma of an RGB clip."""
    return GrayVideo(bt601_luma(clip.frames))


def quantize_gray(gray: GrayVideo) -> np.ndarray:
    """Round [0, 1] gray values onto the 256 8-bit histogram levels."""
    return np.rint(gray.frames * 255.0).astype(np.uint8)


def gray_histogram(gray: GrayVideo) -> np.ndarray:
    """Intensity histogram over the whole video (one global distribution)."""
    return np.bincount(quantize_gray(gray).ravel(), minlength=HISTOGRAM_BINS)


def otsu_from_counts(counts: np.ndarray) -> int:
    """Between-class-variance-maximizing cut of a 256-bin histogram.

    A cut at c splits levels into {i < c} and {i >= c}; the returned value
    is the first cut maximizing w0 * w1 * (mu0 - mu1)^2. Comparisons use
    exact integer arithmetic, so ties break deterministically toward the
    smallest cut regardless of count magnitudes.

    Raises DegenerateHistogramError when fewer than two levels are occupied.
    """
    counts = np.asarray(counts)
    if counts.shape != (HISTOGRAM_BINS,):
        raise ValidationError(f"expected {HISTOGRAM_BINS} histogram bins, got {counts.shape}")
    if counts.size and counts.min() < 0:
        raise ValidationError("histogram counts must be non-negative")
    if int(np.count_nonzero(counts)) < 2:
        raise DegenerateHistogramError("histogram has fewer than two occupied levels")

    h = [int(c) for c in counts]
    total = sum(h)
    total_sum = sum(i * c for i, c in enumerate(h))

    # sigma_b^2(c) = (S0*w1 - S1*w0)^2 / (w0*w1); compare as exact fractions.
    best_cut = 0
    best_num = 0  # numerator of best sigma_b^2
    best_den = 1  # denominator of best sigma_b^2
    w0 = 0
    s0 = 0
    for cut in range(HISTOGRAM_BINS):
        if cut > 0:
            w0 += h[cut - 1]
            s0 += (cut - 1) * h[cut - 1]
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        s1 = total_sum - s0
        num = (s0 * w1 - s1 * w0) ** 2
        den = w0 * w1
        if num * best_den > best_num * den:
            best_num, best_den, best_cut = num, den, cut
    return best_cut


def otsu_threshold(gray: GrayVideo) -> float:
    """Global Otsu threshold of a gray video, mapped to [0, 1].

    The cut index c means "levels >= c are foreground", so binarizing with
    the returned c/255 keeps the two classes on the intended sides.
    """
    return otsu_from_counts(gray_histogram(gray)) / 255.0


def binarize(gray: GrayVideo, threshold: float) -> BinaryMaskVideo:
    """Hard-threshold: pixel -> 1 iff its value is strictly above threshold."""
    return BinaryMaskVideo((gray.frames > threshold).astype(np.uint8))


def _check_iters(iters: int) -> None:
    if iters < 0:
        raise ValidationError(f"iterations must be non-negative, got {iters}")


def erode(mask: BinaryMaskVideo, iters: int = 1) -> BinaryMaskVideo:
    """Binary erosion with a 3x3 square, iterated per frame.

    Outside-image pixels count as 0, so mask pixels on the image border
    always erode.
    """
    _check_iters(iters)
    if iters == 0:
        return BinaryMaskVideo(mask.frames.copy())
    out = ndimage.binary_erosion(mask.as_bool(), structure=_STRUCTURE,
                                 iterations=iters, border_value=0)
    return BinaryMaskVideo(out)


def dilate(mask: BinaryMaskVideo, iters: int = 1) -> BinaryMaskVideo:
    """Binary dilation with a 3x3 square, iterated per frame (0 outside)."""
    _check_iters(iters)
    if iters == 0:
        return BinaryMaskVideo(mask.frames.copy())
    out = ndimage.binary_dilation(mask.as_bool(), structure=_STRUCTURE,
                                  iterations=iters, border_value=0)
    return BinaryMaskVideo(out)


def median_filter(mask: BinaryMaskVideo, kernel: int = 5) -> BinaryMaskVideo:
    """Majority vote in a k x k neighborhood, per frame, border replicated.

    k must be odd so the vote is never tied; k = 1 is the identity.
    """
    if kernel < 1 or kernel % 2 == 0:
        raise ValidationError(f"median kernel must be odd and >= 1, got {kernel}")
    if kernel == 1:
        return BinaryMaskVideo(mask.frames.copy())
    out = ndimage.median_filter(mask.frames, size=(1, kernel, kernel), mode="nearest")
    return BinaryMaskVideo(out)


def derive_effect_mask(gt: VideoClip, over_clip: VideoClip, subject: BinaryMaskVideo,
                       params: MorphParams | None = None, *,
                       return_threshold: bool = False):
    """Binary mask of effect pixels: where gt differs from the no-effect composite.

    Steps: absolute difference, BT.601 grayscale, global Otsu threshold,
    binarize, erode, dilate, median filter, subtract the subject mask.
    A difference with a degenerate (single-level) histogram means there is
    nothing to segment; that case warns and yields an all-zero mask.

    With ``return_threshold`` the applied threshold (or None on the
    degenerate path) is returned alongside the mask.
    """
    params = params or MorphParams()
    require_same_extent(gt.frames.shape, subject.frames.shape, "gt", "subject")
    gray = to_grayscale(diff_delta(gt, over_clip))
    threshold: float | None
    try:
        threshold = otsu_threshold(gray)
        mask = binarize(gray, threshold)
        mask = erode(mask, params.erode_iters)
        mask = dilate(mask, params.dilate_iters)
        mask = median_filter(mask, params.median_kernel)
        mask = BinaryMaskVideo(mask.frames & (1 - subject.frames))
    except DegenerateHistogramError:
        logger.warning("difference histogram is degenerate; returning an empty mask")
        threshold = None
        mask = BinaryMaskVideo(np.zeros(gt.frames.shape[:3], dtype=np.uint8))
    if return_threshold:
        return mask, threshold
    return mask
