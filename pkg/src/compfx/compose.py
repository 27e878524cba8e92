"""Straight-alpha compositing algebra on video layers.

The core operation blends a foreground layer over an opaque background
with a per-pixel alpha matte:

    out = alpha * fg + (1 - alpha) * bg

Alpha is straight (non-premultiplied) throughout; premultiplied sources
are converted once at import via ``from_premultiplied``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clips import AlphaMatte, BinaryMaskVideo, VideoClip, require_same_extent
from .errors import ValidationError


def over(fg: VideoClip, alpha: AlphaMatte, bg: VideoClip) -> VideoClip:
    """Composite ``fg`` over an opaque ``bg`` using straight alpha.

    With alpha identically 1 the output is ``fg`` bit-for-bit; with alpha
    identically 0 it is ``bg``. The frame rate is taken from ``fg``.
    """
    require_same_extent(fg.frames.shape, alpha.frames.shape, "fg", "alpha")
    require_same_extent(fg.frames.shape, bg.frames.shape, "fg", "bg")
    a = alpha.frames[..., None]
    out = a * fg.frames + (1.0 - a) * bg.frames
    return VideoClip(np.clip(out, 0.0, 1.0, out=out), fg.fps, fg.color_space)


def over_layers(fg: VideoClip, fg_alpha: AlphaMatte,
                bg: VideoClip, bg_alpha: AlphaMatte) -> tuple[VideoClip, AlphaMatte]:
    """Combine two translucent layers into one with the straight-alpha over rule.

    alpha_out = a_f + a_b * (1 - a_f)
    rgb_out   = (a_f * rgb_f + a_b * rgb_b * (1 - a_f)) / alpha_out

    Pixels where alpha_out is zero get black. Stacks composited this way
    associate with ``over`` onto an opaque background.
    """
    require_same_extent(fg.frames.shape, bg.frames.shape, "fg", "bg")
    require_same_extent(fg.frames.shape, fg_alpha.frames.shape, "fg", "fg_alpha")
    require_same_extent(bg.frames.shape, bg_alpha.frames.shape, "bg", "bg_alpha")
    a_f = fg_alpha.frames[..., None]
    a_b = bg_alpha.frames[..., None]
    a_out = a_f + a_b * (1.0 - a_f)
    num = a_f * fg.frames + (a_b * (1.0 - a_f)) * bg.frames
    rgb = np.divide(num, a_out, out=np.zeros_like(num), where=a_out > 0)
    clip = VideoClip(np.clip(rgb, 0.0, 1.0), fg.fps, fg.color_space)
    return clip, AlphaMatte(np.clip(a_out[..., 0], 0.0, 1.0))


def compose_subject_over(fg: VideoClip, subject: BinaryMaskVideo,
                         bg: VideoClip) -> VideoClip:
    """Hard-select ``fg`` inside the subject mask, ``bg`` elsewhere.

    Equivalent to ``over`` with the binary mask as alpha, but computed by
    selection so both sides are copied bit-for-bit.
    """
    require_same_extent(fg.frames.shape, subject.frames.shape, "fg", "subject")
    require_same_extent(fg.frames.shape, bg.frames.shape, "fg", "bg")
    sel = subject.as_bool()[..., None]
    return VideoClip(np.where(sel, fg.frames, bg.frames), fg.fps, fg.color_space)


def diff_delta(a: VideoClip, b: VideoClip) -> VideoClip:
    """Per-pixel, per-channel absolute difference |a - b|."""
    require_same_extent(a.frames.shape, b.frames.shape, "a", "b")
    return VideoClip(np.abs(a.frames - b.frames), a.fps, a.color_space)


@dataclass(frozen=True)
class ResidualStats:
    """Reconstruction residual summary: mean and max absolute error."""

    mean_abs: float
    max_abs: float


def recompose_check(fg: VideoClip, alpha: AlphaMatte, bg: VideoClip,
                    gt: VideoClip) -> ResidualStats:
    """Residual of re-compositing decomposed layers against the original.

    Computes |over(fg, alpha, bg) - gt| and reduces over every array
    element (all frames, pixels, and channels).
    """
    require_same_extent(fg.frames.shape, gt.frames.shape, "fg", "gt")
    residual = np.abs(over(fg, alpha, bg).frames.astype(np.float64)
                      - gt.frames.astype(np.float64))
    return ResidualStats(float(residual.mean()), float(residual.max()))


def from_premultiplied(rgb: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Convert premultiplied RGB to straight RGB at import.

    Pixels with zero alpha carry no color and come back black.
    """
    rgb = np.asarray(rgb, dtype=np.float32)
    a = np.asarray(alpha, dtype=np.float32)[..., None]
    if a.size and (a.min() < 0.0 or a.max() > 1.0):
        raise ValidationError("alpha values outside [0, 1]")
    out = np.divide(rgb, a, out=np.zeros_like(rgb), where=a > 0)
    return np.clip(out, 0.0, 1.0)
