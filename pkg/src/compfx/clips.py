"""Array-backed carriers for video, alpha, grayscale, and mask data.

Pixel data lives in float32 [0, 1] everywhere inside the pipeline; 8-bit
quantization happens only at file boundaries (see frameio). Carriers are
plain dataclasses that validate on construction and are treated as
immutable: every operation returns a new instance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, ValidationError

logger = logging.getLogger(__name__)

# BT.601 luma weights used for every RGB -> grayscale conversion.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_AXES = ("T", "H", "W")


def bt601_luma(rgb: np.ndarray) -> np.ndarray:
    """Weighted-sum grayscale of an (..., 3) RGB array, clipped to [0, 1].

    Computed in float64 so the result matches a scalar weighted sum to
    well under 1e-7, then cast back to float32.
    """
    if rgb.shape[-1] != 3:
        raise ShapeError(f"expected a trailing RGB axis of size 3, got {rgb.shape[-1]}")
    w = np.asarray(LUMA_WEIGHTS, dtype=np.float64)
    y = rgb.astype(np.float64) @ w
    return np.clip(y, 0.0, 1.0).astype(np.float32)


def require_same_extent(a_shape: tuple[int, ...], b_shape: tuple[int, ...],
                        a_name: str, b_name: str) -> None:
    """Raise ShapeError naming the first axis on which (T, H, W) disagree."""
    for axis, (a_dim, b_dim) in enumerate(zip(a_shape[:3], b_shape[:3])):
        if a_dim != b_dim:
            raise ShapeError(
                f"axis {_AXES[axis]} mismatch: {a_name} has {_AXES[axis]}={a_dim}, "
                f"{b_name} has {_AXES[axis]}={b_dim}")


def _clamp_ingest(frames: np.ndarray, what: str) -> np.ndarray:
    """Clamp out-of-range values at ingest, warning about the overshoot."""
    lo = float(frames.min()) if frames.size else 0.0
    hi = float(frames.max()) if frames.size else 0.0
    if lo < 0.0 or hi > 1.0:
        logger.warning("%s values outside [0, 1] (min=%g, max=%g); clamping", what, lo, hi)
        frames = np.clip(frames, 0.0, 1.0)
    return frames


@dataclass
class VideoClip:
    """An RGB video: frames (T, H, W, 3) float32 in [0, 1] plus frame rate."""

    frames: np.ndarray
    fps: float = 24.0
    color_space: str = "sRGB"

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise ShapeError(f"clip frames must be (T, H, W, 3), got {self.frames.shape}")
        if self.frames.shape[0] < 1:
            raise ValidationError("clip must contain at least one frame")
        if not self.fps > 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        if self.frames.size and (self.frames.min() < 0.0 or self.frames.max() > 1.0):
            raise ValidationError(
                "clip values outside [0, 1]; use VideoClip.from_array to clamp at ingest")

    @classmethod
    def from_array(cls, frames: np.ndarray, fps: float = 24.0,
                   color_space: str = "sRGB") -> "VideoClip":
        """Ingest an arbitrary float array, clamping out-of-range values."""
        frames = _clamp_ingest(np.asarray(frames, dtype=np.float32), "clip")
        return cls(frames, fps, color_space)

    @property
    def t(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def window(self, start: int, end: int) -> "VideoClip":
        """A view of frames [start, end) as a new clip."""
        return VideoClip(self.frames[start:end], self.fps, self.color_space)


@dataclass
class AlphaMatte:
    """A per-pixel opacity video: (T, H, W) float32 in [0, 1]."""

    frames: np.ndarray

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 3:
            raise ShapeError(f"alpha frames must be (T, H, W), got {self.frames.shape}")
        if self.frames.size and (self.frames.min() < 0.0 or self.frames.max() > 1.0):
            raise ValidationError(
                "alpha values outside [0, 1]; use AlphaMatte.from_array to clamp at ingest")

    @classmethod
    def from_array(cls, frames: np.ndarray) -> "AlphaMatte":
        return cls(_clamp_ingest(np.asarray(frames, dtype=np.float32), "alpha"))

    @property
    def t(self) -> int:
        return self.frames.shape[0]


@dataclass
class GrayVideo:
    """A single-channel video: (T, H, W) float32 in [0, 1]."""

    frames: np.ndarray

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 3:
            raise ShapeError(f"gray frames must be (T, H, W), got {self.frames.shape}")
        if self.frames.size and (self.frames.min() < 0.0 or self.frames.max() > 1.0):
            raise ValidationError("gray values outside [0, 1]")


@dataclass
class BinaryMaskVideo:
    """A hard mask video: (T, H, W) uint8 with values strictly in {0, 1}."""

    frames: np.ndarray

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames)
        if frames.dtype == bool:
            frames = frames.astype(np.uint8)
        if frames.dtype != np.uint8:
            raise ValidationError(f"mask frames must be uint8 or bool, got {frames.dtype}")
        if frames.ndim != 3:
            raise ShapeError(f"mask frames must be (T, H, W), got {frames.shape}")
        if frames.size and frames.max() > 1:
            raise ValidationError("mask values must be in {0, 1}")
        self.frames = frames

    @property
    def t(self) -> int:
        return self.frames.shape[0]

    def as_bool(self) -> np.ndarray:
        return self.frames.astype(bool)
