"""Tri-state conditioning masks for effect-aware video editing.

Each frame of a TriMask carries 8-bit values: 0 = no effect, 255 = effect,
128 = unknown. A parallel per-frame flag records whether the frame is
annotated (binary 0/255 content) or unknown (uniform 128). Unknown frames
let a model interpolate effect regions from annotated neighbors; the
gray_augment op manufactures such frames during training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clips import BinaryMaskVideo
from .errors import ShapeError, ValidationError

NO_EFFECT = 0
UNKNOWN = 128
EFFECT = 255

STATE_ANNOTATED = "annotated"
STATE_UNKNOWN = "unknown"

_ALLOWED_VALUES = frozenset((NO_EFFECT, UNKNOWN, EFFECT))


@dataclass
class TriMask:
    """Tri-state mask video: (T, H, W) uint8 plus a per-frame annotated flag.

    Construction checks shapes and dtypes only; content invariants are the
    job of ``validate`` so that violating masks can be represented and
    reported.
    """

    frames: np.ndarray
    annotated: np.ndarray

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames)
        self.annotated = np.asarray(self.annotated, dtype=bool)
        if self.frames.dtype != np.uint8:
            raise ValidationError(f"tri-mask frames must be uint8, got {self.frames.dtype}")
        if self.frames.ndim != 3:
            raise ShapeError(f"tri-mask frames must be (T, H, W), got {self.frames.shape}")
        if self.annotated.shape != (self.frames.shape[0],):
            raise ShapeError(
                f"annotated flags must be (T,) = ({self.frames.shape[0]},), "
                f"got {self.annotated.shape}")

    @property
    def t(self) -> int:
        return self.frames.shape[0]

    def frame_states(self) -> list[str]:
        return [STATE_ANNOTATED if a else STATE_UNKNOWN for a in self.annotated]

    def window(self, start: int, end: int) -> "TriMask":
        return TriMask(self.frames[start:end], self.annotated[start:end])


@dataclass(frozen=True)
class TriMaskViolation:
    """First invariant violation found in a mask."""

    frame: int
    pixel: tuple[int, int] | None
    message: str


def validate(mask: TriMask) -> TriMaskViolation | None:
    """Check tri-mask content invariants; None means the mask is valid.

    Annotated frames must contain only {0, 255}; unknown frames must be
    uniformly 128. The report points at the first offending frame and
    pixel.
    """
    for t in range(mask.t):
        frame = mask.frames[t]
        if mask.annotated[t]:
            bad = (frame != NO_EFFECT) & (frame != EFFECT)
        else:
            bad = frame != UNKNOWN
        if bad.any():
            y, x = np.argwhere(bad)[0]
            state = STATE_ANNOTATED if mask.annotated[t] else STATE_UNKNOWN
            return TriMaskViolation(
                frame=t, pixel=(int(y), int(x)),
                message=f"{state} frame {t} holds value {int(frame[y, x])} at pixel "
                        f"({int(y)}, {int(x)})")
    return None


def _require_valid(mask: TriMask) -> None:
    violation = validate(mask)
    if violation is not None:
        raise ValidationError(f"invalid tri-mask: {violation.message}")


def from_binary(mask: BinaryMaskVideo) -> TriMask:
    """Promote a binary mask video to a fully annotated tri-mask."""
    return TriMask(mask.frames * np.uint8(EFFECT),
                   np.ones(mask.frames.shape[0], dtype=bool))


def to_binary(mask: TriMask) -> BinaryMaskVideo:
    """Collapse a fully annotated tri-mask back to a binary mask video."""
    _require_valid(mask)
    if not mask.annotated.all():
        raise ValidationError("to_binary requires every frame to be annotated")
    return BinaryMaskVideo((mask.frames == EFFECT).astype(np.uint8))


def gray_augment(mask: TriMask, gray_prob: float, seed: int) -> TriMask:
    """Independently turn each annotated frame uniform-unknown with probability gray_prob.

    Already-unknown frames stay unknown, so the surviving annotated set is
    a subset of the input's. Deterministic for a fixed seed.
    """
    if not 0.0 <= gray_prob <= 1.0:
        raise ValidationError(f"gray_prob must be in [0, 1], got {gray_prob}")
    rng = np.random.default_rng(seed)
    draws = rng.random(mask.t) < gray_prob
    to_gray = mask.annotated & draws
    frames = mask.frames.copy()
    frames[to_gray] = UNKNOWN
    return TriMask(frames, mask.annotated & ~to_gray)


@dataclass
class KeyframeSet:
    """Sparse annotations: (frame_index, binary (H, W) mask) pairs.

    Indices are strictly increasing and non-negative; all masks share one
    resolution.
    """

    entries: tuple[tuple[int, np.ndarray], ...]

    def __post_init__(self) -> None:
        entries = []
        previous = -1
        shape: tuple[int, int] | None = None
        for index, frame_mask in self.entries:
            if index <= previous:
                raise ValidationError(
                    f"keyframe indices must be strictly increasing; {index} follows {previous}")
            if index < 0:
                raise ValidationError(f"keyframe index must be non-negative, got {index}")
            frame_mask = np.asarray(frame_mask)
            if frame_mask.dtype == bool:
                frame_mask = frame_mask.astype(np.uint8)
            if frame_mask.ndim != 2:
                raise ShapeError(f"keyframe masks must be (H, W), got {frame_mask.shape}")
            if shape is None:
                shape = frame_mask.shape
            elif frame_mask.shape != shape:
                raise ShapeError(
                    f"keyframe masks disagree on resolution: {frame_mask.shape} vs {shape}")
            if frame_mask.size and frame_mask.max() > 1:
                raise ValidationError("keyframe mask values must be in {0, 1}")
            entries.append((int(index), frame_mask))
            previous = index
        self.entries = tuple(entries)

    @property
    def resolution(self) -> tuple[int, int] | None:
        """Mask resolution, or None for an empty set."""
        if not self.entries:
            return None
        return self.entries[0][1].shape


def expand_keyframes(keys: KeyframeSet, total_frames: int,
                     resolution: tuple[int, int] | None = None) -> TriMask:
    """Build a tri-mask that is unknown everywhere except at the keyframes.

    Frames between keyframes stay uniform-unknown; filling them in is the
    consumer's job, not this function's. An empty set expands to an
    all-unknown mask, which requires an explicit resolution.
    """
    if total_frames < 1:
        raise ValidationError(f"total_frames must be positive, got {total_frames}")
    if keys.entries:
        last_index = keys.entries[-1][0]
        if last_index >= total_frames:
            raise ValidationError(
                f"keyframe index {last_index} out of range for {total_frames} frames")
        if resolution is not None and tuple(resolution) != keys.resolution:
            raise ValidationError(
                f"resolution {tuple(resolution)} disagrees with keyframe masks {keys.resolution}")
        h, w = keys.resolution
    else:
        if resolution is None:
            raise ValidationError("an empty keyframe set needs an explicit resolution")
        h, w = resolution
    frames = np.full((total_frames, h, w), UNKNOWN, dtype=np.uint8)
    annotated = np.zeros(total_frames, dtype=bool)
    for index, frame_mask in keys.entries:
        frames[index] = frame_mask * np.uint8(EFFECT)
        annotated[index] = True
    return TriMask(frames, annotated)


def to_keyframes(mask: TriMask) -> KeyframeSet:
    """Extract the annotated frames of a tri-mask as a keyframe set."""
    _require_valid(mask)
    entries = [(t, (mask.frames[t] == EFFECT).astype(np.uint8))
               for t in range(mask.t) if mask.annotated[t]]
    return KeyframeSet(tuple(entries))
