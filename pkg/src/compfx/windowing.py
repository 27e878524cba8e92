"""Temporal windowing for processing long clips in overlapping chunks.

Clips longer than the model's native span are cut into fixed-length
windows on a regular stride, the final window is right-aligned to the
clip end, and per-frame outputs are blended back with linear ramp weights
normalized so every frame's weights sum to one.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .clips import VideoClip, require_same_extent
from .errors import ShapeError, ValidationError
from .trimask import TriMask

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 85
DEFAULT_STRIDE = 64

_PARTITION_TOL = 1e-9


@dataclass
class WindowPlan:
    """Window extents plus per-window frame weights.

    ``windows[i]`` is a half-open (start, end) range and ``weights[i]``
    holds one weight per frame in that range. For every clip frame the
    weights across covering windows sum to 1 within 1e-9.
    """

    total_frames: int
    windows: list[tuple[int, int]]
    weights: list[np.ndarray]

    def coverage(self) -> np.ndarray:
        """Summed weight per frame; all ones for a valid plan."""
        cover = np.zeros(self.total_frames, dtype=np.float64)
        for (start, end), w in zip(self.windows, self.weights):
            cover[start:end] += w
        return cover

    def to_dict(self) -> dict:
        return {
            "total_frames": self.total_frames,
            "windows": [[start, end] for start, end in self.windows],
            "weights": [w.tolist() for w in self.weights],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _ramp_linear(length: int) -> np.ndarray:
    # Tent profile: rises 1, 2, ... toward the middle, symmetric. After
    # per-frame normalization, overlapping windows cross-fade linearly and
    # frames covered by a single window get weight 1.
    f = np.arange(length, dtype=np.float64)
    return np.minimum(f + 1.0, length - f)


def _ramp_cosine(length: int) -> np.ndarray:
    f = np.arange(length, dtype=np.float64)
    return np.sin(np.pi * (f + 0.5) / length)


_RAMPS: dict[str, Callable[[int], np.ndarray]] = {
    "linear": _ramp_linear,
    "cosine": _ramp_cosine,
}


def plan(total_frames: int, window: int = DEFAULT_WINDOW,
         stride: int = DEFAULT_STRIDE, ramp: str = "linear") -> WindowPlan:
    """Lay out overlapping windows over ``total_frames`` frames.

    Windows start at multiples of ``stride``; the final window is
    right-aligned to the clip end so no frame is dropped. A clip no longer
    than ``window`` gets a single full-length window with unit weights.
    """
    if total_frames < 1:
        raise ValidationError(f"total_frames must be positive, got {total_frames}")
    if window < 1:
        raise ValidationError(f"window must be positive, got {window}")
    if stride < 1:
        raise ValidationError(f"stride must be positive, got {stride}")
    if stride > window:
        raise ValidationError(
            f"stride ({stride}) must not exceed window ({window}); frames would be skipped")
    if ramp not in _RAMPS:
        raise ValidationError(f"unknown ramp {ramp!r}; choose from {sorted(_RAMPS)}")

    if total_frames <= window:
        return WindowPlan(total_frames, [(0, total_frames)],
                          [np.ones(total_frames, dtype=np.float64)])

    starts = [0]
    k = 1
    while k * stride + window < total_frames:
        starts.append(k * stride)
        k += 1
    final = total_frames - window
    if final > starts[-1]:
        starts.append(final)

    windows = [(start, start + window) for start in starts]
    raw = [_RAMPS[ramp](window) for _ in windows]

    cover = np.zeros(total_frames, dtype=np.float64)
    for (start, end), w in zip(windows, raw):
        cover[start:end] += w
    weights = [w / cover[start:end] for (start, end), w in zip(windows, raw)]

    result = WindowPlan(total_frames, windows, weights)
    worst = float(np.abs(result.coverage() - 1.0).max())
    if worst > _PARTITION_TOL:
        raise ValidationError(f"window weights do not partition unity (off by {worst:g})")
    return result


def blend(window_plan: WindowPlan, outputs: Sequence[VideoClip]) -> VideoClip:
    """Merge per-window outputs into one clip using the plan's weights."""
    if len(outputs) != len(window_plan.windows):
        raise ValidationError(
            f"plan has {len(window_plan.windows)} windows but got {len(outputs)} outputs")
    first = outputs[0]
    accum = np.zeros((window_plan.total_frames, first.height, first.width, 3),
                     dtype=np.float64)
    for i, ((start, end), w, out) in enumerate(
            zip(window_plan.windows, window_plan.weights, outputs)):
        if out.t != end - start:
            raise ShapeError(
                f"window {i}: output has {out.t} frames, expected {end - start}")
        require_same_extent((out.t, out.height, out.width),
                            (out.t, first.height, first.width),
                            f"window {i} output", "window 0 output")
        accum[start:end] += w[:, None, None, None] * out.frames.astype(np.float64)
    return VideoClip(np.clip(accum, 0.0, 1.0).astype(np.float32), first.fps)


def run_windowed(clip: VideoClip, mask: TriMask | None,
                 processor: Callable[[VideoClip, TriMask | None], VideoClip],
                 window_plan: WindowPlan | None = None, *,
                 window: int = DEFAULT_WINDOW, stride: int = DEFAULT_STRIDE) -> VideoClip:
    """Apply a window-sized processor across a long clip and blend the results.

    The processor receives each clip window (and the matching tri-mask
    window when one is given) and must return a clip of identical extent;
    a mismatch is reported with the offending window index. An identity
    processor reconstructs the input to within blending arithmetic.
    """
    if mask is not None and mask.t != clip.t:
        raise ShapeError(f"axis T mismatch: clip has T={clip.t}, tri-mask has T={mask.t}")
    if window_plan is None:
        window_plan = plan(clip.t, window=window, stride=stride)
    elif window_plan.total_frames != clip.t:
        raise ValidationError(
            f"plan covers {window_plan.total_frames} frames but clip has {clip.t}")

    outputs = []
    for i, (start, end) in enumerate(window_plan.windows):
        piece = clip.window(start, end)
        mask_piece = mask.window(start, end) if mask is not None else None
        out = processor(piece, mask_piece)
        if out.frames.shape != piece.frames.shape:
            raise ShapeError(
                f"window {i}: processor returned shape {out.frames.shape}, "
                f"expected {piece.frames.shape}")
        outputs.append(out)
    return blend(window_plan, outputs)
