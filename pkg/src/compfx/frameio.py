"""8-bit frame file I/O.

Clips and masks are stored as one PNG per frame, named frame_000001.png
onward (zero-padded, 1-based), inside a directory per asset. RGB clips
use 8-bit RGB; alpha, binary, and tri-state masks use 8-bit grayscale.
Tri-masks carry a sidecar text file with one line per frame, either
``annotated`` or ``unknown``. Quantization is round-to-nearest on the
0..255 scale and happens only here.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .clips import AlphaMatte, BinaryMaskVideo, VideoClip
from .errors import ValidationError
from .trimask import STATE_ANNOTATED, STATE_UNKNOWN, TriMask

FRAME_TEMPLATE = "frame_{:06d}.png"
FRAME_RE = re.compile(r"frame_(\d{6})\.png$")
STATE_SIDECAR = "frame_states.txt"


def quantize(values: np.ndarray) -> np.ndarray:
    """[0, 1] floats to rounded uint8 levels."""
    return np.rint(np.asarray(values, dtype=np.float64) * 255.0).astype(np.uint8)


def dequantize(levels: np.ndarray) -> np.ndarray:
    """uint8 levels back to float32 in [0, 1]."""
    return (np.asarray(levels, dtype=np.float32) / np.float32(255.0))


def _frame_paths(directory: Path) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ValidationError(f"frame directory {directory} does not exist")
    paths = sorted(p for p in directory.iterdir() if FRAME_RE.search(p.name))
    if not paths:
        raise ValidationError(f"no frame files in {directory}")
    for i, path in enumerate(paths, start=1):
        index = int(FRAME_RE.search(path.name).group(1))
        if index != i:
            raise ValidationError(
                f"frame numbering gap in {directory}: expected frame {i:06d}, found {path.name}")
    return paths


def _write_frames(arrays: np.ndarray, directory: Path, mode: str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(arrays, start=1):
        Image.fromarray(frame, mode).save(directory / FRAME_TEMPLATE.format(i))


def _read_frames(directory: Path, mode: str) -> np.ndarray:
    frames = []
    for path in _frame_paths(Path(directory)):
        with Image.open(path) as image:
            if image.mode != mode:
                raise ValidationError(
                    f"{path} has mode {image.mode}, expected {mode}")
            frames.append(np.asarray(image))
    return np.stack(frames)


def write_clip(clip: VideoClip, directory: Path) -> None:
    _write_frames(quantize(clip.frames), directory, "RGB")


def read_clip(directory: Path, fps: float = 24.0) -> VideoClip:
    return VideoClip(dequantize(_read_frames(directory, "RGB")), fps)


def write_alpha(alpha: AlphaMatte, directory: Path) -> None:
    _write_frames(quantize(alpha.frames), directory, "L")


def read_alpha(directory: Path) -> AlphaMatte:
    return AlphaMatte(dequantize(_read_frames(directory, "L")))


def write_mask(mask: BinaryMaskVideo, directory: Path) -> None:
    _write_frames(mask.frames * np.uint8(255), directory, "L")


def read_mask(directory: Path) -> BinaryMaskVideo:
    levels = _read_frames(directory, "L")
    bad = (levels != 0) & (levels != 255)
    if bad.any():
        raise ValidationError(
            f"binary mask frames in {directory} contain values other than 0/255")
    return BinaryMaskVideo((levels == 255).astype(np.uint8))


def write_trimask(mask: TriMask, directory: Path) -> None:
    directory = Path(directory)
    _write_frames(mask.frames, directory, "L")
    states = "\n".join(mask.frame_states()) + "\n"
    (directory / STATE_SIDECAR).write_text(states, encoding="utf-8")


def read_trimask(directory: Path) -> TriMask:
    directory = Path(directory)
    frames = _read_frames(directory, "L")
    sidecar = directory / STATE_SIDECAR
    if not sidecar.is_file():
        raise ValidationError(f"tri-mask sidecar {sidecar} is missing")
    lines = sidecar.read_text(encoding="utf-8").splitlines()
    if len(lines) != frames.shape[0]:
        raise ValidationError(
            f"{sidecar} lists {len(lines)} frames but {frames.shape[0]} are stored")
    annotated = np.zeros(frames.shape[0], dtype=bool)
    for i, line in enumerate(lines):
        state = line.strip()
        if state == STATE_ANNOTATED:
            annotated[i] = True
        elif state != STATE_UNKNOWN:
            raise ValidationError(
                f"{sidecar} line {i + 1}: unknown frame state {state!r}")
    return TriMask(frames, annotated)
