"""Shared fixtures and helpers."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from compfx import AlphaMatte, BinaryMaskVideo, VideoClip


def random_clip(rng: np.random.Generator, t=3, h=12, w=16, fps=24.0) -> VideoClip:
    return VideoClip(rng.random((t, h, w, 3), dtype=np.float32), fps)


def random_alpha(rng: np.random.Generator, t=3, h=12, w=16) -> AlphaMatte:
    return AlphaMatte(rng.random((t, h, w), dtype=np.float32))


def random_mask(rng: np.random.Generator, t=3, h=12, w=16, p=0.5) -> BinaryMaskVideo:
    return BinaryMaskVideo((rng.random((t, h, w)) < p).astype(np.uint8))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)
