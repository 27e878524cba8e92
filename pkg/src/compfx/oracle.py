"""Synthetic moving-subject scenes with analytically known decompositions.

Each scene renders a colored rectangle traveling over a static background
and casting a hard-edged attenuation shadow at a fixed offset. Because
the shadow is synthesized as a translucent black region of the foreground
layer, every derived quantity is exact: the ground truth equals the
re-composite of the layers bit-for-bit, the shadow darkens the background
to kappa * bg, and the true effect mask is the shadow footprint minus the
subject. That gives downstream stages a ground truth to verify against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clips import AlphaMatte, BinaryMaskVideo, VideoClip
from .compose import compose_subject_over, over
from .errors import ValidationError

BG_CHECKER = "checker"
BG_HGRADIENT = "hgradient"


@dataclass(frozen=True)
class SubjectSpec:
    """A solid rectangle on a linear trajectory."""

    size: tuple[int, int]                      # (height, width) pixels
    color: tuple[float, float, float]
    start: tuple[float, float]                 # (y, x) at frame 0
    velocity: tuple[float, float] = (0.0, 0.0)  # pixels per frame

    def position(self, frame: int) -> tuple[int, int]:
        """Integer top-left corner at a frame (rounded trajectory)."""
        return (int(round(self.start[0] + self.velocity[0] * frame)),
                int(round(self.start[1] + self.velocity[1] * frame)))


@dataclass(frozen=True)
class ShadowSpec:
    """Shadow cast by the subject: its footprint shifted by a fixed offset.

    ``attenuation`` is the kappa factor the background is multiplied by
    inside the shadow; smaller means darker.
    """

    offset: tuple[int, int]
    attenuation: float = 0.5


@dataclass(frozen=True)
class BackgroundSpec:
    """Static background: checkerboard or horizontal gradient."""

    kind: str = BG_CHECKER
    colors: tuple[tuple[float, float, float], tuple[float, float, float]] = (
        (0.44, 0.42, 0.40), (0.66, 0.64, 0.62))
    square: int = 8


@dataclass(frozen=True)
class OracleScene:
    """Full description of one synthetic scene."""

    resolution: tuple[int, int]                # (height, width)
    frames: int
    subject: SubjectSpec
    shadow: ShadowSpec
    background: BackgroundSpec = field(default_factory=BackgroundSpec)
    fps: float = 16.0
    seed: int = 0

    def __post_init__(self) -> None:
        h, w = self.resolution
        if h < 1 or w < 1:
            raise ValidationError(f"resolution must be positive, got {self.resolution}")
        if self.frames < 1:
            raise ValidationError(f"frame count must be positive, got {self.frames}")
        if not 0.0 < self.shadow.attenuation < 1.0:
            raise ValidationError(
                f"shadow attenuation must lie in (0, 1), got {self.shadow.attenuation}")
        sh, sw = self.subject.size
        if sh < 1 or sw < 1:
            raise ValidationError(f"subject size must be positive, got {self.subject.size}")
        if self.background.kind not in (BG_CHECKER, BG_HGRADIENT):
            raise ValidationError(f"unknown background kind {self.background.kind!r}")
        if self.background.kind == BG_CHECKER and self.background.square < 1:
            raise ValidationError("checker square size must be positive")
        for t in range(self.frames):
            y, x = self.subject.position(t)
            if y < 0 or x < 0 or y + sh > h or x + sw > w:
                raise ValidationError(
                    f"subject leaves the frame at t={t}: corner ({y}, {x}), "
                    f"size ({sh}, {sw}), frame ({h}, {w})")

    def to_dict(self) -> dict:
        return {
            "resolution": list(self.resolution),
            "frames": self.frames,
            "fps": self.fps,
            "seed": self.seed,
            "subject": {
                "size": list(self.subject.size),
                "color": list(self.subject.color),
                "start": list(self.subject.start),
                "velocity": list(self.subject.velocity),
            },
            "shadow": {
                "offset": list(self.shadow.offset),
                "attenuation": self.shadow.attenuation,
            },
            "background": {
                "kind": self.background.kind,
                "colors": [list(c) for c in self.background.colors],
                "square": self.background.square,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "OracleScene":
        try:
            subject = SubjectSpec(
                size=tuple(data["subject"]["size"]),
                color=tuple(data["subject"]["color"]),
                start=tuple(data["subject"]["start"]),
                velocity=tuple(data["subject"].get("velocity", (0.0, 0.0))))
            shadow = ShadowSpec(
                offset=tuple(data["shadow"]["offset"]),
                attenuation=float(data["shadow"].get("attenuation", 0.5)))
            bg_spec = data.get("background", {})
            background = BackgroundSpec(
                kind=bg_spec.get("kind", BG_CHECKER),
                colors=tuple(tuple(c) for c in bg_spec.get(
                    "colors", BackgroundSpec().colors)),
                square=int(bg_spec.get("square", 8)))
            return cls(resolution=tuple(data["resolution"]),
                       frames=int(data["frames"]),
                       subject=subject, shadow=shadow, background=background,
                       fps=float(data.get("fps", 16.0)),
                       seed=int(data.get("seed", 0)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad scene description: {exc}") from exc

    @classmethod
    def from_json_file(cls, path: str | Path) -> "OracleScene":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"scene file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class OracleBundle:
    """Scene rendered into layers plus ground-truth targets."""

    gt: VideoClip                 # background + subject + shadow
    over_clip: VideoClip          # no-effect composite: subject over background
    fg: VideoClip                 # foreground layer (subject and shadow content)
    alpha: AlphaMatte             # foreground opacity
    bg: VideoClip                 # clean background
    subject_mask: BinaryMaskVideo
    effect_truth: BinaryMaskVideo  # shadow footprint minus subject


def _background_frame(scene: OracleScene) -> np.ndarray:
    h, w = scene.resolution
    spec = scene.background
    c0 = np.asarray(spec.colors[0], dtype=np.float32)
    c1 = np.asarray(spec.colors[1], dtype=np.float32)
    if spec.kind == BG_CHECKER:
        yy, xx = np.mgrid[0:h, 0:w]
        parity = ((yy // spec.square + xx // spec.square) % 2).astype(np.float32)
        return c0 * (1.0 - parity[..., None]) + c1 * parity[..., None]
    ramp = np.linspace(0.0, 1.0, w, dtype=np.float32)[None, :, None]
    return np.broadcast_to(c0, (h, w, 3)) * (1.0 - ramp) + c1 * ramp


def _rect_mask(h: int, w: int, top: int, left: int, size: tuple[int, int]) -> np.ndarray:
    """Rectangle footprint clipped to the frame."""
    mask = np.zeros((h, w), dtype=np.uint8)
    y0, x0 = max(top, 0), max(left, 0)
    y1, x1 = min(top + size[0], h), min(left + size[1], w)
    if y0 < y1 and x0 < x1:
        mask[y0:y1, x0:x1] = 1
    return mask


def generate(scene: OracleScene) -> OracleBundle:
    """Render a scene into layers and exact ground-truth targets.

    The foreground layer holds the subject color at alpha 1 and black at
    alpha (1 - kappa) over the shadow, so compositing it over the
    background attenuates the background to kappa * bg there. The ground
    truth is produced by that exact composite, which makes the
    recomposition residual identically zero.
    """
    h, w = scene.resolution
    t_total = scene.frames
    kappa = scene.shadow.attenuation

    bg_frame = _background_frame(scene)
    bg_frames = np.broadcast_to(bg_frame, (t_total, h, w, 3)).copy()

    subject = np.zeros((t_total, h, w), dtype=np.uint8)
    shadow = np.zeros((t_total, h, w), dtype=np.uint8)
    for t in range(t_total):
        y, x = scene.subject.position(t)
        subject[t] = _rect_mask(h, w, y, x, scene.subject.size)
        shadow[t] = _rect_mask(h, w, y + scene.shadow.offset[0],
                               x + scene.shadow.offset[1], scene.subject.size)
    effect = shadow & (1 - subject)

    alpha = np.where(subject == 1, np.float32(1.0),
                     np.where(effect == 1, np.float32(1.0 - kappa), np.float32(0.0)))
    color = np.asarray(scene.subject.color, dtype=np.float32)
    fg_frames = np.where(subject[..., None] == 1, color, np.float32(0.0))

    fg = VideoClip(fg_frames, scene.fps)
    bg = VideoClip(bg_frames, scene.fps)
    matte = AlphaMatte(alpha)
    subject_mask = BinaryMaskVideo(subject)

    gt = over(fg, matte, bg)
    over_clip = compose_subject_over(fg, subject_mask, bg)
    return OracleBundle(gt=gt, over_clip=over_clip, fg=fg, alpha=matte, bg=bg,
                        subject_mask=subject_mask,
                        effect_truth=BinaryMaskVideo(effect))


def perturb(bundle: OracleBundle, noise_sigma: float = 0.0,
            salt_pepper_frac: float = 0.0, seed: int = 0) -> OracleBundle:
    """Return a bundle whose gt is corrupted by noise; other layers are shared.

    Gaussian noise is added first and clamped to [0, 1]; then
    floor(frac * T * H * W) distinct pixels are flipped to solid 0 or 1
    across all channels. Deterministic for a fixed seed; zero settings
    return gt unchanged.
    """
    if noise_sigma < 0:
        raise ValidationError(f"noise_sigma must be non-negative, got {noise_sigma}")
    if not 0.0 <= salt_pepper_frac <= 1.0:
        raise ValidationError(f"salt_pepper_frac must be in [0, 1], got {salt_pepper_frac}")
    rng = np.random.default_rng(seed)
    frames = bundle.gt.frames.copy()
    if noise_sigma > 0:
        frames += rng.normal(0.0, noise_sigma, frames.shape).astype(np.float32)
        np.clip(frames, 0.0, 1.0, out=frames)
    t_total, h, w = frames.shape[:3]
    count = int(salt_pepper_frac * t_total * h * w)
    if count > 0:
        flat = rng.choice(t_total * h * w, size=count, replace=False)
        values = rng.integers(0, 2, size=count).astype(np.float32)
        frames.reshape(-1, 3)[flat] = values[:, None]
    gt = VideoClip(frames, bundle.gt.fps)
    return OracleBundle(gt=gt, over_clip=bundle.over_clip, fg=bundle.fg,
                        alpha=bundle.alpha, bg=bundle.bg,
                        subject_mask=bundle.subject_mask,
                        effect_truth=bundle.effect_truth)


def random_scene(seed: int, resolution: tuple[int, int] = (64, 64),
                 frames: int = 24) -> OracleScene:
    """Sample a valid scene: chunky subject, clear shadow, detectable contrast.

    Checkerboard colors stay within a modest ratio of each other so a
    global threshold on the difference image separates shadow from clean
    background on both square shades.
    """
    rng = np.random.default_rng(seed)
    h, w = resolution
    for _ in range(1000):
        size = (int(rng.integers(16, 23)), int(rng.integers(16, 23)))
        offset = (int(rng.choice((-1, 1)) * rng.integers(6, 11)),
                  int(rng.choice((-1, 1)) * rng.integers(6, 11)))
        velocity = tuple(float(v) for v in rng.uniform(-0.5, 0.5, 2).round(3))
        kappa = float(rng.uniform(0.4, 0.6))
        shade = float(rng.uniform(0.0, 0.06))
        colors = ((0.40 + shade, 0.40 + shade, 0.42 + shade),
                  (0.62 + shade, 0.62 + shade, 0.64 + shade))
        color = tuple(float(c) for c in rng.uniform(0.15, 0.9, 3).round(3))
        # Start box keeping both subject and shadow inside for every frame.
        drift = (velocity[0] * (frames - 1), velocity[1] * (frames - 1))
        y_lo = max(0, -offset[0]) + max(0.0, -drift[0]) + 1
        y_hi = h - size[0] - max(0, offset[0]) - max(0.0, drift[0]) - 1
        x_lo = max(0, -offset[1]) + max(0.0, -drift[1]) + 1
        x_hi = w - size[1] - max(0, offset[1]) - max(0.0, drift[1]) - 1
        if y_hi <= y_lo or x_hi <= x_lo:
            continue
        start = (float(rng.uniform(y_lo, y_hi)), float(rng.uniform(x_lo, x_hi)))
        try:
            return OracleScene(
                resolution=resolution, frames=frames,
                subject=SubjectSpec(size=size, color=color, start=start,
                                    velocity=velocity),
                shadow=ShadowSpec(offset=offset, attenuation=kappa),
                background=BackgroundSpec(kind=BG_CHECKER, colors=colors, square=8),
                seed=seed)
        except ValidationError:
            continue
    raise ValidationError(f"could not sample a valid scene for seed {seed}")
