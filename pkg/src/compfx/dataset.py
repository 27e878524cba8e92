"""Dataset assembly: sample construction, manifests, and loading.

A dataset directory holds a newline-delimited JSON manifest plus one
asset directory per sample:

    dataset_root/
      manifest.jsonl
      samples/<id>/gt/frame_000001.png ...
      samples/<id>/over/...            (paired only)
      samples/<id>/trimask/... + frame_states.txt (paired only)

The manifest's first line is a header object carrying the format version
and the corpus's default resolution; every following line is one sample
record with fields id, kind, gt, over, trimask, caption, provenance.
Optional fields are omitted when absent, never null.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import frameio
from .clips import AlphaMatte, BinaryMaskVideo, VideoClip, require_same_extent
from .compose import compose_subject_over, recompose_check
from .errors import DataQualityError, ManifestError, ValidationError
from .maskpipe import MorphParams, derive_effect_mask
from .trimask import UNKNOWN, TriMask, from_binary, gray_augment

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
DEFAULT_RESOLUTION = (384, 672)
DEFAULT_RESIDUAL_TOL = 0.02

KIND_PAIRED_REAL = "paired_real"
KIND_PAIRED_SYNTHETIC = "paired_synthetic"
KIND_UNPAIRED = "unpaired"
KINDS = (KIND_PAIRED_REAL, KIND_PAIRED_SYNTHETIC, KIND_UNPAIRED)

_SAMPLE_FIELDS = ("id", "kind", "gt", "over", "trimask", "caption", "provenance")


@dataclass
class DatasetSample:
    """One manifest record; refs are paths relative to the manifest directory."""

    id: str
    kind: str
    gt_ref: str
    caption: str
    over_ref: str | None = None
    trimask_ref: str | None = None
    provenance: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("sample id must be non-empty")
        if self.kind not in KINDS:
            raise ValidationError(f"sample {self.id}: unknown kind {self.kind!r}")
        if not self.gt_ref:
            raise ValidationError(f"sample {self.id}: gt ref must be non-empty")
        if not self.caption:
            raise ValidationError(f"sample {self.id}: caption must be non-empty")
        paired = self.kind != KIND_UNPAIRED
        if paired and (not self.over_ref or not self.trimask_ref):
            raise ValidationError(
                f"sample {self.id}: paired samples need over and trimask refs")
        if not paired and (self.over_ref or self.trimask_ref):
            raise ValidationError(
                f"sample {self.id}: unpaired samples must omit over and trimask refs")

    def to_record(self) -> dict:
        record = {"id": self.id, "kind": self.kind, "gt": self.gt_ref}
        if self.over_ref is not None:
            record["over"] = self.over_ref
        if self.trimask_ref is not None:
            record["trimask"] = self.trimask_ref
        record["caption"] = self.caption
        record["provenance"] = self.provenance
        return record

    @classmethod
    def from_record(cls, record: dict) -> "DatasetSample":
        unknown = set(record) - set(_SAMPLE_FIELDS)
        if unknown:
            raise ValidationError(f"unknown manifest fields {sorted(unknown)}")
        missing = {"id", "kind", "gt", "caption"} - set(record)
        if missing:
            raise ValidationError(f"manifest record missing fields {sorted(missing)}")
        return cls(id=record["id"], kind=record["kind"], gt_ref=record["gt"],
                   caption=record["caption"], over_ref=record.get("over"),
                   trimask_ref=record.get("trimask"),
                   provenance=record.get("provenance", ""))


@dataclass
class Manifest:
    """An ordered collection of samples with shared corpus metadata."""

    samples: list[DatasetSample] = field(default_factory=list)
    version: int = MANIFEST_VERSION
    default_resolution: tuple[int, int] = DEFAULT_RESOLUTION

    def __post_init__(self) -> None:
        if self.version != MANIFEST_VERSION:
            raise ManifestError(
                f"unsupported manifest version {self.version}; this build reads "
                f"version {MANIFEST_VERSION}")
        h, w = self.default_resolution
        if h < 1 or w < 1:
            raise ValidationError(f"default resolution must be positive, got {self.default_resolution}")
        seen: set[str] = set()
        for sample in self.samples:
            if sample.id in seen:
                raise ValidationError(f"duplicate sample id {sample.id!r}")
            seen.add(sample.id)

    def sample_by_id(self, sample_id: str) -> DatasetSample:
        for sample in self.samples:
            if sample.id == sample_id:
                return sample
        raise ValidationError(f"no sample with id {sample_id!r}")


def write_manifest(manifest: Manifest, path: Path) -> None:
    """Write header plus one JSON line per sample."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({"version": manifest.version,
                         "resolution": list(manifest.default_resolution)},
                        sort_keys=True)]
    lines += [json.dumps(s.to_record(), sort_keys=True) for s in manifest.samples]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: Path) -> Manifest:
    """Parse a manifest, naming the line number of anything malformed."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest {path} does not exist")
    samples: list[DatasetSample] = []
    header: dict | None = None
    with path.open(encoding="utf-8") as stream:
        for line_no, line in enumerate(stream, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}: line {line_no}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise ManifestError(f"{path}: line {line_no}: expected a JSON object")
            if header is None:
                if "version" not in record:
                    raise ManifestError(
                        f"{path}: line {line_no}: first line must be a header with a version")
                header = record
                continue
            try:
                samples.append(DatasetSample.from_record(record))
            except ValidationError as exc:
                raise ManifestError(f"{path}: line {line_no}: {exc}") from exc
    if header is None:
        raise ManifestError(f"{path} is empty")
    resolution = header.get("resolution", list(DEFAULT_RESOLUTION))
    try:
        return Manifest(samples=samples, version=int(header["version"]),
                        default_resolution=(int(resolution[0]), int(resolution[1])))
    except (ValidationError, ManifestError, TypeError, IndexError) as exc:
        if isinstance(exc, ManifestError):
            raise
        raise ManifestError(f"{path}: bad header or samples: {exc}") from exc


@dataclass(frozen=True)
class DatasetStats:
    """Corpus summary: per-kind counts, plus asset stats when scanned."""

    counts: dict
    total: int
    total_frames: int | None = None
    resolutions: dict | None = None


def dataset_stats(manifest: Manifest, root: Path | None = None) -> DatasetStats:
    """Count samples per kind; with a dataset root, also scan frame assets."""
    counts = {kind: 0 for kind in KINDS}
    for sample in manifest.samples:
        counts[sample.kind] += 1
    total_frames: int | None = None
    resolutions: dict | None = None
    if root is not None:
        root = Path(root)
        total_frames = 0
        resolutions = {}
        for sample in manifest.samples:
            gt_dir = root / sample.gt_ref
            paths = sorted(p for p in gt_dir.iterdir() if frameio.FRAME_RE.search(p.name))
            total_frames += len(paths)
            with Image.open(paths[0]) as image:
                key = (image.height, image.width)
            resolutions[key] = resolutions.get(key, 0) + 1
    return DatasetStats(counts=counts, total=len(manifest.samples),
                        total_frames=total_frames, resolutions=resolutions)


def _sample_refs(sample_id: str) -> dict:
    base = f"samples/{sample_id}"
    return {"gt": f"{base}/gt", "over": f"{base}/over", "trimask": f"{base}/trimask"}


def build_paired_sample(gt: VideoClip, fg: VideoClip, alpha: AlphaMatte,
                        bg: VideoClip, subject: BinaryMaskVideo, caption: str, *,
                        root: Path, sample_id: str,
                        kind: str = KIND_PAIRED_SYNTHETIC, provenance: str = "",
                        params: MorphParams | None = None,
                        residual_tol: float = DEFAULT_RESIDUAL_TOL,
                        gray_prob: float = 0.0, seed: int = 0) -> DatasetSample:
    """Derive conditioning assets from layers and write one paired sample.

    The layers must actually recompose the ground truth: a mean absolute
    residual above ``residual_tol`` rejects the sample with a
    DataQualityError carrying the measured residual. The no-effect
    composite and the derived effect mask (promoted to a tri-mask, with
    optional gray augmentation) are written alongside the ground truth.
    """
    if kind not in (KIND_PAIRED_REAL, KIND_PAIRED_SYNTHETIC):
        raise ValidationError(f"paired sample kind must be paired_*, got {kind!r}")
    residual = recompose_check(fg, alpha, bg, gt)
    if residual.mean_abs > residual_tol:
        raise DataQualityError(
            f"sample {sample_id}: layers do not recompose gt "
            f"(mean |residual| {residual.mean_abs:.5f} > {residual_tol}, "
            f"max {residual.max_abs:.5f})",
            mean_abs=residual.mean_abs, max_abs=residual.max_abs)

    over_clip = compose_subject_over(fg, subject, bg)
    effect = derive_effect_mask(gt, over_clip, subject, params)
    if (effect.frames & subject.frames).any():
        raise ValidationError(f"sample {sample_id}: effect mask overlaps the subject mask")
    mask = from_binary(effect)
    if gray_prob > 0.0:
        mask = gray_augment(mask, gray_prob, seed)

    refs = _sample_refs(sample_id)
    root = Path(root)
    frameio.write_clip(gt, root / refs["gt"])
    frameio.write_clip(over_clip, root / refs["over"])
    frameio.write_trimask(mask, root / refs["trimask"])
    return DatasetSample(id=sample_id, kind=kind, gt_ref=refs["gt"],
                         over_ref=refs["over"], trimask_ref=refs["trimask"],
                         caption=caption, provenance=provenance)


def build_unpaired_sample(gt: VideoClip, caption: str, *, root: Path,
                          sample_id: str, provenance: str = "") -> DatasetSample:
    """Write a caption-only sample: ground truth frames, no conditioning."""
    refs = _sample_refs(sample_id)
    frameio.write_clip(gt, Path(root) / refs["gt"])
    return DatasetSample(id=sample_id, kind=KIND_UNPAIRED, gt_ref=refs["gt"],
                         caption=caption, provenance=provenance)


@dataclass
class ConditioningBundle:
    """A sample loaded into memory, ready for a training consumer.

    Unpaired samples expose placeholder conditioning: an all-zero over
    clip and a uniform-unknown tri-mask, flagged by conditioning_present.
    """

    gt: VideoClip
    over_clip: VideoClip
    mask: TriMask
    caption: str
    conditioning_present: bool

    def __post_init__(self) -> None:
        require_same_extent(self.gt.frames.shape, self.over_clip.frames.shape,
                            "gt", "over")
        require_same_extent(self.gt.frames.shape, self.mask.frames.shape,
                            "gt", "trimask")
        if not self.conditioning_present:
            if self.over_clip.frames.any():
                raise ValidationError(
                    "unpaired bundle must carry an all-zero over clip")
            if (self.mask.frames != UNKNOWN).any() or self.mask.annotated.any():
                raise ValidationError(
                    "unpaired bundle must carry a uniform-unknown tri-mask")


def assemble(sample: DatasetSample, manifest: Manifest, root: Path) -> ConditioningBundle:
    """Load a sample's assets from a dataset root into a ConditioningBundle."""
    if not any(s.id == sample.id for s in manifest.samples):
        raise ValidationError(f"sample {sample.id!r} is not part of the manifest")
    root = Path(root)
    gt = frameio.read_clip(root / sample.gt_ref)
    if sample.kind == KIND_UNPAIRED:
        zeros = VideoClip(np.zeros_like(gt.frames), gt.fps)
        mask = TriMask(np.full(gt.frames.shape[:3], UNKNOWN, dtype=np.uint8),
                       np.zeros(gt.t, dtype=bool))
        return ConditioningBundle(gt=gt, over_clip=zeros, mask=mask,
                                  caption=sample.caption, conditioning_present=False)
    over_clip = frameio.read_clip(root / sample.over_ref)
    mask = frameio.read_trimask(root / sample.trimask_ref)
    return ConditioningBundle(gt=gt, over_clip=over_clip, mask=mask,
                              caption=sample.caption, conditioning_present=True)


# ---------------------------------------------------------------------------
# Layer-directory ingest: the on-disk staging layout consumed by the CLI.
# ---------------------------------------------------------------------------

LAYER_CAPTION = "caption.txt"
LAYER_META = "meta.json"


def write_layer_sample(directory: Path, *, gt: VideoClip, caption: str,
                       fg: VideoClip | None = None, alpha: AlphaMatte | None = None,
                       bg: VideoClip | None = None,
                       subject: BinaryMaskVideo | None = None,
                       effect_truth: BinaryMaskVideo | None = None,
                       kind: str | None = None, provenance: str = "",
                       extra_meta: dict | None = None) -> None:
    """Stage one sample's input layers under a directory.

    Paired samples carry gt, fg, alpha, bg, and subject; unpaired ones
    just gt. An effect_truth mask may ride along for verification but is
    not consumed by dataset builds.
    """
    directory = Path(directory)
    layers = {"fg": fg, "alpha": alpha, "bg": bg, "subject": subject}
    present = [name for name, layer in layers.items() if layer is not None]
    if present and len(present) != len(layers):
        raise ValidationError(
            f"paired layer staging needs fg, alpha, bg, and subject; got only {present}")
    if not caption:
        raise ValidationError("caption must be non-empty")
    directory.mkdir(parents=True, exist_ok=True)
    frameio.write_clip(gt, directory / "gt")
    if fg is not None:
        frameio.write_clip(fg, directory / "fg")
        frameio.write_alpha(alpha, directory / "alpha")
        frameio.write_clip(bg, directory / "bg")
        frameio.write_mask(subject, directory / "subject")
    if effect_truth is not None:
        frameio.write_mask(effect_truth, directory / "effect_truth")
    (directory / LAYER_CAPTION).write_text(caption + "\n", encoding="utf-8")
    meta = dict(extra_meta or {})
    if kind is not None:
        meta["kind"] = kind
    if provenance:
        meta["provenance"] = provenance
    if meta:
        (directory / LAYER_META).write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class LayerSample:
    """A staged sample discovered under a layer root."""

    id: str
    directory: Path
    paired: bool
    caption: str
    kind: str
    provenance: str


def discover_layer_samples(layers_root: Path) -> list[LayerSample]:
    """Find staged samples (directories containing gt/) under a root, sorted by id."""
    layers_root = Path(layers_root)
    if not layers_root.is_dir():
        raise ValidationError(f"layer root {layers_root} does not exist")
    found = []
    for directory in sorted(p for p in layers_root.iterdir() if p.is_dir()):
        if not (directory / "gt").is_dir():
            continue
        caption_file = directory / LAYER_CAPTION
        if not caption_file.is_file():
            raise ValidationError(f"{directory} has no {LAYER_CAPTION}")
        caption = caption_file.read_text(encoding="utf-8").strip()
        if not caption:
            raise ValidationError(f"{caption_file} is empty")
        paired = (directory / "fg").is_dir()
        meta = {}
        meta_file = directory / LAYER_META
        if meta_file.is_file():
            meta = json.loads(meta_file.read_text(encoding="utf-8"))
        default_kind = KIND_PAIRED_SYNTHETIC if paired else KIND_UNPAIRED
        found.append(LayerSample(id=directory.name, directory=directory,
                                 paired=paired, caption=caption,
                                 kind=meta.get("kind", default_kind),
                                 provenance=meta.get("provenance", "")))
    if not found:
        raise ValidationError(f"no staged samples under {layers_root}")
    return found


def build_from_layers(layers_root: Path, out_root: Path, *,
                      params: MorphParams | None = None,
                      residual_tol: float = DEFAULT_RESIDUAL_TOL,
                      gray_prob: float = 0.0, seed: int = 0,
                      default_resolution: tuple[int, int] | None = None,
                      fps: float = 24.0) -> Manifest:
    """Build every staged sample under a layer root into a dataset.

    Sample builds run in discovery (id) order so output and manifest are
    reproducible. The first data-quality rejection aborts the build.
    """
    out_root = Path(out_root)
    samples = []
    resolution = default_resolution
    for staged in discover_layer_samples(layers_root):
        gt = frameio.read_clip(staged.directory / "gt", fps)
        if resolution is None:
            resolution = (gt.height, gt.width)
        if staged.paired:
            sample = build_paired_sample(
                gt=gt,
                fg=frameio.read_clip(staged.directory / "fg", fps),
                alpha=frameio.read_alpha(staged.directory / "alpha"),
                bg=frameio.read_clip(staged.directory / "bg", fps),
                subject=frameio.read_mask(staged.directory / "subject"),
                caption=staged.caption, root=out_root, sample_id=staged.id,
                kind=staged.kind, provenance=staged.provenance, params=params,
                residual_tol=residual_tol, gray_prob=gray_prob, seed=seed)
        else:
            sample = build_unpaired_sample(gt, staged.caption, root=out_root,
                                           sample_id=staged.id,
                                           provenance=staged.provenance)
        samples.append(sample)
        logger.info("built sample %s (%s)", sample.id, sample.kind)
    return Manifest(samples=samples, default_resolution=resolution)
