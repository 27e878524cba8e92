"""compfx: layered video compositing, effect masks, datasets, and metrics.

The package covers the data side of training and evaluating generative
models that re-apply environmental effects (shadows, reflections,
splashes) to composited video: straight-alpha compositing algebra,
effect-mask derivation from ground truth vs. no-effect composites,
tri-state conditioning masks, dataset staging with a line-oriented JSON
manifest, temporal windowing for long clips, embedding-based and
pixel-based evaluation metrics, and a synthetic oracle for end-to-end
verification.
"""

from .clips import AlphaMatte, BinaryMaskVideo, GrayVideo, VideoClip
from .dataset import (ConditioningBundle, DatasetSample, DatasetStats, Manifest,
                      assemble, build_from_layers, build_paired_sample,
                      build_unpaired_sample, dataset_stats,
                      discover_layer_samples, read_manifest, write_layer_sample,
                      write_manifest)
from .errors import (DataQualityError, DegenerateHistogramError, ManifestError,
                     PipelineError, ProviderError, ShapeError, ValidationError)
from .compose import (ResidualStats, compose_subject_over, diff_delta,
                      from_premultiplied, over, over_layers, recompose_check)
from .maskpipe import (MorphParams, binarize, derive_effect_mask, dilate, erode,
                       median_filter, otsu_threshold, to_grayscale)
from .metrics import MetricReport, clip_dir, cosine_sim, evaluate_pair, psnr, ssim
from .oracle import OracleBundle, OracleScene, generate, perturb, random_scene
from .providers import EmbeddingProvider, MockEmbedder, SubprocessEmbedder
from .trimask import (EFFECT, NO_EFFECT, UNKNOWN, KeyframeSet, TriMask,
                      TriMaskViolation, expand_keyframes, gray_augment,
                      to_keyframes)
from .trimask import from_binary as trimask_from_binary
from .trimask import to_binary as trimask_to_binary
from .trimask import validate as validate_trimask
from .windowing import WindowPlan, blend, plan, run_windowed

__version__ = "0.1.0"

__all__ = [
    "AlphaMatte", "BinaryMaskVideo", "GrayVideo", "VideoClip",
    "ConditioningBundle", "DatasetSample", "DatasetStats", "Manifest",
    "assemble", "build_from_layers", "build_paired_sample",
    "build_unpaired_sample", "dataset_stats", "discover_layer_samples",
    "read_manifest", "write_layer_sample", "write_manifest",
    "DataQualityError", "DegenerateHistogramError", "ManifestError",
    "PipelineError", "ProviderError", "ShapeError", "ValidationError",
    "ResidualStats", "compose_subject_over", "diff_delta", "from_premultiplied",
    "over", "over_layers", "recompose_check",
    "MorphParams", "binarize", "derive_effect_mask", "dilate", "erode",
    "median_filter", "otsu_threshold", "to_grayscale",
    "MetricReport", "clip_dir", "cosine_sim", "evaluate_pair", "psnr", "ssim",
    "OracleBundle", "OracleScene", "generate", "perturb", "random_scene",
    "EmbeddingProvider", "MockEmbedder", "SubprocessEmbedder",
    "EFFECT", "NO_EFFECT", "UNKNOWN", "KeyframeSet", "TriMask",
    "TriMaskViolation", "expand_keyframes", "gray_augment", "to_keyframes",
    "trimask_from_binary", "trimask_to_binary", "validate_trimask",
    "WindowPlan", "blend", "plan", "run_windowed",
    "__version__",
]
