"""Command-line interface.

Subcommands cover the full pipeline: compositing clips from layers,
deriving effect masks, staging synthetic scenes, building datasets,
evaluating generated clips, and printing window plans. Every subcommand
is deterministic for fixed inputs and seed, and byte-identical on reruns.

Exit codes: 0 success, 2 validation failure, 3 data-quality rejection,
4 embedding-provider failure. Failures also emit a one-line JSON error
record on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, dataset, frameio, oracle, windowing
from .compose import compose_subject_over, over
from .errors import (DataQualityError, PipelineError, ProviderError,
                     ValidationError)
from .maskpipe import MorphParams, derive_effect_mask
from .metrics import evaluate_pair
from .providers import MockEmbedder, SubprocessEmbedder
from .trimask import from_binary

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_DATA_QUALITY = 3
EXIT_PROVIDER = 4


class _JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        return json.dumps({"level": record.levelname.lower(),
                           "logger": record.name,
                           "message": record.getMessage()}, sort_keys=True)


def _configure_logging(log_json: bool, level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    if log_json:
        handler.setFormatter(_JsonLogFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, level.upper(), logging.INFO))


def _morph_params(args: argparse.Namespace) -> MorphParams:
    return MorphParams(erode_iters=args.erode, dilate_iters=args.dilate,
                       median_kernel=args.median)


def _add_morph_flags(parser: argparse.ArgumentParser) -> None:
    defaults = MorphParams()
    parser.add_argument("--erode", type=int, default=defaults.erode_iters,
                        metavar="N", help="erosion iterations (3x3 square)")
    parser.add_argument("--dilate", type=int, default=defaults.dilate_iters,
                        metavar="N", help="dilation iterations (3x3 square)")
    parser.add_argument("--median", type=int, default=defaults.median_kernel,
                        metavar="K", help="median filter kernel (odd)")


def cmd_compose(args: argparse.Namespace) -> int:
    """Composite foreground over background with an alpha matte or subject mask."""
    fg = frameio.read_clip(args.fg, args.fps)
    bg = frameio.read_clip(args.bg, args.fps)
    if args.alpha is not None:
        matte = frameio.read_alpha(args.alpha)
        out = over(fg, matte, bg)
    else:
        subject = frameio.read_mask(args.subject)
        out = compose_subject_over(fg, subject, bg)
    if args.dry_run:
        logger.info("dry run: inputs valid, would write %d frames to %s", out.t, args.out)
        return EXIT_OK
    frameio.write_clip(out, args.out)
    logger.info("wrote %d composited frames to %s", out.t, args.out)
    return EXIT_OK


def cmd_derive_mask(args: argparse.Namespace) -> int:
    """Derive the effect mask from gt and its no-effect composite."""
    gt = frameio.read_clip(args.gt)
    over_clip = frameio.read_clip(args.over)
    subject = frameio.read_mask(args.subject)
    params = _morph_params(args)
    mask, threshold = derive_effect_mask(gt, over_clip, subject, params,
                                         return_threshold=True)
    if args.dry_run:
        logger.info("dry run: inputs valid, would write mask to %s", args.out)
        return EXIT_OK
    out = Path(args.out)
    frameio.write_mask(mask, out / "effect")
    frameio.write_trimask(from_binary(mask), out / "trimask")
    meta = {
        "threshold": threshold,
        "threshold_mode": "global",
        "erode_iters": params.erode_iters,
        "dilate_iters": params.dilate_iters,
        "median_kernel": params.median_kernel,
    }
    (out / "mask_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote effect mask (%d frames) to %s", mask.t, out)
    return EXIT_OK


def cmd_build_dataset(args: argparse.Namespace) -> int:
    """Build a dataset (samples + manifest) from staged layer directories."""
    staged = dataset.discover_layer_samples(args.layers)
    if args.dry_run:
        logger.info("dry run: %d staged samples under %s are readable",
                    len(staged), args.layers)
        return EXIT_OK
    manifest = dataset.build_from_layers(
        args.layers, args.out, params=_morph_params(args),
        residual_tol=args.residual_tol, gray_prob=args.gray_prob, seed=args.seed)
    manifest_path = Path(args.out) / args.manifest_name
    dataset.write_manifest(manifest, manifest_path)
    stats = dataset.dataset_stats(manifest)
    logger.info("built %d samples (%s) into %s", stats.total,
                ", ".join(f"{k}={v}" for k, v in sorted(stats.counts.items())),
                manifest_path)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    """Render a synthetic scene into a staged layer sample."""
    scene = oracle.OracleScene.from_json_file(args.scene)
    bundle = oracle.generate(scene)
    if args.noise_sigma > 0 or args.salt_pepper > 0:
        bundle = oracle.perturb(bundle, args.noise_sigma, args.salt_pepper, args.seed)
    if args.dry_run:
        logger.info("dry run: scene valid (%dx%d, %d frames)",
                    scene.resolution[0], scene.resolution[1], scene.frames)
        return EXIT_OK
    out = Path(args.out)
    dataset.write_layer_sample(
        out, gt=bundle.gt, fg=bundle.fg, alpha=bundle.alpha, bg=bundle.bg,
        subject=bundle.subject_mask, effect_truth=bundle.effect_truth,
        caption=args.caption, kind=args.kind, provenance="synthetic-oracle")
    (out / "scene.json").write_text(scene.to_json() + "\n", encoding="utf-8")
    logger.info("staged oracle sample at %s", out)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Evaluate a generated clip against ground truth and the no-effect composite."""
    gt = frameio.read_clip(args.gt)
    over_clip = frameio.read_clip(args.over)
    gen = frameio.read_clip(args.gen)
    caption = args.caption
    if args.caption_file is not None:
        caption = Path(args.caption_file).read_text(encoding="utf-8").strip()
    if args.dry_run:
        logger.info("dry run: inputs valid, would evaluate %d frames",
                    min(gt.t, over_clip.t, gen.t))
        return EXIT_OK
    if args.provider == "mock":
        provider = MockEmbedder()
    else:
        provider = SubprocessEmbedder(args.provider)
    with provider:
        report = evaluate_pair(gt, over_clip, gen, provider, caption=caption,
                               metadata={"gt": str(args.gt), "over": str(args.over),
                                         "gen": str(args.gen)})
    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(report.to_json() + "\n", encoding="utf-8")
    if report.frames_evaluated and report.provider_failures == report.frames_evaluated:
        # Partial outages leave a usable report; a total one is a hard failure.
        raise ProviderError(
            f"provider failed on all {report.frames_evaluated} frames "
            f"(report kept at {report_path})")
    means = {k: (round(v, 4) if v is not None else None)
             for k, v in sorted(report.means.items())}
    logger.info("evaluated %d frames: %s", report.frames_evaluated, means)
    return EXIT_OK


def cmd_plan_windows(args: argparse.Namespace) -> int:
    """Print the overlapping-window plan for a clip length as JSON."""
    window_plan = windowing.plan(args.frames, window=args.window,
                                 stride=args.stride, ramp=args.ramp)
    sys.stdout.write(window_plan.to_json() + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compfx",
        description="Layered video compositing, effect masks, datasets, and metrics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for any randomized step (default 0)")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate inputs and write nothing")
    parser.add_argument("--log-json", action="store_true",
                        help="emit log records as JSON lines")
    parser.add_argument("--log-level", default="info",
                        choices=("debug", "info", "warning", "error"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", help="composite fg over bg")
    p.add_argument("--fg", required=True, help="foreground frame directory")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--alpha", help="alpha matte frame directory")
    group.add_argument("--subject", help="binary subject mask directory")
    p.add_argument("--bg", required=True, help="background frame directory")
    p.add_argument("--out", required=True, help="output frame directory")
    p.add_argument("--fps", type=float, default=24.0)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("derive-mask", help="derive the effect mask from gt vs composite")
    p.add_argument("--gt", required=True, help="ground-truth frame directory")
    p.add_argument("--over", required=True, help="no-effect composite directory")
    p.add_argument("--subject", required=True, help="binary subject mask directory")
    p.add_argument("--out", required=True, help="output directory")
    _add_morph_flags(p)
    p.set_defaults(func=cmd_derive_mask)

    p = sub.add_parser("build-dataset", help="build samples and manifest from layers")
    p.add_argument("--layers", required=True, help="root of staged layer samples")
    p.add_argument("--out", required=True, help="dataset output root")
    p.add_argument("--manifest-name", default="manifest.jsonl")
    p.add_argument("--residual-tol", type=float, default=dataset.DEFAULT_RESIDUAL_TOL,
                   help="mean |residual| gate for layer decompositions")
    p.add_argument("--gray-prob", type=float, default=0.0, metavar="P",
                   help="probability of replacing an annotated tri-mask frame "
                        "with uniform unknown")
    _add_morph_flags(p)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("oracle", help="render a synthetic scene into staged layers")
    p.add_argument("--scene", required=True, help="scene description JSON file")
    p.add_argument("--out", required=True, help="sample directory to stage into")
    p.add_argument("--caption", default="a rectangular subject casting a moving shadow")
    p.add_argument("--kind", default=dataset.KIND_PAIRED_SYNTHETIC,
                   choices=(dataset.KIND_PAIRED_SYNTHETIC, dataset.KIND_PAIRED_REAL))
    p.add_argument("--noise-sigma", type=float, default=0.0,
                   help="Gaussian noise sigma added to gt")
    p.add_argument("--salt-pepper", type=float, default=0.0,
                   help="fraction of gt pixels flipped to 0/1")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("evaluate", help="score a generated clip")
    p.add_argument("--gt", required=True, help="ground-truth frame directory")
    p.add_argument("--over", required=True, help="no-effect composite directory")
    p.add_argument("--gen", required=True, help="generated frame directory")
    p.add_argument("--provider", default="mock", metavar="CMD",
                   help="embedding provider command, or 'mock' for the built-in")
    p.add_argument("--caption", default=None)
    p.add_argument("--caption-file", default=None)
    p.add_argument("--report", required=True, help="output report JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plan-windows", help="print an overlapping-window plan")
    p.add_argument("frames", type=int, help="total frame count")
    p.add_argument("--window", type=int, default=windowing.DEFAULT_WINDOW)
    p.add_argument("--stride", type=int, default=windowing.DEFAULT_STRIDE)
    p.add_argument("--ramp", default="linear", choices=("linear", "cosine"))
    p.set_defaults(func=cmd_plan_windows)

    return parser


def _error_record(exc: Exception, exit_code: int) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc),
                       "exit_code": exit_code}, sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.log_json, args.log_level)
    try:
        return args.func(args)
    except DataQualityError as exc:
        print(_error_record(exc, EXIT_DATA_QUALITY), file=sys.stderr)
        return EXIT_DATA_QUALITY
    except ProviderError as exc:
        print(_error_record(exc, EXIT_PROVIDER), file=sys.stderr)
        return EXIT_PROVIDER
    except (ValidationError, PipelineError) as exc:
        print(_error_record(exc, EXIT_VALIDATION), file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(_error_record(exc, EXIT_VALIDATION), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
