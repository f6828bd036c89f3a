"""Command-line front end.

Subcommands:

    synth      render synthetic scene directories with ground truth
    disparity  stereo pair -> raw + refined disparity maps
    depth      disparity map -> metric depth map
    localize   stereo pair + instance masks -> per-instance 3D estimates
    eval       prediction vs ground-truth manifests -> metrics report

Exit codes: 0 success, 2 unreadable/malformed input file or config,
3 dimension or calibration mismatch, 4 malformed mask manifest,
5 frame-id mismatch between evaluation manifests.

All artifacts are written atomically (temp file + rename) and every
command is deterministic for fixed inputs, config, and seeds, regardless
of the --jobs setting.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import io as bio
from .config import PipelineConfig, load_config
from .core import (
    ConfigError,
    FormatError,
    ParamError,
    PipelineError,
    ShapeError,
    StereoFrame,
    disparity_map_to_depth_map,
    valid_disparity_mask,
)
from .fusion import localize_branches
from .manifest import load_manifest
from .metrics import EvalPair, build_report, report_to_csv
from .preprocess import preprocess_image, to_grayscale
from .render import colorize_depth, colorize_disparity, depth_overlay
from .sgbm import run_sgbm
from .synthgen import load_scene_spec, range_protocol, save_scene
from .wls import confidence_from_lr, wls_refine

EXIT_OK = 0
EXIT_UNREADABLE = 2
EXIT_MISMATCH = 3
EXIT_BAD_MANIFEST = 4
EXIT_FRAME_MISMATCH = 5


class _ManifestError(Exception):
    """Wraps FormatError raised while reading a mask manifest (exit 4)."""


class _FrameIdMismatch(Exception):
    """Prediction and ground-truth manifests cover different frames (exit 5)."""


def _apply_jobs(jobs: int | None) -> None:
    if not jobs:
        return
    import numba

    numba.set_num_threads(max(1, min(jobs, numba.config.NUMBA_NUM_THREADS)))


def _load_pipeline_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()

    sgbm_overrides = {
        "min_disparity": args.min_disparity,
        "num_disparities": args.num_disparities,
        "block_size": args.block_size,
        "p1": args.p1,
        "p2": args.p2,
        "uniqueness_ratio": args.uniqueness,
        "speckle_window": args.speckle_window,
        "speckle_range": args.speckle_range,
        "cost_scale": args.cost_scale,
        "num_paths": args.paths,
        "lr_check": args.lr_check,
        "lr_max_diff": args.lr_max_diff,
    }
    sgbm_overrides = {k: v for k, v in sgbm_overrides.items() if v is not None}
    wls_overrides = {
        "lam": args.wls_lambda,
        "sigma_color": args.wls_sigma_color,
        "iterations": args.wls_iterations,
    }
    wls_overrides = {k: v for k, v in wls_overrides.items() if v is not None}
    replacements = {}
    if sgbm_overrides:
        replacements["sgbm"] = dataclasses.replace(cfg.sgbm, **sgbm_overrides)
    if wls_overrides:
        replacements["wls"] = dataclasses.replace(cfg.wls, **wls_overrides)
    if args.wls_enabled is not None:
        replacements["wls_enabled"] = args.wls_enabled
    if getattr(args, "min_valid_ratio", None) is not None:
        replacements["min_valid_ratio"] = args.min_valid_ratio
    return dataclasses.replace(cfg, **replacements) if replacements else cfg


def _load_frame(left_path: str, right_path: str, calib_path: str) -> StereoFrame:
    left = bio.read_image(left_path)
    right = bio.read_image(right_path)
    calib = bio.load_calibration(calib_path)
    return StereoFrame(left=left, right=right, calibration=calib)


def _compute_disparities(frame: StereoFrame, cfg: PipelineConfig):
    """preprocess -> sgbm -> (optional) wls; returns (guide, raw, refined).

    Matching runs on fully preprocessed views. The refinement guide is the
    unprocessed grayscale left image: equalization can collapse the
    intensity gap between adjacent surfaces and denoising turns boundaries
    into ramps, either of which erases the edges the smoothness weights
    must respect.
    """
    matched_left = preprocess_image(frame.left, cfg.preprocess)
    matched_right = preprocess_image(frame.right, cfg.preprocess)
    guide = to_grayscale(frame.left)
    pframe = StereoFrame(left=matched_left, right=matched_right, calibration=frame.calibration)
    result = run_sgbm(pframe, cfg.sgbm)
    raw = result.disparity
    if not cfg.wls_enabled:
        return guide, raw, raw
    if result.right_raw is not None:
        conf = confidence_from_lr(raw, result.right_raw, cfg.sgbm.lr_max_diff)
    else:
        conf = valid_disparity_mask(raw).astype(np.float32)
    refined = wls_refine(raw, guide, conf, cfg.wls)
    return guide, raw, refined


def _cmd_synth(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    if args.scene:
        specs = [load_scene_spec(args.scene)]
        names = [out.name]
        out = out.parent
    else:
        calib = bio.load_calibration(args.calib)
        depths = [float(tok) for tok in args.range.split(",") if tok]
        kwargs = {}
        if args.seed is not None:
            kwargs["base_seed"] = args.seed
        if args.noise is not None:
            kwargs["noise_sigma"] = args.noise
        specs = range_protocol(calib, depths, **kwargs)
        names = [f"{out.name}_{d:g}m" for d in depths]
        out = out.parent
    for spec, name in zip(specs, names):
        scene_dir = save_scene(out / name, spec)
        print(f"wrote scene {scene_dir}")
    return EXIT_OK


def _cmd_disparity(args, cfg: PipelineConfig) -> int:
    frame = _load_frame(args.left, args.right, args.calib)
    _, raw, refined = _compute_disparities(frame, cfg)
    out = Path(args.out)
    vmax = float(cfg.sgbm.min_disparity + cfg.sgbm.num_disparities)
    bio.save_disparity(out / "raw.pfm", raw)
    bio.save_disparity(out / "refined.pfm", refined)
    bio.write_image(out / "raw.png", colorize_disparity(raw, vmax=vmax))
    bio.write_image(out / "refined.png", colorize_disparity(refined, vmax=vmax))
    print(f"wrote disparity artifacts to {out}")
    return EXIT_OK


def _cmd_depth(args, cfg: PipelineConfig) -> int:
    disp = bio.load_disparity(args.disparity)
    calib = bio.load_calibration(args.calib)
    depth = disparity_map_to_depth_map(disp, calib)
    out = Path(args.out)
    bio.save_depth(out / "depth.pfm", depth)
    bio.write_image(out / "depth.png", colorize_depth(depth))
    print(f"wrote depth artifacts to {out}")
    return EXIT_OK


def _cmd_localize(args, cfg: PipelineConfig) -> int:
    frame = _load_frame(args.left, args.right, args.calib)
    try:
        frame_masks = load_manifest(args.masks)
    except (FormatError, FileNotFoundError) as exc:
        raise _ManifestError(str(exc)) from exc
    if (frame_masks.height, frame_masks.width) != frame.left.shape[:2]:
        raise ShapeError(
            f"manifest declares {frame_masks.width}x{frame_masks.height} but frame is "
            f"{frame.left.shape[1]}x{frame.left.shape[0]}"
        )
    guide, _, refined = _compute_disparities(frame, cfg)
    depth = disparity_map_to_depth_map(refined, frame.calibration)
    estimates, exclusions = localize_branches(
        frame_masks.instances, depth, frame.calibration, cfg.min_valid_ratio
    )
    out = Path(args.out)
    payload = {
        "frame_id": frame_masks.frame_id,
        "estimates": [e.to_json_dict() for e in estimates],
        "exclusions": [
            {"instance_id": e.instance_id, "reason": e.reason} for e in exclusions
        ],
    }
    bio.write_json(out / "estimates.json", payload)
    bio.write_image(out / "overlay.png", depth_overlay(guide, depth, frame_masks.instances))
    print(f"localized {len(estimates)} instance(s), {len(exclusions)} excluded -> {out}")
    return EXIT_OK


def _manifest_paths(tokens: list[str]) -> list[Path]:
    paths: list[Path] = []
    for tok in tokens:
        p = Path(tok)
        if p.is_dir():
            found = sorted(p.rglob("manifest.json"))
            if not found:
                raise FileNotFoundError(f"no manifest.json under {p}")
            paths.extend(found)
        else:
            paths.append(p)
    return paths


def _load_depth_pairs(path: str) -> list[tuple[float, float]]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise _ManifestError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise _ManifestError(f"{path}: depth pairs must be a JSON list")
    pairs = []
    for i, entry in enumerate(payload):
        if (
            not isinstance(entry, dict)
            or "estimated_m" not in entry
            or "ground_truth_m" not in entry
        ):
            raise _ManifestError(
                f"{path}: entry {i} must be an object with estimated_m and ground_truth_m"
            )
        pairs.append((float(entry["estimated_m"]), float(entry["ground_truth_m"])))
    return pairs


def _cmd_eval(args, cfg: PipelineConfig) -> int:
    try:
        pred_frames = [load_manifest(p) for p in _manifest_paths(args.pred)]
        gt_frames = [load_manifest(p) for p in _manifest_paths(args.gt)]
    except (FormatError, FileNotFoundError) as exc:
        raise _ManifestError(str(exc)) from exc
    preds = {f.frame_id: f for f in pred_frames}
    gts = {f.frame_id: f for f in gt_frames}
    if preds.keys() != gts.keys():
        only_pred = sorted(preds.keys() - gts.keys())
        only_gt = sorted(gts.keys() - preds.keys())
        raise _FrameIdMismatch(
            f"frame ids differ between manifests (prediction-only: {only_pred}, "
            f"ground-truth-only: {only_gt})"
        )
    pairs = [
        EvalPair(predictions=preds[fid].instances, ground_truth=gts[fid].instances)
        for fid in sorted(preds)
    ]
    depth_pairs = _load_depth_pairs(args.depth_pairs) if args.depth_pairs else None
    report = build_report(pairs, depth_pairs)
    out = Path(args.out)
    bio.write_json(out / "report.json", report)
    bio.atomic_write_bytes(out / "report.csv", report_to_csv(report).encode())
    print(
        f"evaluated {report['frames']} frame(s): "
        f"mAP_box={report['map_box']:.4f} mAP_mask={report['map_mask']:.4f}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchdepth",
        description="Stereo disparity, depth, and per-instance 3D localization pipeline.",
    )
    parser.add_argument("--config", help="TOML pipeline configuration file")
    parser.add_argument("--jobs", type=int, help="compute thread budget")
    parser.add_argument("--seed", type=int, help="seed override for synthetic generation")

    matcher = argparse.ArgumentParser(add_help=False)
    matcher.add_argument("--min-disparity", type=int)
    matcher.add_argument("--num-disparities", type=int)
    matcher.add_argument("--block-size", type=int)
    matcher.add_argument("--p1", type=int)
    matcher.add_argument("--p2", type=int)
    matcher.add_argument("--uniqueness", type=int, help="uniqueness ratio, percent")
    matcher.add_argument("--speckle-window", type=int)
    matcher.add_argument("--speckle-range", type=int)
    matcher.add_argument("--cost-scale", type=int, help="cost units per census bit (0 = auto)")
    matcher.add_argument("--paths", type=int, choices=(4, 8))
    matcher.add_argument(
        "--lr-check",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="enable/disable the left-right consistency filter",
    )
    matcher.add_argument("--lr-max-diff", type=int)
    matcher.add_argument(
        "--wls",
        dest="wls_enabled",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="enable/disable weighted-least-squares refinement",
    )
    matcher.add_argument("--wls-lambda", type=float)
    matcher.add_argument("--wls-sigma-color", type=float)
    matcher.add_argument("--wls-iterations", type=int)

    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="render synthetic scenes with ground truth")
    p_synth.add_argument("--out", required=True, help="scene directory (or prefix for --range)")
    group = p_synth.add_mutually_exclusive_group(required=True)
    group.add_argument("--scene", help="scene spec JSON to render")
    group.add_argument("--range", help="comma-separated branch depths in meters")
    p_synth.add_argument("--calib", help="calibration JSON (required with --range)")
    p_synth.add_argument("--noise", type=float, help="additive image noise sigma")
    p_synth.set_defaults(func=_cmd_synth)

    p_disp = sub.add_parser("disparity", parents=[matcher], help="compute disparity maps")
    p_disp.add_argument("left")
    p_disp.add_argument("right")
    p_disp.add_argument("--calib", required=True)
    p_disp.add_argument("--out", required=True)
    p_disp.set_defaults(func=_cmd_disparity)

    p_depth = sub.add_parser("depth", help="convert a disparity map to metric depth")
    p_depth.add_argument("disparity", help="disparity PFM file")
    p_depth.add_argument("--calib", required=True)
    p_depth.add_argument("--out", required=True)
    p_depth.set_defaults(func=_cmd_depth)

    p_loc = sub.add_parser(
        "localize", parents=[matcher], help="fuse masks with depth into 3D estimates"
    )
    p_loc.add_argument("left")
    p_loc.add_argument("right")
    p_loc.add_argument("--calib", required=True)
    p_loc.add_argument("--masks", required=True, help="mask manifest JSON")
    p_loc.add_argument("--out", required=True)
    p_loc.add_argument("--min-valid-ratio", type=float)
    p_loc.set_defaults(func=_cmd_localize)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--pred", required=True, nargs="+", help="prediction manifest(s) or dir")
    p_eval.add_argument("--gt", required=True, nargs="+", help="ground-truth manifest(s) or dir")
    p_eval.add_argument("--depth-pairs", help="JSON list of estimated/ground-truth depths")
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_jobs(args.jobs)
    if args.command == "synth" and args.range and not args.calib:
        print("synth --range requires --calib", file=sys.stderr)
        return EXIT_UNREADABLE
    try:
        if args.command in ("disparity", "localize"):
            cfg = _load_pipeline_config(args)
        elif args.command == "synth" and args.config:
            cfg = load_config(args.config)
        else:
            cfg = PipelineConfig()
        return args.func(args, cfg)
    except _ManifestError as exc:
        print(f"error: malformed manifest: {exc}", file=sys.stderr)
        return EXIT_BAD_MANIFEST
    except _FrameIdMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FRAME_MISMATCH
    except (ShapeError, ParamError) as exc:
        print(f"error: input mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    except (FormatError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE


if __name__ == "__main__":
    sys.exit(main())
