"""Command line: detector-export INPUT_DIR OUTPUT_DIR [options]."""

from __future__ import annotations

import argparse
import sys

from .export import export_masks
from .model import ModelLoadError
from .polygons import AnnotationError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detector-export",
        description=(
            "Run an instance-segmentation model on images (or rasterize polygon "
            "annotations) and write per-frame mask-exchange manifests."
        ),
    )
    parser.add_argument("input_dir", help="directory of images (or *.json with --from-polygons)")
    parser.add_argument("output_dir", help="directory to write <frame_id>/manifest.json into")
    parser.add_argument(
        "--model",
        help="model reference: torchvision:<builder>[:default|untrained] or a TorchScript path",
    )
    parser.add_argument("--conf", type=float, default=0.5, help="confidence threshold")
    parser.add_argument(
        "--from-polygons",
        action="store_true",
        help="convert polygon annotation JSON files instead of running a model",
    )
    parser.add_argument(
        "--label",
        default="branch",
        help="label to assign to exported instances (use '' to keep source labels)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    label = args.label if args.label else None
    try:
        summary = export_masks(
            args.input_dir,
            args.output_dir,
            model_ref=args.model,
            conf_threshold=args.conf,
            from_polygons=args.from_polygons,
            label_override=label,
        )
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError, AnnotationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(summary.report())
    return 0


if __name__ == "__main__":
    sys.exit(main())
