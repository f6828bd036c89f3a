"""Batch export: images or polygon annotations -> exchange manifests."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .manifest import Instance, write_frame_manifest
from .polygons import AnnotationError, load_polygon_annotation, rasterize_polygon

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass
class ExportSummary:
    manifests: list[Path] = field(default_factory=list)
    skipped: list[tuple[Path, str]] = field(default_factory=list)

    def report(self) -> str:
        lines = [f"wrote {len(self.manifests)} manifest(s)"]
        for path, reason in self.skipped:
            lines.append(f"skipped {path}: {reason}")
        return "\n".join(lines)


def _read_image(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        return np.asarray(im, dtype=np.uint8)


def _export_from_polygons(
    annotation_paths: list[Path], output_dir: Path, label_override: str | None
) -> ExportSummary:
    summary = ExportSummary()
    for path in annotation_paths:
        try:
            annotation = load_polygon_annotation(path)
        except AnnotationError as exc:
            summary.skipped.append((path, str(exc)))
            print(f"warning: skipping {path}: {exc}", file=sys.stderr)
            continue
        frame_id = path.stem
        instances = []
        for i, shape in enumerate(annotation.shapes, start=1):
            mask = rasterize_polygon(shape.points, annotation.width, annotation.height)
            if not mask.any():
                continue
            instances.append(
                Instance(
                    instance_id=i,
                    label=label_override or shape.label,
                    score=shape.score,
                    mask=mask,
                )
            )
        summary.manifests.append(
            write_frame_manifest(
                output_dir / frame_id, frame_id, annotation.width, annotation.height, instances
            )
        )
    return summary


def _export_from_model(
    image_paths: list[Path],
    output_dir: Path,
    model_ref: str,
    conf_threshold: float,
    label_override: str | None,
) -> ExportSummary:
    from .model import load_model, run_inference

    model = load_model(model_ref)
    summary = ExportSummary()
    for path in image_paths:
        try:
            image = _read_image(path)
        except (OSError, UnidentifiedImageError) as exc:
            summary.skipped.append((path, str(exc)))
            print(f"warning: skipping {path}: {exc}", file=sys.stderr)
            continue
        detections = run_inference(model, image, conf_threshold)
        instances = [
            Instance(
                instance_id=i,
                label=label_override or det["label"],
                score=det["score"],
                mask=det["mask"],
            )
            for i, det in enumerate(detections, start=1)
        ]
        frame_id = path.stem
        height, width = image.shape[:2]
        summary.manifests.append(
            write_frame_manifest(output_dir / frame_id, frame_id, width, height, instances)
        )
    return summary


def export_masks(
    input_dir,
    output_dir,
    model_ref: str | None = None,
    conf_threshold: float = 0.5,
    from_polygons: bool = False,
    label_override: str | None = None,
) -> ExportSummary:
    """Convert every frame under ``input_dir`` into an exchange manifest.

    Polygon mode scans for ``*.json`` annotations; model mode scans for
    images and runs the referenced segmentation model. Each frame lands in
    ``output_dir/<frame_id>/manifest.json`` with its mask PNGs alongside.
    """
    input_dir = Path(input_dir)
    output_dir = Path(output_dir)
    if not input_dir.is_dir():
        raise FileNotFoundError(f"input directory {input_dir} does not exist")
    if from_polygons:
        paths = sorted(input_dir.glob("*.json"))
        if not paths:
            raise FileNotFoundError(f"no polygon annotations (*.json) under {input_dir}")
        return _export_from_polygons(paths, output_dir, label_override)
    if not model_ref:
        raise ValueError("model mode needs --model; or pass --from-polygons")
    paths = sorted(p for p in input_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise FileNotFoundError(f"no images under {input_dir}")
    return _export_from_model(paths, output_dir, model_ref, conf_threshold, label_override)
