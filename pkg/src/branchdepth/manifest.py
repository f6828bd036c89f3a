"""Mask exchange format: the file contract between detectors and fusion.

A frame is described by a JSON manifest

    {
      "frame_id": "scene_000",
      "width": 640,
      "height": 480,
      "instances": [
        {"instance_id": 1, "label": "branch", "score": 0.93,
         "bbox": [x_min, y_min, x_max, y_max], "mask_file": "masks/001.png"}
      ]
    }

plus one 8-bit grayscale PNG per instance (255 = mask, 0 = background),
with ``mask_file`` paths resolved relative to the manifest's directory.
``score`` may be omitted for ground-truth manifests (defaults to 1.0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FormatError
from .fusion import SegmentMask, tight_bbox
from .io import PathLike, read_image, write_image, write_json


@dataclass
class FrameMasks:
    frame_id: str
    width: int
    height: int
    instances: list[SegmentMask]


def _require(cond: bool, path: PathLike, msg: str) -> None:
    if not cond:
        raise FormatError(f"{path}: {msg}")


def load_manifest(path: PathLike) -> FrameMasks:
    """Load and validate one frame manifest plus its mask rasters.

    Every schema violation raises FormatError with a diagnostic naming the
    offending field.
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable manifest: {exc}") from exc
    _require(isinstance(payload, dict), path, "manifest must be a JSON object")
    for key in ("frame_id", "width", "height", "instances"):
        _require(key in payload, path, f"missing required key {key!r}")
    width, height = payload["width"], payload["height"]
    _require(
        isinstance(width, int) and isinstance(height, int) and width > 0 and height > 0,
        path,
        "width/height must be positive integers",
    )
    _require(isinstance(payload["instances"], list), path, "instances must be a list")

    instances: list[SegmentMask] = []
    seen_ids: set[int] = set()
    for i, entry in enumerate(payload["instances"]):
        where = f"instances[{i}]"
        _require(isinstance(entry, dict), path, f"{where} must be an object")
        for key in ("instance_id", "label", "bbox", "mask_file"):
            _require(key in entry, path, f"{where} missing key {key!r}")
        iid = entry["instance_id"]
        _require(isinstance(iid, int), path, f"{where}.instance_id must be an integer")
        _require(iid not in seen_ids, path, f"duplicate instance_id {iid}")
        seen_ids.add(iid)
        score = entry.get("score", 1.0)
        _require(
            isinstance(score, (int, float)) and 0.0 <= score <= 1.0,
            path,
            f"{where}.score must lie in [0, 1]",
        )
        bbox = entry["bbox"]
        _require(
            isinstance(bbox, list) and len(bbox) == 4 and all(isinstance(b, int) for b in bbox),
            path,
            f"{where}.bbox must be [x_min, y_min, x_max, y_max] integers",
        )
        mask_path = path.parent / entry["mask_file"]
        try:
            raster = read_image(mask_path)
        except (FileNotFoundError, FormatError) as exc:
            raise FormatError(f"{path}: {where}.mask_file: {exc}") from exc
        _require(raster.ndim == 2, path, f"{where}: mask PNG must be 8-bit grayscale")
        _require(
            raster.shape == (height, width),
            path,
            f"{where}: mask is {raster.shape[1]}x{raster.shape[0]}, "
            f"manifest declares {width}x{height}",
        )
        mask = raster >= 128
        _require(
            tuple(bbox) == tight_bbox(mask),
            path,
            f"{where}.bbox {bbox} is not the tight box {list(tight_bbox(mask))} of the mask",
        )
        instances.append(
            SegmentMask(
                instance_id=iid,
                label=str(entry["label"]),
                score=float(score),
                mask=mask,
                bbox=tuple(bbox),
            )
        )
    return FrameMasks(
        frame_id=str(payload["frame_id"]), width=width, height=height, instances=instances
    )


def save_manifest(
    directory: PathLike,
    frame_id: str,
    instances: list[SegmentMask],
    width: int,
    height: int,
    manifest_name: str = "manifest.json",
) -> Path:
    """Write a manifest plus one PNG per instance under ``directory``.

    Masks land in ``directory/masks/<frame_id>_<instance_id>.png``. Returns
    the manifest path.
    """
    directory = Path(directory)
    (directory / "masks").mkdir(parents=True, exist_ok=True)
    entries = []
    for inst in instances:
        if inst.mask.shape != (height, width):
            raise FormatError(
                f"instance {inst.instance_id} mask shape {inst.mask.shape} does not "
                f"match frame {width}x{height}"
            )
        rel = f"masks/{frame_id}_{inst.instance_id:03d}.png"
        write_image(directory / rel, inst.mask.astype(np.uint8) * 255)
        entries.append(
            {
                "instance_id": inst.instance_id,
                "label": inst.label,
                "score": inst.score,
                "bbox": list(inst.bbox),
                "mask_file": rel,
            }
        )
    manifest_path = directory / manifest_name
    write_json(
        manifest_path,
        {"frame_id": frame_id, "width": width, "height": height, "instances": entries},
    )
    return manifest_path
