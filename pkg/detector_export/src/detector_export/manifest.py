"""Writer for the mask exchange format the stereo pipeline consumes.

One JSON manifest per frame plus one 8-bit grayscale PNG per instance
(255 = mask, 0 = background); ``bbox`` is the half-open tight box of the
mask and ``mask_file`` is relative to the manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass
class Instance:
    instance_id: int
    label: str
    score: float
    mask: np.ndarray


def tight_bbox(mask: np.ndarray) -> list[int]:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return [0, 0, 0, 0]
    return [int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1]


def write_frame_manifest(
    directory: Path, frame_id: str, width: int, height: int, instances: list[Instance]
) -> Path:
    directory = Path(directory)
    (directory / "masks").mkdir(parents=True, exist_ok=True)
    entries = []
    for inst in instances:
        if inst.mask.shape != (height, width):
            raise ValueError(
                f"instance {inst.instance_id}: mask {inst.mask.shape} does not match "
                f"frame {width}x{height}"
            )
        rel = f"masks/{frame_id}_{inst.instance_id:03d}.png"
        Image.fromarray(inst.mask.astype(np.uint8) * 255).save(directory / rel)
        entries.append(
            {
                "instance_id": inst.instance_id,
                "label": inst.label,
                "score": round(float(inst.score), 6),
                "bbox": tight_bbox(inst.mask),
                "mask_file": rel,
            }
        )
    manifest = directory / "manifest.json"
    manifest.write_text(
        json.dumps(
            {"frame_id": frame_id, "width": width, "height": height, "instances": entries},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return manifest
