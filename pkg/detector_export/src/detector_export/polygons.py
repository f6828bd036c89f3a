"""Polygon annotation parsing and rasterization.

Annotations follow the common manual-labeling layout: one JSON per frame,

    {
      "imageWidth": 640,
      "imageHeight": 480,
      "shapes": [
        {"label": "branch", "points": [[x, y], ...], "score": 0.9}
      ]
    }

``score`` is optional (defaults to 1.0). Rasterization uses the even-odd
rule on pixel centers: pixel (i, j) is set iff its center (i+0.5, j+0.5)
lies inside the polygon, so an axis-aligned square with integer corners
fills exactly its geometric area in pixels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class AnnotationError(ValueError):
    """Polygon annotation file does not match the expected layout."""


@dataclass
class PolygonShape:
    label: str
    points: list[tuple[float, float]]
    score: float = 1.0


@dataclass
class PolygonAnnotation:
    width: int
    height: int
    shapes: list[PolygonShape]


def rasterize_polygon(points, width: int, height: int) -> np.ndarray:
    """Even-odd fill of one polygon onto a (height, width) boolean raster."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise AnnotationError(f"polygon needs >= 3 [x, y] points, got shape {pts.shape}")
    cx = np.arange(width, dtype=np.float64) + 0.5
    cy = np.arange(height, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(cx, cy)
    inside = np.zeros((height, width), dtype=bool)
    n = pts.shape[0]
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        crosses = (y0 > gy) != (y1 > gy)
        if not crosses.any():
            continue
        t = (gy - y0) / (y1 - y0)
        xint = x0 + t * (x1 - x0)
        inside ^= crosses & (gx < xint)
    return inside


def load_polygon_annotation(path) -> PolygonAnnotation:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise AnnotationError(f"{path}: annotation must be a JSON object")
    for key in ("imageWidth", "imageHeight", "shapes"):
        if key not in payload:
            raise AnnotationError(f"{path}: missing key {key!r}")
    width, height = payload["imageWidth"], payload["imageHeight"]
    if not (isinstance(width, int) and isinstance(height, int) and width > 0 and height > 0):
        raise AnnotationError(f"{path}: imageWidth/imageHeight must be positive integers")
    if not isinstance(payload["shapes"], list):
        raise AnnotationError(f"{path}: shapes must be a list")
    shapes = []
    for i, shape in enumerate(payload["shapes"]):
        if not isinstance(shape, dict) or "points" not in shape:
            raise AnnotationError(f"{path}: shapes[{i}] must be an object with points")
        points = shape["points"]
        if not isinstance(points, list) or len(points) < 3:
            raise AnnotationError(f"{path}: shapes[{i}] needs at least 3 points")
        score = float(shape.get("score", 1.0))
        if not (0.0 <= score <= 1.0):
            raise AnnotationError(f"{path}: shapes[{i}].score must lie in [0, 1]")
        shapes.append(
            PolygonShape(
                label=str(shape.get("label", "branch")),
                points=[(float(p[0]), float(p[1])) for p in points],
                score=score,
            )
        )
    return PolygonAnnotation(width=width, height=height, shapes=shapes)
