"""False-color renderings of disparity/depth maps for visual inspection.

Colormap is a fixed 256-entry viridis lookup table; invalid pixels render
black. Every rendering carries a legend strip at the bottom annotating the
value range, so the PNG is self-describing.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

from .core import valid_disparity_mask, valid_depth_mask

_LEGEND_HEIGHT = 24
_BAR_HEIGHT = 8


def _viridis_lut() -> np.ndarray:
    from matplotlib import colormaps

    lut = colormaps["viridis"](np.linspace(0.0, 1.0, 256))[:, :3]
    return (lut * 255).astype(np.uint8)


def colorize(
    values: np.ndarray,
    valid: np.ndarray,
    vmin: float | None = None,
    vmax: float | None = None,
    unit: str = "",
) -> np.ndarray:
    """Map a scalar field to RGB with a labeled legend strip appended below."""
    lut = _viridis_lut()
    h, w = values.shape
    if not valid.any():
        vmin, vmax = 0.0, 1.0
    else:
        if vmin is None:
            vmin = float(values[valid].min())
        if vmax is None:
            vmax = float(values[valid].max())
    span = max(vmax - vmin, 1e-12)
    norm = np.clip((values.astype(np.float64) - vmin) / span, 0.0, 1.0)
    idx = np.rint(norm * 255).astype(np.intp)
    rgb = lut[idx]
    rgb[~valid] = 0

    legend = np.zeros((_LEGEND_HEIGHT, w, 3), np.uint8)
    ramp = lut[np.rint(np.linspace(0, 255, w)).astype(np.intp)]
    legend[:_BAR_HEIGHT] = ramp[None, :, :]
    img = Image.fromarray(np.vstack([rgb, legend]))
    draw = ImageDraw.Draw(img)
    label = f"{vmin:.3g} .. {vmax:.3g} {unit}".strip()
    draw.text((2, h + _BAR_HEIGHT + 2), label, fill=(255, 255, 255))
    return np.asarray(img, dtype=np.uint8)


def colorize_disparity(disp: np.ndarray, vmax: float | None = None) -> np.ndarray:
    return colorize(disp, valid_disparity_mask(disp), vmin=0.0, vmax=vmax, unit="px")


def colorize_depth(depth: np.ndarray) -> np.ndarray:
    return colorize(depth, valid_depth_mask(depth), unit="m")


def depth_overlay(gray: np.ndarray, depth: np.ndarray, masks) -> np.ndarray:
    """Blend colorized depth over the grayscale frame inside instance masks.

    Draws each instance's bounding box on top; used by the localization
    command for a quick visual sanity check.
    """
    base = np.repeat(gray[:, :, None], 3, axis=2).astype(np.float64)
    colored = colorize_depth(depth)[: gray.shape[0]].astype(np.float64)
    out = base.copy()
    for m in masks:
        sel = m.mask
        out[sel] = 0.35 * base[sel] + 0.65 * colored[sel]
    img = Image.fromarray(np.clip(np.rint(out), 0, 255).astype(np.uint8))
    draw = ImageDraw.Draw(img)
    for m in masks:
        x0, y0, x1, y1 = m.bbox
        if x1 > x0 and y1 > y0:
            draw.rectangle([x0, y0, x1 - 1, y1 - 1], outline=(255, 64, 64))
            draw.text((x0 + 2, max(0, y0 - 12)), str(m.instance_id), fill=(255, 64, 64))
    return np.asarray(img, dtype=np.uint8)
