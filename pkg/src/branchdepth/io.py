"""File formats: PNG images, PFM float rasters, calibration JSON.

PFM files are written grayscale ('Pf'), 32-bit little-endian floats
(scale header -1.0), scanlines bottom-to-top per the format. Invalid
pixels are encoded as -1.0 on disk for both disparity and depth maps.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .core import CameraCalibration, FormatError

PathLike = Union[str, Path]

_CALIB_KEYS = {"fx", "fy", "cx", "cy", "baseline_m", "width", "height", "rectified"}


def atomic_write_bytes(path: PathLike, data: bytes) -> None:
    """Write a file via a temp-file-then-rename so failures leave no partial artifact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_image(path: PathLike) -> np.ndarray:
    """Load a PNG (or other raster) as uint8 grayscale or RGB."""
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
            elif im.mode == "RGB":
                arr = np.asarray(im, dtype=np.uint8)
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise FormatError(f"cannot decode image {path}: {exc}") from exc
    return arr


def write_image(path: PathLike, img: np.ndarray) -> None:
    if img.dtype != np.uint8:
        raise FormatError(f"images are written as uint8, got {img.dtype}")
    import io as _io

    buf = _io.BytesIO()
    Image.fromarray(img).save(buf, format="PNG")
    atomic_write_bytes(path, buf.getvalue())


def write_pfm(path: PathLike, data: np.ndarray) -> None:
    """Write a single-channel float32 PFM (little-endian, bottom-up rows)."""
    if data.ndim != 2:
        raise FormatError(f"PFM writer expects a 2D array, got shape {data.shape}")
    arr = np.ascontiguousarray(np.flipud(data.astype("<f4")))
    h, w = data.shape
    header = f"Pf\n{w} {h}\n-1.0\n".encode("ascii")
    atomic_write_bytes(path, header + arr.tobytes())


def read_pfm(path: PathLike) -> np.ndarray:
    """Read a single-channel PFM into a float32 array (top-down rows)."""
    raw = Path(path).read_bytes()
    m = re.match(rb"(Pf)\s+(\d+)\s+(\d+)\s+([-+0-9.eE]+)\s", raw)
    if not m:
        raise FormatError(f"{path} is not a grayscale PFM file")
    w, h = int(m.group(2)), int(m.group(3))
    scale = float(m.group(4))
    offset = m.end()
    count = w * h
    dtype = "<f4" if scale < 0 else ">f4"
    body = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
    if body.size != count:
        raise FormatError(f"{path}: truncated PFM payload")
    return np.flipud(body.reshape(h, w)).astype(np.float32)


def save_disparity(path: PathLike, disp: np.ndarray) -> None:
    """Persist a disparity map; every invalid pixel becomes -1.0 on disk."""
    out = disp.astype(np.float32).copy()
    bad = ~np.isfinite(out) | (out < 0)
    out[bad] = -1.0
    write_pfm(path, out)


def load_disparity(path: PathLike) -> np.ndarray:
    disp = read_pfm(path)
    bad = ~np.isfinite(disp) | (disp < 0)
    disp[bad] = -1.0
    return disp


def save_depth(path: PathLike, depth: np.ndarray) -> None:
    """Persist a depth map; invalid (NaN / non-positive) pixels become -1.0."""
    out = depth.astype(np.float32).copy()
    bad = ~np.isfinite(out) | (out <= 0)
    out[bad] = -1.0
    write_pfm(path, out)


def load_depth(path: PathLike) -> np.ndarray:
    depth = read_pfm(path)
    bad = ~np.isfinite(depth) | (depth <= 0)
    depth[bad] = np.nan
    return depth


def load_calibration(path: PathLike) -> CameraCalibration:
    """Load calibration JSON.

    Expected keys: fx, fy, cx, cy, baseline_m, width, height, rectified.
    A missing or false ``rectified`` flag is rejected: the pipeline only
    accepts row-rectified input.
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: calibration must be a JSON object")
    missing = _CALIB_KEYS - payload.keys()
    if missing:
        raise FormatError(f"{path}: missing calibration keys: {sorted(missing)}")
    unknown = payload.keys() - _CALIB_KEYS
    if unknown:
        raise FormatError(f"{path}: unknown calibration keys: {sorted(unknown)}")
    if payload["rectified"] is not True:
        raise FormatError(f"{path}: calibration must declare rectified: true")
    return CameraCalibration(
        fx=float(payload["fx"]),
        fy=float(payload["fy"]),
        cx=float(payload["cx"]),
        cy=float(payload["cy"]),
        baseline=float(payload["baseline_m"]),
        width=int(payload["width"]),
        height=int(payload["height"]),
        rectified=True,
    )


def save_calibration(path: PathLike, calib: CameraCalibration) -> None:
    payload = {
        "fx": calib.fx,
        "fy": calib.fy,
        "cx": calib.cx,
        "cy": calib.cy,
        "baseline_m": calib.baseline,
        "width": calib.width,
        "height": calib.height,
        "rectified": calib.rectified,
    }
    atomic_write_bytes(path, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode())


def write_json(path: PathLike, payload) -> None:
    """Deterministic JSON artifact writer (sorted keys, trailing newline)."""
    atomic_write_bytes(path, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode())
