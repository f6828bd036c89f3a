"""Camera model, shared domain types, and disparity/depth triangulation.

Conventions used across the package:

* Images are numpy ``uint8`` arrays, shape ``(height, width)`` for grayscale
  or ``(height, width, 3)`` for RGB.  Pixel coordinates are ``(u, v)`` =
  (column, row), so a pixel is addressed as ``array[v, u]``.
* Disparity maps are ``float32`` arrays in pixels.  Any negative value marks
  an invalid (unmatched) pixel; the canonical sentinel is ``-1.0``.
* Depth maps are ``float32`` arrays in meters.  Invalid pixels carry ``NaN``.

The sentinel values are deliberately out-of-band: a zero would look like a
legal measurement and silently poison downstream statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

INVALID_DISPARITY = np.float32(-1.0)


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class NoDepthError(PipelineError):
    """Disparity is zero, negative, or invalid: no depth can be triangulated."""


class InvalidDepthError(PipelineError):
    """A depth value outside (0, inf) was supplied."""


class ShapeError(PipelineError):
    """Array dimensions disagree with each other or with the calibration."""


class FormatError(PipelineError):
    """A file or buffer does not match the expected format."""


class ParamError(PipelineError):
    """A parameter value violates its documented constraints."""


class NoValidDataError(PipelineError):
    """An operation that needs at least one valid sample received none."""


class InsufficientDepthError(PipelineError):
    """Too few mask pixels carry valid depth to trust the localization."""


class EmptyEvalError(PipelineError):
    """An evaluation metric was asked to summarize an empty set."""


class SceneSpecError(PipelineError):
    """A synthetic scene description is geometrically impossible."""


class ConfigError(PipelineError):
    """The pipeline configuration file is malformed or has unknown keys."""


class Point3D(NamedTuple):
    """Camera-centered 3D point, meters. +x right, +y down, +z forward."""

    x: float
    y: float
    z: float


@dataclass(frozen=True)
class CameraCalibration:
    """Pinhole intrinsics plus stereo baseline for a rectified pair.

    Attributes:
        fx, fy: focal lengths in pixels.
        cx, cy: principal point in pixels.
        baseline: distance between the two optical centers, meters.
        width, height: image size the intrinsics refer to, pixels.
        rectified: the producing camera already row-rectified the pair.
            Rectification is an input precondition, not a pipeline stage;
            frames whose calibration is not rectified are rejected.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    baseline: float
    width: int
    height: int
    rectified: bool = True

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ParamError(f"image size must be positive, got {self.width}x{self.height}")
        if self.fx <= 0 or self.fy <= 0:
            raise ParamError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.baseline <= 0:
            raise ParamError(f"baseline must be positive, got {self.baseline}")
        if not (0 <= self.cx < self.width) or not (0 <= self.cy < self.height):
            raise ParamError(
                f"principal point ({self.cx}, {self.cy}) outside "
                f"{self.width}x{self.height} image"
            )


def check_image(img: np.ndarray) -> np.ndarray:
    """Validate an image array and return it unchanged.

    Raises FormatError for anything that is not an 8-bit single- or
    three-channel raster.
    """
    if not isinstance(img, np.ndarray):
        raise FormatError(f"expected numpy array, got {type(img).__name__}")
    if img.dtype != np.uint8:
        raise FormatError(f"expected uint8 samples, got {img.dtype}")
    if img.ndim == 2:
        pass
    elif img.ndim == 3 and img.shape[2] in (1, 3):
        pass
    else:
        raise FormatError(f"expected (H, W) or (H, W, 1|3) shape, got {img.shape}")
    if img.shape[0] <= 0 or img.shape[1] <= 0:
        raise FormatError(f"degenerate image shape {img.shape}")
    return img


@dataclass(frozen=True)
class StereoFrame:
    """A row-rectified stereo pair together with its calibration.

    Corresponding points share the same row v; the right-image feature sits
    ``d`` pixels to the left of its left-image position.
    """

    left: np.ndarray
    right: np.ndarray
    calibration: CameraCalibration

    def __post_init__(self) -> None:
        check_image(self.left)
        check_image(self.right)
        if self.left.shape != self.right.shape:
            raise ShapeError(
                f"left {self.left.shape} and right {self.right.shape} shapes differ"
            )
        calib = self.calibration
        if self.left.shape[:2] != (calib.height, calib.width):
            raise ShapeError(
                f"frame is {self.left.shape[1]}x{self.left.shape[0]} but calibration "
                f"declares {calib.width}x{calib.height}"
            )
        if not calib.rectified:
            raise FormatError("calibration is not rectified; the pipeline requires rectified pairs")


def disparity_to_depth(d: float, calib: CameraCalibration) -> float:
    """Triangulate metric depth from a single disparity value.

    Raises NoDepthError when ``d`` is zero, negative, or non-finite, which
    signals an occluded or unmatched pixel rather than a measurement.
    """
    if not np.isfinite(d) or d <= 0:
        raise NoDepthError(f"no depth for disparity {d}")
    return calib.baseline * calib.fx / float(d)


def depth_to_disparity(z: float, calib: CameraCalibration) -> float:
    """Invert triangulation: the disparity a point at depth ``z`` produces."""
    if not np.isfinite(z) or z <= 0:
        raise InvalidDepthError(f"depth must be positive and finite, got {z}")
    return calib.baseline * calib.fx / float(z)


def back_project(u: float, v: float, z: float, calib: CameraCalibration) -> Point3D:
    """Map pixel (u, v) at depth z to a camera-frame 3D point."""
    if not np.isfinite(z) or z <= 0:
        raise InvalidDepthError(f"depth must be positive and finite, got {z}")
    x = (u - calib.cx) * z / calib.fx
    y = (v - calib.cy) * z / calib.fy
    return Point3D(x, y, float(z))


def valid_disparity_mask(disp: np.ndarray) -> np.ndarray:
    """Boolean mask of pixels carrying a usable disparity."""
    return np.isfinite(disp) & (disp >= 0)


def valid_depth_mask(depth: np.ndarray) -> np.ndarray:
    """Boolean mask of pixels carrying a usable depth."""
    return np.isfinite(depth) & (depth > 0)


def disparity_map_to_depth_map(disp: np.ndarray, calib: CameraCalibration) -> np.ndarray:
    """Element-wise triangulation of a whole disparity map.

    Invalid and non-positive disparities map to NaN depth.
    """
    if disp.shape != (calib.height, calib.width):
        raise ShapeError(
            f"disparity map {disp.shape} does not match calibration "
            f"{calib.height}x{calib.width}"
        )
    depth = np.full(disp.shape, np.nan, dtype=np.float32)
    ok = np.isfinite(disp) & (disp > 0)
    depth[ok] = calib.baseline * calib.fx / disp[ok]
    return depth
