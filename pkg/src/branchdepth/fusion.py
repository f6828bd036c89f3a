"""Fuse instance masks with the depth map into per-instance 3D estimates.

Masks live in left-image coordinates (the left camera is the reference
frame for disparity and depth). Each mask is processed independently:
its pixels are registered against the depth map, obvious depth outliers
are rejected with a MAD rule, and the survivors are summarized into
robust statistics plus a back-projected 3D centroid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CameraCalibration,
    InsufficientDepthError,
    ParamError,
    Point3D,
    ShapeError,
    back_project,
    valid_depth_mask,
)

# scale factor turning the median absolute deviation into a sigma-like unit
MAD_SCALE = 1.4826
MAD_CUTOFF = 3.0

DEFAULT_MIN_VALID_RATIO = 0.25


def tight_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    """Half-open (x_min, y_min, x_max, y_max) of the set pixels; zeros if empty."""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return (0, 0, 0, 0)
    return (int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)


@dataclass(frozen=True)
class SegmentMask:
    """One detected instance: binary raster plus its box, score, and label.

    ``bbox`` is half-open pixel coordinates (x_min, y_min, x_max, y_max) and
    must be the tight bounding box of the mask.
    """

    instance_id: int
    label: str
    score: float
    mask: np.ndarray
    bbox: tuple[int, int, int, int]

    def __post_init__(self) -> None:
        if self.mask.ndim != 2 or self.mask.dtype != np.bool_:
            raise ParamError("mask must be a 2D boolean array")
        if not (0.0 <= self.score <= 1.0):
            raise ParamError(f"score must be in [0, 1], got {self.score}")
        if tuple(self.bbox) != tight_bbox(self.mask):
            raise ParamError(
                f"bbox {self.bbox} is not the tight box {tight_bbox(self.mask)} of the mask"
            )

    @classmethod
    def from_mask(
        cls, instance_id: int, mask: np.ndarray, score: float = 1.0, label: str = "branch"
    ) -> "SegmentMask":
        mask = np.asarray(mask, dtype=bool)
        return cls(
            instance_id=instance_id,
            label=label,
            score=float(score),
            mask=mask,
            bbox=tight_bbox(mask),
        )


@dataclass(frozen=True)
class BranchEstimate:
    """Fused result for one instance: depth statistics and a 3D centroid."""

    instance_id: int
    label: str
    pixel_count: int
    valid_count: int
    valid_ratio: float
    mean_depth: float
    median_depth: float
    std_depth: float
    centroid: Point3D

    def to_json_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "label": self.label,
            "pixel_count": self.pixel_count,
            "valid_count": self.valid_count,
            "valid_ratio": self.valid_ratio,
            "mean_depth_m": self.mean_depth,
            "median_depth_m": self.median_depth,
            "std_depth_m": self.std_depth,
            "centroid_m": [self.centroid.x, self.centroid.y, self.centroid.z],
        }


@dataclass(frozen=True)
class Exclusion:
    """A mask that produced no estimate, with a human-readable reason."""

    instance_id: int
    reason: str


def register_mask(mask: SegmentMask, depth: np.ndarray) -> np.ndarray:
    """Pair every mask pixel that has valid depth with its (u, v, z).

    Returns an (N, 3) float64 array of [u, v, depth]; INVALID depths are
    excluded. Mask and depth must share dimensions.
    """
    if mask.mask.shape != depth.shape:
        raise ShapeError(f"mask {mask.mask.shape} does not match depth {depth.shape}")
    usable = mask.mask & valid_depth_mask(depth)
    vs, us = np.nonzero(usable)
    return np.column_stack([us.astype(np.float64), vs.astype(np.float64), depth[vs, us]])


def summarize(
    samples: np.ndarray,
    calib: CameraCalibration,
    min_valid_ratio: float,
    pixel_count: int,
    instance_id: int = 0,
    label: str = "branch",
) -> BranchEstimate:
    """Robust statistics and 3D centroid for one instance's depth samples.

    Samples farther than 3 scaled-MAD units from the median are dropped
    first (skipped entirely when the MAD is zero, e.g. on clean constant
    data). Statistics use the population standard deviation, since a mask
    is an exhaustive pixel set rather than a sample. The centroid
    back-projects the mean (u, v) of the retained samples at the median
    depth.

    Raises InsufficientDepthError when too few mask pixels carry depth.
    """
    if pixel_count <= 0:
        raise ParamError(f"pixel_count must be positive, got {pixel_count}")
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, 3)
    valid_count = samples.shape[0]
    valid_ratio = valid_count / pixel_count
    if valid_ratio < min_valid_ratio:
        raise InsufficientDepthError(
            f"instance {instance_id}: only {valid_count}/{pixel_count} mask pixels have "
            f"depth (ratio {valid_ratio:.3f} < {min_valid_ratio})"
        )
    depths = samples[:, 2]
    med = float(np.median(depths))
    mad_scaled = MAD_SCALE * float(np.median(np.abs(depths - med)))
    if mad_scaled > 0:
        keep = np.abs(depths - med) <= MAD_CUTOFF * mad_scaled
        samples = samples[keep]
        depths = samples[:, 2]
    mean_depth = float(np.mean(depths))
    median_depth = float(np.median(depths))
    std_depth = float(np.std(depths))
    centroid = back_project(
        float(np.mean(samples[:, 0])), float(np.mean(samples[:, 1])), median_depth, calib
    )
    return BranchEstimate(
        instance_id=instance_id,
        label=label,
        pixel_count=int(pixel_count),
        valid_count=int(valid_count),
        valid_ratio=float(valid_ratio),
        mean_depth=mean_depth,
        median_depth=median_depth,
        std_depth=std_depth,
        centroid=centroid,
    )


def localize_branches(
    masks: list[SegmentMask],
    depth: np.ndarray,
    calib: CameraCalibration,
    min_valid_ratio: float = DEFAULT_MIN_VALID_RATIO,
) -> tuple[list[BranchEstimate], list[Exclusion]]:
    """Per-mask fusion over a whole frame.

    Masks are independent: a failure on one becomes an Exclusion record
    instead of aborting the rest. Output order follows input order.
    """
    estimates: list[BranchEstimate] = []
    exclusions: list[Exclusion] = []
    for m in masks:
        pixel_count = int(m.mask.sum())
        if pixel_count == 0:
            exclusions.append(Exclusion(m.instance_id, "empty mask"))
            continue
        samples = register_mask(m, depth)
        try:
            estimates.append(
                summarize(
                    samples,
                    calib,
                    min_valid_ratio,
                    pixel_count,
                    instance_id=m.instance_id,
                    label=m.label,
                )
            )
        except InsufficientDepthError as exc:
            exclusions.append(Exclusion(m.instance_id, str(exc)))
    return estimates, exclusions
