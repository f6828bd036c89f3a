"""Semi-global block matching disparity engine.

Stages: census transform over a square window, Hamming-distance cost
volume, multi-path cost aggregation with small/large disparity-change
penalties, winner-take-all selection with a uniqueness test and parabolic
subpixel refinement, optional left-right consistency filtering, and
connected-component speckle removal.

The matching cost is a census/Hamming cost over the configured block size:
it is integral, radiometrically robust, and keeps the whole aggregation
exact in integer arithmetic, which in turn makes results bit-identical
under any degree of parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import ParamError, ShapeError, StereoFrame, check_image
from .preprocess import to_grayscale


@dataclass(frozen=True)
class SgbmParams:
    """Matcher configuration.

    ``p1`` penalizes one-step disparity changes along an aggregation path,
    ``p2`` larger jumps. ``uniqueness_ratio`` is the percentage margin by
    which the winning cost must beat every non-adjacent competitor.
    ``speckle_window`` / ``speckle_range`` configure the post-selection
    component filter. ``num_paths`` is 4 (axis-aligned) or 8 (plus
    diagonals).
    """

    min_disparity: int = 0
    num_disparities: int = 128
    block_size: int = 5
    p1: int = 600
    p2: int = 2400
    uniqueness_ratio: int = 10
    speckle_window: int = 100
    speckle_range: int = 32
    num_paths: int = 8
    lr_check: bool = True
    lr_max_diff: int = 1
    # cost units per census bit; 0 selects block_size^2 so that one bit of
    # census disagreement weighs like one block-area cost unit, the scale
    # the default p1/p2 profile assumes (raw Hamming tops out at 24 for a
    # 5x5 window, which would let p2 outweigh ~100 px of evidence and
    # erase thin structures)
    cost_scale: int = 0

    def __post_init__(self) -> None:
        if not (self.p2 > self.p1 > 0):
            raise ParamError(f"need p2 > p1 > 0, got p1={self.p1}, p2={self.p2}")
        if self.num_disparities <= 0 or self.num_disparities % 16 != 0:
            raise ParamError(
                f"num_disparities must be a positive multiple of 16, got {self.num_disparities}"
            )
        if self.block_size < 3 or self.block_size % 2 == 0:
            raise ParamError(f"block_size must be odd and >= 3, got {self.block_size}")
        if self.block_size > 13:
            raise ParamError("block_size > 13 would overflow the 64-bit census code")
        if self.min_disparity < 0:
            raise ParamError(f"min_disparity must be >= 0, got {self.min_disparity}")
        if self.num_paths not in (4, 8):
            raise ParamError(f"num_paths must be 4 or 8, got {self.num_paths}")
        if self.uniqueness_ratio < 0:
            raise ParamError(f"uniqueness_ratio must be >= 0, got {self.uniqueness_ratio}")
        if self.speckle_window < 0:
            raise ParamError(f"speckle_window must be >= 0, got {self.speckle_window}")
        if self.speckle_range < 0:
            raise ParamError(f"speckle_range must be >= 0, got {self.speckle_range}")
        if self.lr_max_diff < 0:
            raise ParamError(f"lr_max_diff must be >= 0, got {self.lr_max_diff}")
        if self.cost_scale < 0:
            raise ParamError(f"cost_scale must be >= 0 (0 = auto), got {self.cost_scale}")
        if self.effective_cost_scale * (self.census_bits + 1) > np.iinfo(np.uint16).max:
            raise ParamError("cost_scale overflows the 16-bit cost volume")

    @property
    def census_bits(self) -> int:
        return self.block_size * self.block_size - 1

    @property
    def effective_cost_scale(self) -> int:
        return self.cost_scale if self.cost_scale > 0 else self.block_size * self.block_size

    @property
    def large_cost(self) -> int:
        """Cost assigned to correspondences that fall outside the image."""
        return (self.census_bits + 1) * self.effective_cost_scale


def census_transform(img: np.ndarray, window: int) -> np.ndarray:
    """Census codes for every pixel: bit = 1 iff the neighbor is darker
    than the center. Neighbors are taken in window scan order (center
    excluded); borders replicate edge pixels. Returns uint64 codes.
    """
    check_image(img)
    if img.ndim != 2:
        raise ParamError("census_transform expects a single-channel image")
    if window % 2 == 0 or window < 3:
        raise ParamError(f"census window must be odd and >= 3, got {window}")
    if window > 13:
        raise ParamError("census window > 13 would overflow the 64-bit code")
    return _kernels.census_kernel(img, window // 2)


def compute_cost_volume(
    left_codes: np.ndarray,
    right_codes: np.ndarray,
    params: SgbmParams,
    reference: str = "left",
) -> np.ndarray:
    """Census Hamming cost volume, shape (H, W, num_disparities), uint16.

    Each entry is the Hamming distance between census codes times
    ``params.effective_cost_scale``. With the left image as reference,
    disparity ``d`` compares the left code at (u, v) with the right code at
    (u - d, v). With ``reference="right"`` the roles swap and the candidate
    sits at (u + d, v), which is how the right-view disparity map for the
    consistency check is produced. Out-of-range candidates cost
    ``params.large_cost`` uniformly.
    """
    if left_codes.shape != right_codes.shape:
        raise ShapeError(
            f"code rasters disagree: {left_codes.shape} vs {right_codes.shape}"
        )
    if reference not in ("left", "right"):
        raise ParamError(f"reference must be 'left' or 'right', got {reference!r}")
    if reference == "left":
        ref, other, positive = left_codes, right_codes, False
    else:
        ref, other, positive = right_codes, left_codes, True
    return _kernels.cost_volume_kernel(
        np.ascontiguousarray(ref, dtype=np.uint64),
        np.ascontiguousarray(other, dtype=np.uint64),
        params.min_disparity,
        params.num_disparities,
        params.effective_cost_scale,
        params.large_cost,
        positive,
    )


PATH_DIRECTIONS_4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
PATH_DIRECTIONS_8 = PATH_DIRECTIONS_4 + ((1, 1), (-1, -1), (1, -1), (-1, 1))


def _line_starts(width: int, height: int, dx: int, dy: int) -> tuple[np.ndarray, np.ndarray]:
    """Start pixels of every aggregation line for direction (dx, dy):
    exactly the pixels whose path predecessor falls outside the image."""
    if dy == 0:
        ys = np.arange(height, dtype=np.int64)
        xs = np.full(height, 0 if dx == 1 else width - 1, dtype=np.int64)
    elif dx == 0:
        xs = np.arange(width, dtype=np.int64)
        ys = np.full(width, 0 if dy == 1 else height - 1, dtype=np.int64)
    else:
        first_row = 0 if dy == 1 else height - 1
        side_col = 0 if dx == 1 else width - 1
        side_rows = np.arange(1, height) if dy == 1 else np.arange(height - 2, -1, -1)
        xs = np.concatenate(
            [np.arange(width, dtype=np.int64), np.full(height - 1, side_col, dtype=np.int64)]
        )
        ys = np.concatenate(
            [np.full(width, first_row, dtype=np.int64), side_rows.astype(np.int64)]
        )
    return xs, ys


def aggregate_costs(volume: np.ndarray, params: SgbmParams) -> np.ndarray:
    """Sum the per-path dynamic program over 4 or 8 directions.

    Each path carries the recurrence
    ``L(p,d) = C(p,d) + min(L(q,d), L(q,d±1)+P1, min_k L(q,k)+P2) - min_k L(q,k)``
    with ``q`` the path predecessor and ``L = C`` at the image border.
    Returns int32, shape (H, W, D).
    """
    if volume.ndim != 3:
        raise ShapeError(f"cost volume must be 3D, got shape {volume.shape}")
    cost = np.ascontiguousarray(volume, dtype=np.uint16)
    h, w, _ = cost.shape
    out = np.zeros(cost.shape, np.int32)
    p1, p2 = np.int32(params.p1), np.int32(params.p2)
    dirs = PATH_DIRECTIONS_8 if params.num_paths == 8 else PATH_DIRECTIONS_4
    for dx, dy in dirs:
        xs, ys = _line_starts(w, h, dx, dy)
        _kernels.aggregate_lines(cost, out, p1, p2, xs, ys, dx, dy)
    return out


def select_disparity(aggregated: np.ndarray, params: SgbmParams) -> np.ndarray:
    """Winner-take-all disparity with uniqueness rejection and subpixel fit.

    The smallest disparity wins exact argmin ties. A pixel is invalidated
    when any disparity farther than one step from the winner has cost below
    ``best * (1 + uniqueness_ratio/100)`` or exactly equal to the best
    (equal-cost competitors are inherently ambiguous). Surviving pixels get
    the parabola-vertex offset ``(S- - S+) / (2 (S- - 2 S0 + S+))`` when both
    neighbors exist and the curvature is positive.
    """
    if aggregated.ndim != 3:
        raise ShapeError(f"aggregated volume must be 3D, got {aggregated.shape}")
    return _kernels.select_kernel(
        np.ascontiguousarray(aggregated, dtype=np.int32),
        params.min_disparity,
        params.uniqueness_ratio,
    )


def lr_consistency_filter(
    left_disp: np.ndarray, right_disp: np.ndarray, max_diff: float
) -> np.ndarray:
    """Keep a left pixel only if the right view agrees within ``max_diff``.

    The counterpart is looked up at u - round(d); out-of-range or invalid
    counterparts invalidate the pixel.
    """
    if left_disp.shape != right_disp.shape:
        raise ShapeError(f"disparity maps disagree: {left_disp.shape} vs {right_disp.shape}")
    return _kernels.lr_check_kernel(
        np.ascontiguousarray(left_disp, dtype=np.float32),
        np.ascontiguousarray(right_disp, dtype=np.float32),
        float(max_diff),
    )


def speckle_filter(disp: np.ndarray, window: int, disp_range: float) -> np.ndarray:
    """Remove small disparity islands.

    4-connected components (neighbors connect iff both valid and within
    ``disp_range`` of each other) with fewer than ``window`` pixels are
    invalidated. Idempotent.
    """
    if window < 0:
        raise ParamError(f"speckle window must be >= 0, got {window}")
    return _kernels.speckle_kernel(
        np.ascontiguousarray(disp, dtype=np.float32), window, float(disp_range)
    )


@dataclass
class SgbmResult:
    """Disparity outputs of one stereo frame.

    ``disparity`` is the final left-view map (consistency-filtered and
    speckle-cleaned). ``left_raw`` precedes those filters. ``right_raw`` is
    the right-view map used for the consistency check (None when disabled).
    """

    disparity: np.ndarray
    left_raw: np.ndarray
    right_raw: np.ndarray | None


def run_sgbm(frame: StereoFrame, params: SgbmParams = SgbmParams()) -> SgbmResult:
    """Full matcher over one frame, returning intermediate maps as well."""
    if frame.calibration.width < params.min_disparity + params.num_disparities:
        raise ParamError(
            f"frame width {frame.calibration.width} leaves no legal correspondence "
            f"range for {params.num_disparities} disparities at offset {params.min_disparity}"
        )
    left = to_grayscale(frame.left)
    right = to_grayscale(frame.right)
    left_codes = census_transform(left, params.block_size)
    right_codes = census_transform(right, params.block_size)

    left_cost = compute_cost_volume(left_codes, right_codes, params, reference="left")
    left_raw = select_disparity(aggregate_costs(left_cost, params), params)
    del left_cost

    right_raw = None
    disp = left_raw
    if params.lr_check:
        right_cost = compute_cost_volume(left_codes, right_codes, params, reference="right")
        right_raw = select_disparity(aggregate_costs(right_cost, params), params)
        del right_cost
        disp = lr_consistency_filter(left_raw, right_raw, params.lr_max_diff)
    disp = speckle_filter(disp, params.speckle_window, params.speckle_range)
    return SgbmResult(disparity=disp, left_raw=left_raw, right_raw=right_raw)


def sgbm_full(frame: StereoFrame, params: SgbmParams = SgbmParams()) -> np.ndarray:
    """Convenience wrapper returning only the final left disparity map."""
    return run_sgbm(frame, params).disparity
