"""Evaluation harness: IoU, COCO-style average precision, depth RMSE.

Average precision follows the dominant detection-toolkit convention:
predictions ranked by descending score, greedy matching to the unmatched
ground truth with the highest IoU at or above the threshold, and the
101-point interpolated precision-recall average. The headline number is
the mean AP over the ten IoU thresholds 0.50, 0.55, ..., 0.95.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EmptyEvalError, ParamError, ShapeError
from .fusion import SegmentMask

IOU_THRESHOLDS: tuple[float, ...] = tuple((50 + 5 * i) / 100.0 for i in range(10))
_RECALL_GRID = np.linspace(0.0, 1.0, 101)


@dataclass
class EvalPair:
    """Predictions vs ground truth for one frame (GT scores are ignored)."""

    predictions: list[SegmentMask] = field(default_factory=list)
    ground_truth: list[SegmentMask] = field(default_factory=list)


def iou_box(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    """Intersection over union of two half-open boxes (x_min, y_min, x_max, y_max).

    Degenerate zero-area inputs yield 0.
    """
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    if ax1 < ax0 or ay1 < ay0 or bx1 < bx0 or by1 < by0:
        raise ParamError(f"malformed box: {a} vs {b}")
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    inter = max(0.0, iw) * max(0.0, ih)
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    if union <= 0:
        return 0.0
    return float(inter / union)


def iou_mask(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two binary rasters; 0 when the union is empty."""
    if a.shape != b.shape:
        raise ShapeError(f"mask shapes disagree: {a.shape} vs {b.shape}")
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 0.0
    inter = int(np.count_nonzero(a & b))
    return inter / union


def _instance_iou(pred: SegmentMask, gt: SegmentMask, mode: str) -> float:
    if mode == "box":
        return iou_box(pred.bbox, gt.bbox)
    return iou_mask(pred.mask, gt.mask)


def _ranked_tp_flags(pairs: list[EvalPair], iou_threshold: float, mode: str) -> tuple[list[bool], int, int]:
    """Greedy matching over the pooled, score-ranked detections.

    Ranking ties break on instance_id, then frame index. Matching picks the
    unmatched ground truth (same frame) of highest IoU >= threshold; IoU
    ties pick the earliest in the ground-truth list. Returns the ranked
    true-positive flags, total ground truths, and total predictions.
    """
    dets: list[tuple[float, int, int, SegmentMask]] = []
    for fi, pair in enumerate(pairs):
        for p in pair.predictions:
            dets.append((p.score, p.instance_id, fi, p))
    dets.sort(key=lambda t: (-t[0], t[1], t[2]))
    matched = [[False] * len(pair.ground_truth) for pair in pairs]
    flags: list[bool] = []
    for _, _, fi, pred in dets:
        gts = pairs[fi].ground_truth
        best_iou = 0.0
        best_j = -1
        for j, gt in enumerate(gts):
            if matched[fi][j]:
                continue
            v = _instance_iou(pred, gt, mode)
            if v >= iou_threshold and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            matched[fi][best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    total_gt = sum(len(pair.ground_truth) for pair in pairs)
    return flags, total_gt, len(dets)


def _ap_from_flags(flags: list[bool], total_gt: int, total_pred: int) -> float:
    if total_gt == 0:
        return 0.0 if total_pred > 0 else 1.0
    if total_pred == 0:
        return 0.0
    tp = np.cumsum(np.asarray(flags, dtype=np.float64))
    precision = tp / np.arange(1, len(flags) + 1)
    recall = tp / total_gt
    # max precision available at recall >= r, via suffix maximum
    suffix_max = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, _RECALL_GRID, side="left")
    interp = np.where(idx < len(flags), suffix_max[np.minimum(idx, len(flags) - 1)], 0.0)
    return float(interp.mean())


def average_precision_multi(pairs: list[EvalPair], iou_threshold: float, mode: str) -> float:
    """AP over a set of frames pooled into one ranking (matching stays per-frame)."""
    if mode not in ("box", "mask"):
        raise ParamError(f"mode must be 'box' or 'mask', got {mode!r}")
    if not (0.5 - 1e-9 <= iou_threshold <= 0.95 + 1e-9):
        raise ParamError(f"iou_threshold must lie in [0.5, 0.95], got {iou_threshold}")
    flags, total_gt, total_pred = _ranked_tp_flags(pairs, iou_threshold, mode)
    return _ap_from_flags(flags, total_gt, total_pred)


def average_precision(pair: EvalPair, iou_threshold: float, mode: str) -> float:
    """AP at one IoU threshold for a single frame."""
    return average_precision_multi([pair], iou_threshold, mode)


def map_50_95_multi(pairs: list[EvalPair], mode: str) -> float:
    """Mean AP over the ten thresholds 0.50 ... 0.95."""
    return float(
        np.mean([average_precision_multi(pairs, t, mode) for t in IOU_THRESHOLDS])
    )


def map_50_95(pair: EvalPair, mode: str) -> float:
    return map_50_95_multi([pair], mode)


def rmse(estimated, ground_truth) -> float:
    """Root mean square error between paired estimates and references."""
    est = np.asarray(estimated, dtype=np.float64).ravel()
    ref = np.asarray(ground_truth, dtype=np.float64).ravel()
    if est.size == 0:
        raise EmptyEvalError("rmse needs at least one pair")
    if est.shape != ref.shape:
        raise ShapeError(f"pair counts disagree: {est.size} vs {ref.size}")
    return float(np.sqrt(np.mean((est - ref) ** 2)))


def depth_range_bucket(ground_truth_m: float) -> str:
    """Bucket label for range-resolved RMSE reporting: nearest 0.5 m."""
    return f"{round(ground_truth_m * 2) / 2:.1f}m"


def rmse_by_range(pairs: list[tuple[float, float]]) -> dict[str, float]:
    """RMSE per ground-truth range bucket plus an 'all' aggregate."""
    if not pairs:
        raise EmptyEvalError("rmse needs at least one pair")
    buckets: dict[str, list[tuple[float, float]]] = {}
    for est, ref in pairs:
        buckets.setdefault(depth_range_bucket(ref), []).append((est, ref))
    out = {
        key: rmse([p[0] for p in vals], [p[1] for p in vals])
        for key, vals in sorted(buckets.items())
    }
    out["all"] = rmse([p[0] for p in pairs], [p[1] for p in pairs])
    return out


def build_report(
    pairs: list[EvalPair], depth_pairs: list[tuple[float, float]] | None = None
) -> dict:
    """Full evaluation report: per-threshold APs, headline mAPs, range RMSE."""
    per_threshold = {
        mode: {f"{t:.2f}": average_precision_multi(pairs, t, mode) for t in IOU_THRESHOLDS}
        for mode in ("box", "mask")
    }
    report = {
        "frames": len(pairs),
        "per_threshold_ap": per_threshold,
        "map_box": float(np.mean(list(per_threshold["box"].values()))),
        "map_mask": float(np.mean(list(per_threshold["mask"].values()))),
    }
    if depth_pairs is not None:
        report["rmse_by_range"] = rmse_by_range(depth_pairs)
    return report


def report_to_csv(report: dict) -> str:
    """Flatten a report into a two-column CSV table."""
    lines = ["metric,value"]
    lines.append(f"frames,{report['frames']}")
    for mode in ("box", "mask"):
        for key, value in report["per_threshold_ap"][mode].items():
            lines.append(f"ap_{mode}_{key},{value:.6f}")
    lines.append(f"map_box,{report['map_box']:.6f}")
    lines.append(f"map_mask,{report['map_mask']:.6f}")
    for key, value in report.get("rmse_by_range", {}).items():
        lines.append(f"rmse_{key},{value:.6f}")
    return "\n".join(lines) + "\n"
