import numpy as np
import pytest
from oracles import reference_average_precision

from branchdepth.core import EmptyEvalError, ParamError, ShapeError
from branchdepth.fusion import SegmentMask
from branchdepth.metrics import (
    IOU_THRESHOLDS,
    EvalPair,
    average_precision,
    build_report,
    iou_box,
    iou_mask,
    map_50_95,
    rmse,
    rmse_by_range,
)

FRAME = (16, 16)


def rect_mask(x0, y0, x1, y1, instance_id=1, score=1.0, shape=FRAME):
    m = np.zeros(shape, bool)
    m[y0:y1, x0:x1] = True
    return SegmentMask.from_mask(instance_id, m, score=score)


def random_instances(rng, n, shape=FRAME, with_scores=True):
    out = []
    for i in range(n):
        w = int(rng.integers(1, 8))
        h = int(rng.integers(1, 8))
        x0 = int(rng.integers(0, shape[1] - w))
        y0 = int(rng.integers(0, shape[0] - h))
        score = float(rng.integers(1, 11)) / 10.0 if with_scores else 1.0
        out.append(rect_mask(x0, y0, x0 + w, y0 + h, instance_id=i + 1, score=score))
    return out


# --- IoU ---------------------------------------------------------------------

def test_iou_box_cases():
    assert iou_box((0, 0, 2, 2), (0, 0, 2, 2)) == 1.0
    assert iou_box((0, 0, 2, 2), (5, 5, 7, 7)) == 0.0
    assert iou_box((0, 0, 2, 2), (1, 0, 3, 2)) == pytest.approx(1.0 / 3.0)
    assert iou_box((1, 1, 1, 1), (1, 1, 1, 1)) == 0.0  # degenerate zero area
    with pytest.raises(ParamError):
        iou_box((2, 0, 0, 2), (0, 0, 1, 1))


def test_iou_mask_cases():
    a = rect_mask(0, 0, 5, 2).mask  # 10 px
    b = rect_mask(0, 1, 5, 3).mask  # 10 px, overlap 5
    assert iou_mask(a, a) == 1.0
    assert iou_mask(a, rect_mask(10, 10, 12, 12).mask) == 0.0
    assert iou_mask(a, b) == pytest.approx(5.0 / 15.0)
    assert iou_mask(np.zeros(FRAME, bool), np.zeros(FRAME, bool)) == 0.0
    with pytest.raises(ShapeError):
        iou_mask(a, np.zeros((4, 4), bool))


# --- AP ----------------------------------------------------------------------

def test_perfect_prediction_gives_ap_one_everywhere():
    gt = [rect_mask(2, 2, 8, 8)]
    pred = [rect_mask(2, 2, 8, 8, score=0.9)]
    pair = EvalPair(predictions=pred, ground_truth=gt)
    for t in IOU_THRESHOLDS:
        assert average_precision(pair, t, "mask") == 1.0
        assert average_precision(pair, t, "box") == 1.0
    assert map_50_95(pair, "mask") == 1.0


def test_no_predictions_gives_zero():
    pair = EvalPair(predictions=[], ground_truth=[rect_mask(1, 1, 4, 4)])
    assert average_precision(pair, 0.5, "mask") == 0.0


def test_empty_gt_conventions():
    pred_only = EvalPair(predictions=[rect_mask(0, 0, 3, 3, score=0.5)], ground_truth=[])
    neither = EvalPair(predictions=[], ground_truth=[])
    assert average_precision(pred_only, 0.5, "box") == 0.0
    assert average_precision(neither, 0.5, "box") == 1.0


def test_threshold_out_of_range():
    pair = EvalPair()
    with pytest.raises(ParamError):
        average_precision(pair, 0.3, "box")
    with pytest.raises(ParamError):
        average_precision(pair, 0.5, "blob")


def test_ap_matches_reference_on_randomized_instances():
    rng = np.random.default_rng(1234)
    for _ in range(150):
        preds = random_instances(rng, int(rng.integers(0, 6)))
        gts = random_instances(rng, int(rng.integers(0, 4)), with_scores=False)
        pair = EvalPair(predictions=preds, ground_truth=gts)
        t = IOU_THRESHOLDS[int(rng.integers(0, 10))]
        for mode in ("box", "mask"):
            got = average_precision(pair, t, mode)
            ref = reference_average_precision(preds, gts, t, mode)
            assert abs(got - ref) <= 1e-9


def test_ap_invariant_to_score_rescaling():
    rng = np.random.default_rng(5)
    preds = random_instances(rng, 5)
    gts = random_instances(rng, 3, with_scores=False)
    base = average_precision(EvalPair(preds, gts), 0.5, "mask")
    scaled = [
        SegmentMask(
            instance_id=p.instance_id,
            label=p.label,
            score=p.score * 0.37,
            mask=p.mask,
            bbox=p.bbox,
        )
        for p in preds
    ]
    assert average_precision(EvalPair(scaled, gts), 0.5, "mask") == base


def test_ap_monotone_in_threshold():
    rng = np.random.default_rng(6)
    for _ in range(20):
        preds = random_instances(rng, 4)
        gts = random_instances(rng, 3, with_scores=False)
        pair = EvalPair(preds, gts)
        aps = [average_precision(pair, t, "box") for t in IOU_THRESHOLDS]
        assert all(a >= b - 1e-12 for a, b in zip(aps, aps[1:]))


def test_map_of_partial_overlap_counts_thresholds():
    # prediction strictly inside the ground truth: 72 of 100 pixels ->
    # mask IoU exactly 0.72, which clears thresholds 0.50 .. 0.70 only
    gt = rect_mask(2, 2, 12, 12)  # 100 px
    m = np.zeros(FRAME, bool)
    m[2:10, 2:11] = True  # 72 px subset
    pred = SegmentMask.from_mask(1, m, score=0.8)
    assert iou_mask(pred.mask, gt.mask) == pytest.approx(0.72)
    pair = EvalPair(predictions=[pred], ground_truth=[gt])
    assert map_50_95(pair, "mask") == pytest.approx(0.5)


def test_map_in_unit_interval_and_constant_ap_case():
    rng = np.random.default_rng(7)
    preds = random_instances(rng, 5)
    gts = random_instances(rng, 3, with_scores=False)
    value = map_50_95(EvalPair(preds, gts), "box")
    assert 0.0 <= value <= 1.0
    perfect = EvalPair([rect_mask(1, 1, 9, 9, score=0.7)], [rect_mask(1, 1, 9, 9)])
    assert map_50_95(perfect, "box") == average_precision(perfect, 0.5, "box") == 1.0


# --- RMSE ---------------------------------------------------------------------

def test_rmse_cases():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([2, 3, 4], [1, 2, 3]) == pytest.approx(1.0)
    assert rmse([3, 4], [0, 0]) == pytest.approx(3.5355, abs=1e-4)
    with pytest.raises(EmptyEvalError):
        rmse([], [])
    with pytest.raises(ShapeError):
        rmse([1.0], [1.0, 2.0])


def test_rmse_permutation_invariant_and_zero_iff_equal():
    rng = np.random.default_rng(8)
    est = rng.uniform(0.5, 3.0, 40)
    ref = rng.uniform(0.5, 3.0, 40)
    perm = rng.permutation(40)
    assert rmse(est, ref) == pytest.approx(rmse(est[perm], ref[perm]), rel=1e-12)
    assert rmse(est, ref) > 0.0


def test_rmse_by_range_buckets():
    pairs = [(1.02, 1.0), (0.98, 1.0), (2.1, 2.0), (1.95, 2.0)]
    table = rmse_by_range(pairs)
    assert set(table) == {"1.0m", "2.0m", "all"}
    assert table["1.0m"] == pytest.approx(rmse([1.02, 0.98], [1.0, 1.0]))
    assert table["all"] == pytest.approx(rmse([p[0] for p in pairs], [p[1] for p in pairs]))


def test_build_report_shape():
    pair = EvalPair([rect_mask(1, 1, 9, 9, score=0.7)], [rect_mask(1, 1, 9, 9)])
    report = build_report([pair], depth_pairs=[(1.0, 1.0)])
    assert len(report["per_threshold_ap"]["box"]) == 10
    assert len(report["per_threshold_ap"]["mask"]) == 10
    assert report["map_box"] == 1.0 and report["map_mask"] == 1.0
    assert report["rmse_by_range"]["all"] == 0.0
