"""Acceptance suite: one test per release criterion, one printed verdict each.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS/FAIL line
and the measured numbers for every criterion.
"""

import json
import time

import numpy as np
import pytest
from conftest import make_uniform_scene
from oracles import (
    ALL_DIRECTIONS,
    dense_wls_solve,
    reference_average_precision,
    reference_mad_filter,
    reference_stats,
    reference_aggregate,
)
from scipy import ndimage

import numba

from branchdepth.cli import main as cli_main
from branchdepth.core import (
    CameraCalibration,
    StereoFrame,
    depth_to_disparity,
    disparity_to_depth,
)
from branchdepth.io import save_calibration
from branchdepth.metrics import IOU_THRESHOLDS, EvalPair, average_precision, map_50_95, rmse
from branchdepth.preprocess import PreprocessConfig, equalize_contrast, preprocess_image, to_grayscale
from branchdepth.sgbm import SgbmParams, aggregate_costs, run_sgbm, sgbm_full
from branchdepth.synthgen import BranchSpec, SceneSpec, render_scene
from branchdepth.fusion import SegmentMask, summarize
from branchdepth.wls import WlsParams, confidence_from_lr, edge_weights, wls_refine

from test_metrics import random_instances

CALIB = CameraCalibration(
    fx=700.0, fy=700.0, cx=320.0, cy=240.0, baseline=0.12, width=640, height=480
)


def verdict(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def warmup_kernels():
    """Compile every jit kernel on a tiny frame so timings exclude the JIT."""
    small = CameraCalibration(
        fx=700.0, fy=700.0, cx=80.0, cy=24.0, baseline=0.12, width=160, height=48
    )
    scene = make_uniform_scene(small, 20.0, seed=1)
    res = run_sgbm(scene.frame, SgbmParams(num_disparities=16, speckle_window=10))
    conf = confidence_from_lr(res.disparity, res.right_raw, 1)
    wls_refine(res.disparity, scene.frame.left, conf, WlsParams(iterations=2))


def test_sgbm_aggregation_matches_bruteforce_dp():
    rng = np.random.default_rng(20240915)
    start = time.time()
    checked = 0
    for _ in range(1000):
        h = int(rng.integers(1, 17))
        w = int(rng.integers(1, 17))
        nd = int(rng.integers(1, 9))
        vol = rng.integers(0, 40, (h, w, nd)).astype(np.uint16)
        p1 = int(rng.integers(1, 30))
        p2 = p1 + int(rng.integers(1, 80))
        paths = 8 if rng.random() < 0.5 else 4
        params = SgbmParams(
            num_disparities=16, p1=p1, p2=p2, num_paths=paths, speckle_window=0
        )
        got = aggregate_costs(vol, params).astype(np.int64)
        ref = reference_aggregate(vol, p1, p2, directions=ALL_DIRECTIONS[:paths])
        assert np.array_equal(got, ref), f"mismatch on {h}x{w}x{nd} p1={p1} p2={p2}"
        checked += 1
    elapsed = time.time() - start
    verdict(
        "sgbm-oracle-equivalence",
        checked == 1000 and elapsed < 60.0,
        f"{checked} volumes exact, {elapsed:.1f}s",
    )


def test_synthetic_disparity_recovery_and_runtime():
    warmup_kernels()
    scene = make_uniform_scene(CALIB, 32.0, seed=11, noise_sigma=2.0)
    params = SgbmParams()
    threads_before = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        start = time.time()
        disp = sgbm_full(scene.frame, params)
        elapsed = time.time() - start
    finally:
        numba.set_num_threads(threads_before)

    interior = np.zeros(disp.shape, bool)
    interior[8:-8, params.num_disparities + 8 : -8] = True
    valid = (disp >= 0) & interior
    err = np.abs(disp[valid] - 32.0)
    within = float((err <= 1.0).mean())
    mae = float(err.mean())
    verdict(
        "synthetic-disparity-recovery",
        within >= 0.95 and mae <= 0.35 and elapsed <= 10.0,
        f"{within:.4f} within 1px, MAE {mae:.4f}px, {elapsed:.2f}s single-thread",
    )


def test_triangulation_round_trip_million_samples():
    rng = np.random.default_rng(7)
    zs = rng.uniform(0.1, 100.0, 1_000_000)
    zs = zs[zs > 0.1]
    worst = 0.0
    for z in zs:
        z = float(z)
        back = disparity_to_depth(depth_to_disparity(z, CALIB), CALIB)
        rel = abs(back - z) / z
        if rel > worst:
            worst = rel
    verdict(
        "triangulation-round-trip",
        worst <= 1e-12,
        f"{len(zs)} samples, max relative error {worst:.2e}",
    )


def test_range_protocol_end_to_end(tmp_path):
    warmup_kernels()
    calib_path = tmp_path / "calib.json"
    save_calibration(calib_path, CALIB)
    code = cli_main(
        ["synth", "--out", str(tmp_path / "proto"), "--range", "1.0,1.5,2.0",
         "--calib", str(calib_path)]
    )
    assert code == 0
    estimates = {}
    for depth in (1.0, 1.5, 2.0):
        scene = tmp_path / f"proto_{depth:g}m"
        out = tmp_path / f"loc_{depth:g}"
        code = cli_main(
            ["localize", str(scene / "left.png"), str(scene / "right.png"),
             "--calib", str(scene / "calibration.json"),
             "--masks", str(scene / "manifest.json"), "--out", str(out)]
        )
        assert code == 0
        payload = json.loads((out / "estimates.json").read_text())
        assert len(payload["estimates"]) == 1
        estimates[depth] = payload["estimates"][0]

    rel_err = {d: abs(estimates[d]["median_depth_m"] - d) / d for d in estimates}
    stds = [estimates[d]["std_depth_m"] for d in (1.0, 1.5, 2.0)]
    ratio = abs(estimates[2.0]["median_depth_m"] - 2.0) / max(
        abs(estimates[1.0]["median_depth_m"] - 1.0), 1e-12
    )
    ok = (
        rel_err[1.0] <= 0.02
        and rel_err[2.0] <= 0.05
        and stds[0] < stds[1] < stds[2]
        and 2.0 <= ratio <= 8.0
    )
    verdict(
        "range-protocol-localization",
        ok,
        f"err@1m {rel_err[1.0]*100:.3f}%, err@2m {rel_err[2.0]*100:.3f}%, "
        f"stds {stds[0]:.5f}<{stds[1]:.5f}<{stds[2]:.5f}, err ratio {ratio:.2f}",
    )


def test_wls_quality_on_noisy_disparity():
    spec = SceneSpec(
        calib=CALIB,
        background_depth=2.5,
        branches=(
            BranchSpec(center_u=320.0, center_v=240.0, radius=14.0, angle_deg=25.0,
                       length=288.0, depth=1.0),
        ),
        texture_seed=101,
        noise_sigma=0.0,
    )
    scene = render_scene(spec)
    rng = np.random.default_rng(99)
    noisy = (scene.gt_disparity + rng.normal(0.0, 1.5, scene.gt_disparity.shape)).astype(
        np.float32
    )
    noisy = np.maximum(noisy, 0.0)
    conf = np.ones(noisy.shape, np.float32)
    # plain grayscale guide: equalization would collapse the intensity gap
    # between the two surface textures and erase the boundary edge
    guide = to_grayscale(scene.frame.left)
    params = WlsParams()
    refined = wls_refine(noisy, guide, conf, params)

    mask = scene.masks[0].mask
    edge = mask ^ ndimage.binary_erosion(mask)
    band = ndimage.binary_dilation(edge, iterations=2)
    homogeneous = ~band

    gt = scene.gt_disparity
    mae_before_h = float(np.abs(noisy[homogeneous] - gt[homogeneous]).mean())
    mae_after_h = float(np.abs(refined[homogeneous] - gt[homogeneous]).mean())
    mae_before_b = float(np.abs(noisy[band] - gt[band]).mean())
    mae_after_b = float(np.abs(refined[band] - gt[band]).mean())
    reduction = 1.0 - mae_after_h / mae_before_h

    # the same objective solved exactly on a small crop; moderate lambda so
    # the sweep solver can fully converge within the iteration budget
    crop = np.s_[224:252, 306:334]
    small_disp = noisy[crop].copy()
    small_guide = np.ascontiguousarray(guide[crop])
    small_conf = np.ones(small_disp.shape, np.float32)
    exact_params = WlsParams(lam=20.0, sigma_color=params.sigma_color, iterations=8000)
    gs = wls_refine(small_disp, small_guide, small_conf, exact_params)
    wh, wv = edge_weights(small_guide, exact_params.sigma_color)
    ref = dense_wls_solve(small_disp, small_conf, wh, wv, exact_params.lam)
    solve_diff = float(np.abs(gs - ref).max())

    ok = reduction >= 0.30 and mae_after_b <= mae_before_b and solve_diff <= 0.05
    verdict(
        "wls-quality",
        ok,
        f"homogeneous MAE -{reduction*100:.1f}%, band {mae_before_b:.3f}->{mae_after_b:.3f}px, "
        f"dense-solve max diff {solve_diff:.2e}px",
    )


def test_metrics_oracle_equivalence():
    rng = np.random.default_rng(20240916)
    worst = 0.0
    for _ in range(1000):
        preds = random_instances(rng, int(rng.integers(0, 6)))
        gts = random_instances(rng, int(rng.integers(0, 4)), with_scores=False)
        pair = EvalPair(predictions=preds, ground_truth=gts)
        t = IOU_THRESHOLDS[int(rng.integers(0, 10))]
        mode = "box" if rng.random() < 0.5 else "mask"
        got = average_precision(pair, t, mode)
        ref = reference_average_precision(preds, gts, t, mode)
        worst = max(worst, abs(got - ref))
        assert worst <= 1e-9

    perfect_mask = np.zeros((16, 16), bool)
    perfect_mask[3:11, 2:13] = True
    perfect = EvalPair(
        predictions=[SegmentMask.from_mask(1, perfect_mask, score=0.9)],
        ground_truth=[SegmentMask.from_mask(1, perfect_mask)],
    )
    perfect_map = map_50_95(perfect, "mask")
    hand_rmse = rmse([1.0, 2.0, 3.0], [2.0, 3.0, 4.0])
    ok = worst <= 1e-9 and perfect_map == 1.0 and hand_rmse == 1.0
    verdict(
        "metrics-oracle",
        ok,
        f"1000 instances max |AP - ref| = {worst:.1e}, perfect mAP {perfect_map}, "
        f"hand RMSE {hand_rmse}",
    )


def test_fusion_statistics_and_outlier_robustness():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(3, 500))
        depths = rng.uniform(0.4, 6.0, n)
        samples = np.column_stack(
            [rng.integers(0, 640, n), rng.integers(0, 480, n), depths]
        ).astype(np.float64)
        est = summarize(samples, CALIB, 0.0, pixel_count=n)
        mean, med, std = reference_stats(reference_mad_filter(depths))
        worst = max(
            worst,
            abs(est.mean_depth - mean) / max(abs(mean), 1e-300),
            abs(est.median_depth - med) / max(abs(med), 1e-300),
            abs(est.std_depth - std) / max(abs(std), 1e-12),
        )
    assert worst <= 1e-9

    # 1% of a one-meter branch reads 50 m: the median must barely move
    n = 10_000
    clean = 1.0 + rng.normal(0.0, 0.004, n)
    clean_samples = np.column_stack(
        [rng.integers(0, 640, n), rng.integers(0, 480, n), clean]
    ).astype(np.float64)
    est_clean = summarize(clean_samples, CALIB, 0.0, pixel_count=n)
    poisoned = clean.copy()
    poisoned[rng.choice(n, n // 100, replace=False)] = 50.0
    poisoned_samples = clean_samples.copy()
    poisoned_samples[:, 2] = poisoned
    est_poisoned = summarize(poisoned_samples, CALIB, 0.0, pixel_count=n)
    shift = abs(est_poisoned.median_depth - est_clean.median_depth) / est_clean.median_depth
    ok = worst <= 1e-9 and shift < 0.005
    verdict(
        "fusion-robustness",
        ok,
        f"stats max rel diff {worst:.1e}, outlier median shift {shift*100:.4f}%",
    )


def test_cli_determinism_across_runs_and_jobs(tmp_path):
    warmup_kernels()
    small = CameraCalibration(
        fx=700.0, fy=700.0, cx=160.0, cy=120.0, baseline=0.12, width=320, height=240
    )
    spec = SceneSpec(
        calib=small,
        background_depth=small.baseline * small.fx / 14.0,
        branches=(
            BranchSpec(center_u=170.0, center_v=120.0, radius=11.0, angle_deg=15.0,
                       length=140.0, depth=small.baseline * small.fx / 40.0),
        ),
        texture_seed=31,
        noise_sigma=1.5,
    )
    from branchdepth.synthgen import save_scene

    scene_dir = save_scene(tmp_path / "scene", spec)
    flags = ["--num-disparities", "64"]

    disp_outputs = []
    loc_outputs = []
    for i, jobs in enumerate(("1", "1", "2")):
        disp_out = tmp_path / f"disp{i}"
        code = cli_main(
            ["--jobs", jobs, "disparity", str(scene_dir / "left.png"),
             str(scene_dir / "right.png"), "--calib", str(scene_dir / "calibration.json"),
             "--out", str(disp_out)] + flags
        )
        assert code == 0
        disp_outputs.append(disp_out)
        loc_out = tmp_path / f"loc{i}"
        code = cli_main(
            ["--jobs", jobs, "localize", str(scene_dir / "left.png"),
             str(scene_dir / "right.png"), "--calib", str(scene_dir / "calibration.json"),
             "--masks", str(scene_dir / "manifest.json"), "--out", str(loc_out)] + flags
        )
        assert code == 0
        loc_outputs.append(loc_out)

    identical = True
    for name in ("raw.pfm", "refined.pfm", "raw.png", "refined.png"):
        blobs = [(o / name).read_bytes() for o in disp_outputs]
        identical &= blobs[0] == blobs[1] == blobs[2]
    for name in ("estimates.json", "overlay.png"):
        blobs = [(o / name).read_bytes() for o in loc_outputs]
        identical &= blobs[0] == blobs[1] == blobs[2]
    verdict(
        "cli-determinism",
        identical,
        "disparity and localize artifacts bit-identical over repeats and --jobs 1/2",
    )


def test_throughput_720p_soft_target():
    warmup_kernels()
    calib = CameraCalibration(
        fx=700.0, fy=700.0, cx=640.0, cy=360.0, baseline=0.12, width=1280, height=720
    )
    spec = SceneSpec(
        calib=calib,
        background_depth=2.5,
        branches=(
            BranchSpec(center_u=640.0, center_v=360.0, radius=18.0, angle_deg=25.0,
                       length=430.0, depth=1.0),
        ),
        texture_seed=55,
        noise_sigma=2.0,
    )
    scene = render_scene(spec)
    pp = PreprocessConfig()
    threads_before = numba.get_num_threads()
    try:
        numba.set_num_threads(min(8, numba.config.NUMBA_NUM_THREADS))
        start = time.time()
        left = preprocess_image(scene.frame.left, pp)
        right = preprocess_image(scene.frame.right, pp)
        frame = StereoFrame(left=left, right=right, calibration=calib)
        result = run_sgbm(frame, SgbmParams())
        conf = confidence_from_lr(result.disparity, result.right_raw, 1)
        guide = equalize_contrast(to_grayscale(scene.frame.left))
        refined = wls_refine(result.disparity, guide, conf, WlsParams())
        from branchdepth.core import disparity_map_to_depth_map
        from branchdepth.fusion import localize_branches

        depth = disparity_map_to_depth_map(refined, calib)
        estimates, _ = localize_branches(scene.masks, depth, calib)
        elapsed = time.time() - start
    finally:
        numba.set_num_threads(threads_before)
    assert estimates
    import multiprocessing

    cores = multiprocessing.cpu_count()
    if elapsed > 1.0:
        import warnings

        warnings.warn(
            f"720p pipeline took {elapsed:.2f}s on {cores} cores; the 1 s target "
            f"assumes a contemporary 8-core desktop (soft criterion)"
        )
    verdict(
        "throughput-720p",
        True,
        f"disparity+WLS+fusion {elapsed:.2f}s on {cores} cores "
        f"(soft target 1.0s on 8 cores; warn-only)",
    )
