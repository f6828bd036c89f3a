"""Localize three branches at different working distances in 3D.

Runs the whole chain: stereo matching, refinement, triangulation to metric
depth, and mask/depth fusion into per-instance statistics. The branches sit
at 1.0, 1.5, and 2.0 m, so the output also illustrates how depth noise
grows quadratically with distance.
"""

from pathlib import Path

from branchdepth import (
    BranchSpec,
    CameraCalibration,
    PreprocessConfig,
    SceneSpec,
    SgbmParams,
    StereoFrame,
    WlsParams,
    confidence_from_lr,
    disparity_map_to_depth_map,
    localize_branches,
    preprocess_image,
    render_scene,
    run_sgbm,
    to_grayscale,
    wls_refine,
)
from branchdepth.io import write_image
from branchdepth.render import depth_overlay

out_dir = Path(__file__).parent / "out" / "localization"
out_dir.mkdir(parents=True, exist_ok=True)

calib = CameraCalibration(
    fx=700.0, fy=700.0, cx=320.0, cy=240.0, baseline=0.12, width=640, height=480
)
scene = render_scene(
    SceneSpec(
        calib=calib,
        background_depth=5.0,
        branches=(
            BranchSpec(center_u=180, center_v=140, radius=13, angle_deg=15, length=220, depth=1.0),
            BranchSpec(center_u=330, center_v=260, radius=12, angle_deg=-30, length=220, depth=1.5),
            BranchSpec(center_u=450, center_v=370, radius=11, angle_deg=10, length=200, depth=2.0),
        ),
        texture_seed=7,
        noise_sigma=2.0,
    )
)

pp = PreprocessConfig()
params = SgbmParams()
left = preprocess_image(scene.frame.left, pp)
right = preprocess_image(scene.frame.right, pp)
result = run_sgbm(StereoFrame(left=left, right=right, calibration=calib), params)
conf = confidence_from_lr(result.disparity, result.right_raw, params.lr_max_diff)
refined = wls_refine(result.disparity, to_grayscale(scene.frame.left), conf, WlsParams())
depth = disparity_map_to_depth_map(refined, calib)

estimates, exclusions = localize_branches(scene.masks, depth, calib)

print(f"{'id':>3} {'true':>6} {'median':>8} {'mean':>8} {'std':>8} {'err%':>6} {'centroid (x, y, z) m'}")
for est in estimates:
    truth = scene.branch_depths[est.instance_id]
    err = abs(est.median_depth - truth) / truth * 100
    c = est.centroid
    print(
        f"{est.instance_id:>3} {truth:6.2f} {est.median_depth:8.4f} {est.mean_depth:8.4f} "
        f"{est.std_depth:8.4f} {err:6.3f} ({c.x:+.3f}, {c.y:+.3f}, {c.z:.3f})"
    )
for ex in exclusions:
    print(f"excluded instance {ex.instance_id}: {ex.reason}")

# depth spread widens with range: the std column above should increase
# monotonically from the 1.0 m branch to the 2.0 m one
write_image(out_dir / "overlay.png", depth_overlay(to_grayscale(scene.frame.left), depth, scene.masks))
print(f"depth overlay written to {out_dir / 'overlay.png'}")
