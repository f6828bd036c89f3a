"""Synthetic stereo scenes with exact ground truth.

A scene is a fronto-parallel textured background plane plus capsule-shaped
branches (oriented rectangles with rounded ends), each at its own constant
depth. The right view is synthesized by sampling each surface's texture
field shifted by that surface's exact disparity, nearer surfaces painted
last, so ground-truth disparity, masks, and per-branch depths are exact by
construction.

Textures are seeded and deliberately high-contrast (bright background,
dark branches) so census matching has structure everywhere and branch
boundaries coincide with strong guide-image edges.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .core import (
    CameraCalibration,
    ParamError,
    SceneSpecError,
    StereoFrame,
    depth_to_disparity,
)
from .fusion import SegmentMask
from .io import PathLike, save_calibration, save_disparity, write_image, write_json
from .manifest import save_manifest

# per-surface texture intensity ranges; disjoint so branch boundaries are
# strong intensity edges in the guide image
_BG_RANGE = (170.0, 255.0)
_BRANCH_RANGE = (0.0, 85.0)
_TEXTURE_SMOOTH_SIGMA = 0.8


@dataclass(frozen=True)
class BranchSpec:
    """One capsule: center (u, v) in pixels, axis angle in degrees, constant depth."""

    center_u: float
    center_v: float
    radius: float
    angle_deg: float
    length: float
    depth: float


@dataclass(frozen=True)
class SceneSpec:
    calib: CameraCalibration
    background_depth: float
    branches: tuple[BranchSpec, ...] = ()
    texture_seed: int = 0
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.background_depth <= self.calib.baseline:
            raise SceneSpecError(
                f"background depth {self.background_depth} must exceed the baseline"
            )
        for i, b in enumerate(self.branches):
            if b.depth >= self.background_depth:
                raise SceneSpecError(
                    f"branch {i} depth {b.depth} must be nearer than the "
                    f"background at {self.background_depth}"
                )
            if b.depth <= self.calib.baseline:
                raise SceneSpecError(f"branch {i} depth {b.depth} must exceed the baseline")
        if self.noise_sigma < 0:
            raise SceneSpecError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


@dataclass
class RenderedScene:
    """Frame plus every ground-truth artifact a test could want.

    ``occlusion`` marks left-view pixels with no right-view correspondence
    (off-frame or covered by a nearer surface); left-right consistency
    checks are expected to fail exactly there.
    """

    frame: StereoFrame
    gt_disparity: np.ndarray
    masks: list[SegmentMask]
    branch_depths: dict[int, float]
    occlusion: np.ndarray


def _capsule_points(
    xs: np.ndarray, ys: np.ndarray, branch: BranchSpec, shift: float = 0.0
) -> np.ndarray:
    """True where (xs, ys) lies inside the capsule, optionally shifted left."""
    theta = math.radians(branch.angle_deg)
    hx = math.cos(theta) * branch.length / 2.0
    hy = math.sin(theta) * branch.length / 2.0
    cx = branch.center_u - shift
    e0x, e0y = cx - hx, branch.center_v - hy
    ex, ey = 2.0 * hx, 2.0 * hy
    px = xs - e0x
    py = ys - e0y
    ee = ex * ex + ey * ey
    if ee > 0:
        t = np.clip((px * ex + py * ey) / ee, 0.0, 1.0)
    else:
        t = 0.0
    qx = px - t * ex
    qy = py - t * ey
    return qx * qx + qy * qy <= branch.radius * branch.radius


def _capsule_mask(width: int, height: int, branch: BranchSpec, shift: float = 0.0) -> np.ndarray:
    xs, ys = np.meshgrid(
        np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
    )
    return _capsule_points(xs, ys, branch, shift)


def _check_in_frame(branch: BranchSpec, calib: CameraCalibration, index: int) -> None:
    theta = math.radians(branch.angle_deg)
    hx = abs(math.cos(theta)) * branch.length / 2.0
    hy = abs(math.sin(theta)) * branch.length / 2.0
    r = branch.radius
    if (
        branch.center_u - hx - r < 0
        or branch.center_u + hx + r > calib.width - 1
        or branch.center_v - hy - r < 0
        or branch.center_v + hy + r > calib.height - 1
    ):
        raise SceneSpecError(f"branch {index} extends outside the {calib.width}x{calib.height} frame")


def _texture_field(rng: np.random.Generator, height: int, width: int, lo: float, hi: float) -> np.ndarray:
    field = rng.uniform(lo, hi, size=(height, width))
    return ndimage.gaussian_filter(field, sigma=_TEXTURE_SMOOTH_SIGMA, radius=1, mode="nearest")


def _sample_shifted(field: np.ndarray, shift: float, width: int) -> np.ndarray:
    """Linearly interpolate field columns at x + shift for x in [0, width)."""
    xs = np.arange(width, dtype=np.float64) + shift
    i0 = np.floor(xs).astype(np.int64)
    frac = xs - i0
    i0 = np.clip(i0, 0, field.shape[1] - 2)
    return field[:, i0] * (1.0 - frac) + field[:, i0 + 1] * frac


def render_scene(spec: SceneSpec) -> RenderedScene:
    """Render the stereo pair plus exact ground truth for one scene."""
    calib = spec.calib
    w, h = calib.width, calib.height
    for i, b in enumerate(spec.branches):
        _check_in_frame(b, calib, i)

    bg_disp = depth_to_disparity(spec.background_depth, calib)
    branch_disps = [depth_to_disparity(b.depth, calib) for b in spec.branches]
    max_disp = max([bg_disp] + branch_disps)
    pad = int(math.ceil(max_disp)) + 2

    seeds = np.random.SeedSequence(spec.texture_seed).spawn(3 + len(spec.branches))
    bg_field = _texture_field(np.random.default_rng(seeds[0]), h, w + pad, *_BG_RANGE)
    branch_fields = [
        _texture_field(np.random.default_rng(seeds[3 + i]), h, w + pad, *_BRANCH_RANGE)
        for i in range(len(spec.branches))
    ]

    # paint order: far to near, ties broken by list order (later wins)
    order = sorted(range(len(spec.branches)), key=lambda i: -spec.branches[i].depth)

    capsules = [_capsule_mask(w, h, b) for b in spec.branches]
    left = bg_field[:, :w].copy()
    gt = np.full((h, w), np.float32(bg_disp), dtype=np.float32)
    for i in order:
        left[capsules[i]] = branch_fields[i][:, :w][capsules[i]]
        gt[capsules[i]] = np.float32(branch_disps[i])

    right = _sample_shifted(bg_field, bg_disp, w)
    for i in order:
        mask_r = _capsule_mask(w, h, spec.branches[i], shift=branch_disps[i])
        right[mask_r] = _sample_shifted(branch_fields[i], branch_disps[i], w)[mask_r]

    # visible instance masks: capsule minus everything painted over it
    masks: list[SegmentMask] = []
    depths: dict[int, float] = {}
    for pos, i in enumerate(order):
        visible = capsules[i].copy()
        for j in order[pos + 1 :]:
            visible &= ~capsules[j]
        instance_id = i + 1
        masks.append(SegmentMask.from_mask(instance_id, visible, score=1.0, label="branch"))
        depths[instance_id] = spec.branches[i].depth
    masks.sort(key=lambda m: m.instance_id)

    # left-view occlusion: correspondence off-frame or behind a nearer surface
    us = np.arange(w, dtype=np.float64)[None, :].repeat(h, axis=0)
    vs = np.arange(h, dtype=np.float64)[:, None].repeat(w, axis=1)
    xr = us - gt.astype(np.float64)
    occluded = xr < 0
    for i, b in enumerate(spec.branches):
        nearer = gt.astype(np.float64) < branch_disps[i] - 1e-9
        occluded |= nearer & _capsule_points(xr, vs, b, shift=branch_disps[i])

    if spec.noise_sigma > 0:
        left = left + np.random.default_rng(seeds[1]).normal(0.0, spec.noise_sigma, left.shape)
        right = right + np.random.default_rng(seeds[2]).normal(0.0, spec.noise_sigma, right.shape)
    left_u8 = np.clip(np.rint(left), 0, 255).astype(np.uint8)
    right_u8 = np.clip(np.rint(right), 0, 255).astype(np.uint8)

    frame = StereoFrame(left=left_u8, right=right_u8, calibration=calib)
    return RenderedScene(
        frame=frame,
        gt_disparity=gt,
        masks=masks,
        branch_depths=depths,
        occlusion=occluded,
    )


def range_protocol(
    calib: CameraCalibration,
    depths: list[float],
    base_seed: int = 101,
    noise_sigma: float = 2.0,
) -> list[SceneSpec]:
    """One centered-branch scene per requested working distance.

    The seed schedule is fixed by ``base_seed + index`` so the whole
    protocol is reproducible; the background sits at 2.5x the branch depth.
    """
    if not depths:
        raise ParamError("range protocol needs at least one depth")
    size = min(calib.width, calib.height)
    branch_template = dict(
        center_u=calib.width / 2.0,
        center_v=calib.height / 2.0,
        radius=max(6.0, round(size / 34.0)),
        angle_deg=25.0,
        length=round(0.6 * size),
    )
    specs = []
    for i, depth in enumerate(depths):
        specs.append(
            SceneSpec(
                calib=calib,
                background_depth=2.5 * depth,
                branches=(BranchSpec(depth=depth, **branch_template),),
                texture_seed=base_seed + i,
                noise_sigma=noise_sigma,
            )
        )
    return specs


def scene_spec_to_dict(spec: SceneSpec) -> dict:
    return {
        "calibration": {
            "fx": spec.calib.fx,
            "fy": spec.calib.fy,
            "cx": spec.calib.cx,
            "cy": spec.calib.cy,
            "baseline_m": spec.calib.baseline,
            "width": spec.calib.width,
            "height": spec.calib.height,
            "rectified": True,
        },
        "background_depth_m": spec.background_depth,
        "texture_seed": spec.texture_seed,
        "noise_sigma": spec.noise_sigma,
        "branches": [
            {
                "center": [b.center_u, b.center_v],
                "radius": b.radius,
                "angle_deg": b.angle_deg,
                "length": b.length,
                "depth_m": b.depth,
            }
            for b in spec.branches
        ],
    }


def scene_spec_from_dict(payload: dict) -> SceneSpec:
    calib = payload["calibration"]
    return SceneSpec(
        calib=CameraCalibration(
            fx=float(calib["fx"]),
            fy=float(calib["fy"]),
            cx=float(calib["cx"]),
            cy=float(calib["cy"]),
            baseline=float(calib["baseline_m"]),
            width=int(calib["width"]),
            height=int(calib["height"]),
        ),
        background_depth=float(payload["background_depth_m"]),
        texture_seed=int(payload["texture_seed"]),
        noise_sigma=float(payload["noise_sigma"]),
        branches=tuple(
            BranchSpec(
                center_u=float(b["center"][0]),
                center_v=float(b["center"][1]),
                radius=float(b["radius"]),
                angle_deg=float(b["angle_deg"]),
                length=float(b["length"]),
                depth=float(b["depth_m"]),
            )
            for b in payload["branches"]
        ),
    )


def load_scene_spec(path: PathLike) -> SceneSpec:
    return scene_spec_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_scene(directory: PathLike, spec: SceneSpec, rendered: RenderedScene | None = None) -> Path:
    """Write a full scene directory: images, ground truth, masks, spec.

    Layout: left.png, right.png, gt_disp.pfm, gt_occlusion.png,
    calibration.json, scene.json, manifest.json + masks/.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if rendered is None:
        rendered = render_scene(spec)
    write_image(directory / "left.png", rendered.frame.left)
    write_image(directory / "right.png", rendered.frame.right)
    save_disparity(directory / "gt_disp.pfm", rendered.gt_disparity)
    write_image(directory / "gt_occlusion.png", rendered.occlusion.astype(np.uint8) * 255)
    save_calibration(directory / "calibration.json", spec.calib)
    write_json(directory / "scene.json", scene_spec_to_dict(spec))
    save_manifest(
        directory,
        frame_id=directory.name,
        instances=rendered.masks,
        width=spec.calib.width,
        height=spec.calib.height,
    )
    depths_payload = {str(k): v for k, v in rendered.branch_depths.items()}
    write_json(directory / "gt_depths.json", depths_payload)
    return directory
