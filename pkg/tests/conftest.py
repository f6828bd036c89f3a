import numpy as np
import pytest

from branchdepth.core import CameraCalibration, disparity_to_depth
from branchdepth.synthgen import SceneSpec, render_scene


@pytest.fixture
def calib():
    return CameraCalibration(
        fx=700.0, fy=700.0, cx=320.0, cy=240.0, baseline=0.12, width=640, height=480
    )


@pytest.fixture
def small_calib():
    return CameraCalibration(
        fx=700.0, fy=700.0, cx=80.0, cy=60.0, baseline=0.12, width=160, height=120
    )


def make_uniform_scene(calib, disparity, seed=7, noise_sigma=0.0):
    """Background-only scene whose ground-truth disparity is uniform."""
    spec = SceneSpec(
        calib=calib,
        background_depth=disparity_to_depth(disparity, calib),
        texture_seed=seed,
        noise_sigma=noise_sigma,
    )
    return render_scene(spec)


def random_disparity_map(rng, h, w, invalid_frac=0.2, max_d=32.0):
    disp = rng.uniform(0, max_d, (h, w)).astype(np.float32)
    disp[rng.random((h, w)) < invalid_frac] = -1.0
    return disp
