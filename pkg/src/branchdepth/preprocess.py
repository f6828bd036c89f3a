"""Contrast enhancement and noise reduction applied before stereo matching.

The fixed stage order is grayscale -> histogram equalization -> Gaussian
denoise. Equalization is global (deterministic, parameter-free); denoising
is a truncated, normalized Gaussian with edge replication at the borders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import FormatError, ParamError, check_image

# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class PreprocessConfig:
    denoise_radius: int = 2
    denoise_sigma: float = 1.0
    equalize: bool = True

    def __post_init__(self) -> None:
        if self.denoise_radius < 0:
            raise ParamError(f"denoise_radius must be >= 0, got {self.denoise_radius}")
        if self.denoise_radius > 0 and self.denoise_sigma <= 0:
            raise ParamError(
                f"denoise_sigma must be > 0 when radius > 0, got {self.denoise_sigma}"
            )


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Collapse RGB to luma (0.299 R + 0.587 G + 0.114 B); identity on grayscale."""
    check_image(img)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    luma = img.astype(np.float64) @ _LUMA
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def equalize_contrast(img: np.ndarray) -> np.ndarray:
    """Global histogram equalization.

    The remapping is a monotone non-decreasing lookup table built from the
    cumulative histogram, so intensity ordering is preserved. A constant
    image (single occupied bin) passes through unchanged.
    """
    check_image(img)
    if img.ndim != 2:
        raise FormatError("equalize_contrast expects a single-channel image")
    hist = np.bincount(img.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    cdf_min = int(cdf[np.flatnonzero(hist)[0]])
    n = img.size
    if n == cdf_min:
        return img.copy()
    lut = np.rint((cdf - cdf_min) / (n - cdf_min) * 255.0)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return lut[img]


def denoise(img: np.ndarray, cfg: PreprocessConfig) -> np.ndarray:
    """Gaussian blur with a truncated normalized kernel; radius 0 is a no-op.

    Borders are handled by edge replication, which keeps the kernel weight
    sum at 1 and the mean intensity stable.
    """
    check_image(img)
    if img.ndim != 2:
        raise FormatError("denoise expects a single-channel image")
    if cfg.denoise_radius == 0:
        return img.copy()
    blurred = ndimage.gaussian_filter(
        img.astype(np.float64),
        sigma=cfg.denoise_sigma,
        radius=cfg.denoise_radius,
        mode="nearest",
    )
    return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)


def preprocess_image(img: np.ndarray, cfg: PreprocessConfig) -> np.ndarray:
    """Full preprocessing chain used on both stereo views."""
    gray = to_grayscale(img)
    if cfg.equalize:
        gray = equalize_contrast(gray)
    return denoise(gray, cfg)
