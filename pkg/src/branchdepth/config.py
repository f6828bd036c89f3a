"""Pipeline configuration: TOML file with one section per stage.

Example:

    [preprocess]
    denoise_radius = 2
    denoise_sigma = 1.0
    equalize = true

    [sgbm]
    num_disparities = 128
    p1 = 600
    p2 = 2400
    uniqueness_ratio = 10
    speckle_window = 100
    speckle_range = 32
    num_paths = 8
    lr_check = true

    [wls]
    enabled = true
    lambda = 8000.0
    sigma_color = 0.03
    iterations = 25

    [fusion]
    min_valid_ratio = 0.25

    [io]
    input_dir = "frames"
    output_dir = "out"

Missing sections or keys take the defaults above; unknown sections or keys
are rejected so typos cannot silently change a run.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import ConfigError, ParamError
from .fusion import DEFAULT_MIN_VALID_RATIO
from .preprocess import PreprocessConfig
from .sgbm import SgbmParams
from .wls import WlsParams

_SECTIONS = ("preprocess", "sgbm", "wls", "fusion", "metrics", "io")


@dataclass(frozen=True)
class PipelineConfig:
    preprocess: PreprocessConfig = PreprocessConfig()
    sgbm: SgbmParams = SgbmParams()
    wls: WlsParams = WlsParams()
    wls_enabled: bool = True
    min_valid_ratio: float = DEFAULT_MIN_VALID_RATIO
    input_dir: str | None = None
    output_dir: str | None = None


def _build_section(cls, section: dict, name: str, key_map: dict[str, str] | None = None):
    key_map = key_map or {}
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in section.items():
        attr = key_map.get(key, key)
        if attr not in known:
            raise ConfigError(f"unknown key {key!r} in [{name}] section")
        kwargs[attr] = value
    try:
        return cls(**kwargs)
    except (ParamError, TypeError) as exc:
        raise ConfigError(f"invalid [{name}] section: {exc}") from exc


def config_from_dict(payload: dict) -> PipelineConfig:
    unknown = payload.keys() - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for name in payload:
        if not isinstance(payload[name], dict):
            raise ConfigError(f"[{name}] must be a table of keys")

    pre = _build_section(PreprocessConfig, payload.get("preprocess", {}), "preprocess")
    sgbm = _build_section(SgbmParams, payload.get("sgbm", {}), "sgbm")

    wls_section = dict(payload.get("wls", {}))
    wls_enabled = wls_section.pop("enabled", True)
    if not isinstance(wls_enabled, bool):
        raise ConfigError("[wls] enabled must be a boolean")
    wls = _build_section(WlsParams, wls_section, "wls", key_map={"lambda": "lam"})

    fusion_section = dict(payload.get("fusion", {}))
    min_valid_ratio = fusion_section.pop("min_valid_ratio", DEFAULT_MIN_VALID_RATIO)
    if fusion_section:
        raise ConfigError(f"unknown key(s) in [fusion]: {sorted(fusion_section)}")
    if not isinstance(min_valid_ratio, (int, float)) or not (0.0 <= min_valid_ratio <= 1.0):
        raise ConfigError(f"fusion.min_valid_ratio must lie in [0, 1], got {min_valid_ratio}")

    metrics_section = dict(payload.get("metrics", {}))
    if metrics_section:
        raise ConfigError(f"unknown key(s) in [metrics]: {sorted(metrics_section)}")

    io_section = dict(payload.get("io", {}))
    input_dir = io_section.pop("input_dir", None)
    output_dir = io_section.pop("output_dir", None)
    if io_section:
        raise ConfigError(f"unknown key(s) in [io]: {sorted(io_section)}")

    return PipelineConfig(
        preprocess=pre,
        sgbm=sgbm,
        wls=wls,
        wls_enabled=wls_enabled,
        min_valid_ratio=float(min_valid_ratio),
        input_dir=input_dir,
        output_dir=output_dir,
    )


def load_config(path) -> PipelineConfig:
    try:
        with open(path, "rb") as fh:
            payload = tomllib.load(fh)
    except FileNotFoundError:
        raise
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return config_from_dict(payload)
