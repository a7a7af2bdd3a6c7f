"""Pipeline configuration: a plain-text key = value document.

Unknown keys are rejected outright; a silently ignored typo in a threshold
experiment is the costliest failure mode this tool has.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import ConfigError
from .maskcore import parse_transform


@dataclass(frozen=True)
class PipelineConfig:
    mask_side: int = 28
    low_side: int = 14
    bpm_floor: float = 0.05
    low_branch_weight: float = 1.0
    boundary_band: object = "2%-diagonal"  # or a fixed pixel count
    test_pixel_threshold: float = 0.5
    rng_seed: int = 0
    noise_q0: float = 0.45
    noise_d0: float = 1.5
    tta: tuple = ("identity", "hflip", "scale:0.5")
    sim_instances: int = 200
    sim_grid: int = 64
    sim_sizes: tuple = (7, 14, 28, 56)
    sim_bins: int = 10
    sim_shape: str = "ellipse"
    sim_smoothing: int = 2

    def __post_init__(self):
        if self.mask_side < 1 or self.low_side < 1:
            raise ConfigError("mask sides must be positive")
        if self.low_side > self.mask_side:
            raise ConfigError("low_side must not exceed mask_side")
        if not (0.0 < self.bpm_floor < 1.0):
            raise ConfigError("bpm_floor must lie in (0, 1)")
        if self.low_branch_weight < 0:
            raise ConfigError("low_branch_weight must be non-negative")
        if not (0.0 < self.test_pixel_threshold < 1.0):
            raise ConfigError("test_pixel_threshold must lie in (0, 1)")
        if not (0.0 <= self.noise_q0 <= 1.0):
            raise ConfigError("noise_q0 must lie in [0, 1]")
        if not self.noise_d0 > 0:
            raise ConfigError("noise_d0 must be positive")
        if isinstance(self.boundary_band, str):
            if self.boundary_band != "2%-diagonal":
                raise ConfigError("boundary_band must be an integer or '2%-diagonal'")
        elif int(self.boundary_band) < 1:
            raise ConfigError("boundary_band must be at least 1 pixel")
        for t in self.tta:
            try:
                parse_transform(t)
            except ValueError as exc:
                raise ConfigError(f"bad tta transform: {exc}") from exc
        if self.sim_instances < 1:
            raise ConfigError("sim_instances must be positive")
        if self.sim_grid < 16:
            raise ConfigError("sim_grid must be at least 16")
        if not self.sim_sizes or any(s < 4 for s in self.sim_sizes):
            raise ConfigError("sim_sizes must all be >= 4")
        if self.sim_shape not in ("ellipse", "polygon"):
            raise ConfigError("sim_shape must be 'ellipse' or 'polygon'")
        if self.sim_bins < 2:
            raise ConfigError("sim_bins must be at least 2")
        if self.sim_smoothing < 0:
            raise ConfigError("sim_smoothing must be non-negative")

    def resolve_boundary_band(self, height, width) -> int:
        if self.boundary_band == "2%-diagonal":
            return max(1, round(0.02 * math.hypot(height, width)))
        return int(self.boundary_band)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


_INT_KEYS = {
    "mask_side", "low_side", "rng_seed", "sim_instances", "sim_grid",
    "sim_bins", "sim_smoothing",
}
_FLOAT_KEYS = {
    "bpm_floor", "low_branch_weight", "test_pixel_threshold", "noise_q0", "noise_d0",
}
_VALID_KEYS = {f.name for f in fields(PipelineConfig)}


def parse_config(text: str, source: str = "<config>") -> PipelineConfig:
    """Parse `key = value` lines; '#' starts a comment; unknown keys are errors."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in _VALID_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _coerce(key, val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from exc
    try:
        return PipelineConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def _coerce(key, val):
    if key in _INT_KEYS:
        return int(val)
    if key in _FLOAT_KEYS:
        return float(val)
    if key == "boundary_band":
        return val if val == "2%-diagonal" else int(val)
    if key == "tta":
        return tuple(part.strip() for part in val.split(",") if part.strip())
    if key == "sim_sizes":
        return tuple(int(part) for part in val.split(","))
    if key == "sim_shape":
        return val
    raise ValueError(f"no parser for key {key!r}")


def load_config(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))
