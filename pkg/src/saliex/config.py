"""Run configuration: one flat key-value file drives every subcommand.

The file format is `key = value` lines with `#` comments. Every key has a
default, so an empty or missing file is a valid configuration; unknown keys
are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .saliency import (
    MAP_ORDER,
    CenterSurroundParams,
    ContentParams,
    ContrastParams,
    StackConfig,
)
from .segmentation import EnergyModel
from .manipulate import WiggleParams


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "yes", "1"):
        return True
    if text.lower() in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _parse_beta(text: str) -> float | None:
    return None if text.lower() == "auto" else float(text)


def _parse_weights(text: str) -> tuple[float, ...] | None:
    return None if text.lower() in ("", "equal") else _parse_float_list(text)


@dataclass(frozen=True)
class RunConfig:
    maps: tuple[str, ...] = MAP_ORDER
    weights: tuple[float, ...] | None = None   # None = 1.0 per map
    contrast_levels: int = 6
    content_patch_size: int = 7
    content_k_nearest: int = 64
    content_position_weight: float = 3.0
    content_work_size: int = 64
    cs_rect_fractions: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    cs_aspect_ratios: tuple[float, ...] = (0.5, 0.75, 1.0, 1.5, 2.0)
    cs_downsample: int = 2
    cs_bins_per_channel: int = 4
    gmm_components: int = 5
    gamma: float = 2.0
    beta: float | None = None                  # None = contrast-adaptive
    icm_max_passes: int = 100
    seed: int = 42
    out_dir: str = "out"
    feather: int = 0
    wiggle_frames: int = 2
    wiggle_shift: int = 4
    wiggle_delay: int = 10

    _PARSERS = {
        "maps": _parse_str_list,
        "weights": _parse_weights,
        "contrast_levels": int,
        "content_patch_size": int,
        "content_k_nearest": int,
        "content_position_weight": float,
        "content_work_size": int,
        "cs_rect_fractions": _parse_float_list,
        "cs_aspect_ratios": _parse_float_list,
        "cs_downsample": int,
        "cs_bins_per_channel": int,
        "gmm_components": int,
        "gamma": float,
        "beta": _parse_beta,
        "icm_max_passes": int,
        "seed": int,
        "out_dir": str,
        "feather": int,
        "wiggle_frames": int,
        "wiggle_shift": int,
        "wiggle_delay": int,
    }

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        values = {}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip().strip("\"'")
            parser = cls._PARSERS.get(key)
            if parser is None:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = parser(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
        return cls(**values)

    def override(self, **changes) -> "RunConfig":
        """New config with the given non-None fields replaced."""
        effective = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **effective) if effective else self

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def to_stack_config(self) -> StackConfig:
        return StackConfig(
            maps=tuple(self.maps),
            weights=self.weights,
            contrast=ContrastParams(levels=self.contrast_levels),
            content=ContentParams(
                patch_size=self.content_patch_size,
                k_nearest=self.content_k_nearest,
                position_weight=self.content_position_weight,
                work_size=self.content_work_size,
            ),
            center_surround=CenterSurroundParams(
                rect_fractions=self.cs_rect_fractions,
                aspect_ratios=self.cs_aspect_ratios,
                downsample=self.cs_downsample,
                bins_per_channel=self.cs_bins_per_channel,
            ),
            gmm_components=self.gmm_components,
            seed=self.seed,
        )

    def to_energy_model(self) -> EnergyModel:
        return EnergyModel(pairwise_strength=self.gamma, color_decay=self.beta)

    def to_wiggle_params(self) -> WiggleParams:
        return WiggleParams(
            frames=self.wiggle_frames, shift=self.wiggle_shift, delay=self.wiggle_delay
        )
