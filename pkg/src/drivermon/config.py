"""Versioned JSON configuration binding every component's settings.

The file must list every section and key; unknown keys are rejected. The
shipped ``config.default`` is the complete reference.
"""
from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .decision import Thresholds, Tier
from .detector import DetectorConfig
from .errors import ConfigError
from .fsm import FsmConfig
from .indicators import LandmarkSchema, RegionIds
from .pipeline import LatencyModel
from .tracker import TrackerConfig

CONFIG_VERSION = 1
DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent / "data" / "config.default"


@dataclass(frozen=True)
class PipelineConfig:
    input_size: int = 160
    roi_expand: float = 1.25
    bbox_noise_px: float = 0.0
    seed: int = 0
    workers: int = 1
    eval_eye_threshold: float = 0.5

    def __post_init__(self):
        if self.input_size < 1 or self.roi_expand <= 0 or self.workers < 1:
            raise ValueError("input_size, roi_expand and workers must be positive")
        if self.bbox_noise_px < 0:
            raise ValueError("bbox_noise_px must be >= 0")


@dataclass(frozen=True)
class Config:
    version: int = CONFIG_VERSION
    thresholds: Thresholds = field(default_factory=Thresholds)
    fsm: FsmConfig = field(default_factory=FsmConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    landmarks: LandmarkSchema = field(default_factory=LandmarkSchema)
    latency: LatencyModel = field(default_factory=LatencyModel)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def to_dict(self) -> dict:
        return _to_plain(self)

    def replace(self, **sections) -> "Config":
        return dataclasses.replace(self, **sections)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_to_plain(v) for v in obj]
    return obj


def _convert(hint, value, key: str):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if dataclasses.is_dataclass(hint):
        return _build(hint, value, key)
    if origin is typing.Union or origin is types.UnionType:
        if value is None and type(None) in args:
            return None
        return _convert(next(a for a in args if a is not type(None)), value, key)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list", key)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(args[0], v, f"{key}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{key}: expected {len(args)} items, got {len(value)}", key)
        return tuple(_convert(a, v, f"{key}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false", key)
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer", key)
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number", key)
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string", key)
        return value
    return value


def _build(cls, data, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object", prefix or None)
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls)]
    for k in data:
        if k not in names:
            key = f"{prefix}.{k}" if prefix else k
            raise ConfigError(f"unknown config key: {key}", key)
    kwargs = {}
    for name in names:
        key = f"{prefix}.{name}" if prefix else name
        if name not in data:
            raise ConfigError(f"missing config key: {key}", key)
        kwargs[name] = _convert(hints[name], data[name], key)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{prefix or 'config'}: {exc}", prefix or None) from exc


def config_from_dict(data: dict) -> Config:
    if isinstance(data, dict) and "version" in data and data["version"] != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {data['version']}", "version")
    return _build(Config, data, "")


def load_config(path=None) -> Config:
    path = DEFAULT_CONFIG_PATH if path is None else Path(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: Config, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")


__all__ = ["Config", "PipelineConfig", "Tier", "RegionIds", "config_from_dict", "load_config",
           "dump_config", "DEFAULT_CONFIG_PATH"]
