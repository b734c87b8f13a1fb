"""Experiment configuration: YAML file, strict schema, defaults filled in.

Only ``biphoton.sigma0`` and ``biphoton.gamma0`` are required; every other key has
a default. Unknown keys, duplicate keys and out-of-range values are rejected with
the dotted key name in the message.
"""
from __future__ import annotations

from pathlib import Path
from typing import Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..modesolver import N_AL30, N_AL80, WAVELENGTH_UM


class ConfigError(ValueError):
    """Configuration rejected; ``keys`` lists the offending dotted key names."""

    def __init__(self, message: str, keys=()):
        super().__init__(message)
        self.keys = list(keys)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BiphotonConfig(_Strict):
    sigma0: float = Field(gt=0, description="rms width of photon A before heralding, um")
    gamma0: float = Field(ge=0.5, description="incoherence (width-bandwidth product)")


class WGAConfig(_Strict):
    n_layers: int = Field(101, ge=1)
    layer_thickness: float = Field(0.6, gt=0)
    n_high: float = Field(N_AL30, gt=1)
    n_low: float = Field(N_AL80, gt=1)
    background_index: float = Field(N_AL80, gt=1)
    grid_step: float = Field(0.05, gt=0)
    padding: float = Field(20.0, ge=0)

    @field_validator("n_layers")
    @classmethod
    def _odd(cls, v):
        if v % 2 == 0:
            raise ValueError("must be odd so the centre layer is defined")
        return v

    @model_validator(mode="after")
    def _resolution(self):
        if self.grid_step > self.layer_thickness / 8:
            raise ValueError("grid_step must not exceed layer_thickness / 8")
        return self


class DisorderConfig(_Strict):
    delta: float = Field(0.02, ge=0)
    master_seed: int = Field(20140527, ge=0, lt=2 ** 64)


class TSWConfig(_Strict):
    n_core: float = Field(N_AL30, gt=1)
    n_clad: float = Field(N_AL80, gt=1)
    target_mode_counts: tuple[int, ...] = (1, 3, 5, 10, 15)

    @field_validator("target_mode_counts")
    @classmethod
    def _positive(cls, v):
        if not v or any(m < 1 for m in v):
            raise ValueError("mode counts must be positive integers")
        return v

    @model_validator(mode="after")
    def _guiding(self):
        if not self.n_core > self.n_clad:
            raise ValueError("n_core must exceed n_clad")
        return self


class ImagingConfig(_Strict):
    z_policy: Union[Literal["optimize"], float] = "optimize"
    scan_min: float = Field(0.25, gt=0)
    scan_max: float = Field(4.0, gt=0)
    scan_samples: int = Field(64, ge=32)

    @field_validator("z_policy")
    @classmethod
    def _positive(cls, v):
        if not isinstance(v, str) and not v > 0:
            raise ValueError("a fixed magnification must be positive")
        return v

    @model_validator(mode="after")
    def _span(self):
        if self.scan_min > 0.25 or self.scan_max < 4.0:
            raise ValueError("scan bounds must span at least [0.25, 4]")
        return self


class RunConfig(_Strict):
    z_max: float = Field(500.0, gt=0)
    z_samples: int = Field(101, ge=2)
    realizations: int = Field(100, ge=1)
    workers: int = Field(1, ge=1)
    averaging: Literal["ratio", "width"] = "ratio"


class OutputConfig(_Strict):
    directory: str = "results"
    formats: tuple[Literal["csv", "json"], ...] = ("csv", "json")


class ExperimentConfig(_Strict):
    biphoton: BiphotonConfig
    wavelength: float = Field(WAVELENGTH_UM, gt=0)
    wga: WGAConfig = WGAConfig()
    disorder: DisorderConfig = DisorderConfig()
    tsw: TSWConfig = TSWConfig()
    imaging: ImagingConfig = ImagingConfig()
    run: RunConfig = RunConfig()
    output: OutputConfig = OutputConfig()

    def echo(self) -> dict:
        """Fully resolved configuration as plain JSON-compatible data."""
        return self.model_dump(mode="json")

    def with_overrides(self, **dotted) -> "ExperimentConfig":
        """Copy with ``section__key=value`` overrides applied and re-validated; None values are skipped."""
        data = self.echo()
        for name, value in dotted.items():
            if value is None:
                continue
            section, key = name.split("__")
            data[section][key] = value
        return parse_config(data)


class _UniqueKeyLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node, deep=False):
    seen = set()
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} at line {key_node.start_mark.line + 1}", [str(key)])
        seen.add(key)
    return yaml.SafeLoader.construct_mapping(loader, node, deep)


_UniqueKeyLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def parse_config(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        keys, lines = [], []
        for err in exc.errors():
            key = ".".join(str(p) for p in err["loc"] if not isinstance(p, int)) or "<root>"
            keys.append(key)
            lines.append(f"{key}: {err['msg']}")
        raise ConfigError("invalid configuration: " + "; ".join(lines), keys) from None


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML configuration file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.load(text, Loader=_UniqueKeyLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return parse_config(data or {})


def default_config(sigma0: float = 1.0, gamma0: float = 1.5) -> ExperimentConfig:
    return parse_config({"biphoton": {"sigma0": sigma0, "gamma0": gamma0}})
