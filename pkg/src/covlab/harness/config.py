"""Experiment configuration: one frozen object, JSON in and out.

A config fully determines an experiment given its base seed; there is no
hidden state, so two runs from the same file are byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

from ..errors import ConfigError
from ..matching import MatchErrorModel
from ..popsim import PopulationConfig

__all__ = ["SCHEMA_VERSION", "SampleSpec", "ExperimentConfig", "load_config", "dump_config"]

SCHEMA_VERSION = 1

_LEVELS = ("national", "province_stratum", "post_stratum")
_PROCEDURES = ("a", "b", "c")
_PLACEMENTS = ("omitted", "numerator", "denominator")


@dataclass(frozen=True)
class SampleSpec:
    """Two-stage survey sample: whole districts, then a household take.

    `psus_per_stratum` districts are drawn in every (province, stratum)
    pair; takes follow the urban and rural defaults of the field design.
    """

    psus_per_stratum: int = 1
    urban_take: int = 50
    rural_take: int = 100

    def __post_init__(self) -> None:
        if self.psus_per_stratum < 1:
            raise ConfigError("psus_per_stratum must be at least 1")
        if self.urban_take < 1 or self.rural_take < 1:
            raise ConfigError("household takes must be at least 1")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a Monte Carlo coverage experiment needs."""

    name: str = "coverage-experiment"
    base_seed: int = 1385
    replicates: int = 100
    workers: int = 1
    population: PopulationConfig = field(default_factory=PopulationConfig)
    capture_census: float = 0.9
    capture_pes: float = 0.9
    dependence: float = 0.0
    heterogeneity: float = 0.0
    ee_rate: float = 0.0
    ii_rate: float = 0.0
    listed_nonresponse_rate: float = 0.0
    proxy_miss: float = 0.0
    absent_rate: float = 0.0
    unlisted_rate: float = 0.0
    errors: MatchErrorModel = field(default_factory=MatchErrorModel)
    exclusion_mode: str = "sci"
    grouping: tuple[str, ...] = ("national",)
    procedures: tuple[str, ...] = ("a", "b", "c")
    f30_placements: tuple[str, ...] = ("omitted", "numerator", "denominator")
    with_in_mover_matching: bool = True
    sample: SampleSpec | None = None

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0.0 < self.capture_census < 1.0 or not 0.0 < self.capture_pes < 1.0:
            raise ConfigError("capture probabilities must lie strictly inside (0, 1)")
        if self.heterogeneity < 0.0:
            raise ConfigError("heterogeneity must be non-negative")
        if self.exclusion_mode not in ("sci", "adjusted"):
            raise ConfigError(f"unknown exclusion_mode {self.exclusion_mode!r}")
        object.__setattr__(self, "grouping", tuple(self.grouping))
        object.__setattr__(self, "procedures", tuple(self.procedures))
        object.__setattr__(self, "f30_placements", tuple(self.f30_placements))
        for level in self.grouping:
            if level not in _LEVELS:
                raise ConfigError(f"unknown grouping level {level!r}, expected one of {_LEVELS}")
        for proc in self.procedures:
            if proc not in _PROCEDURES:
                raise ConfigError(f"unknown procedure {proc!r}, expected one of {_PROCEDURES}")
        for placement in self.f30_placements:
            if placement not in _PLACEMENTS:
                raise ConfigError(
                    f"unknown f30 placement {placement!r}, expected one of {_PLACEMENTS}"
                )
        if "b" in self.procedures and not self.with_in_mover_matching:
            raise ConfigError("procedure b needs with_in_mover_matching enabled")

    def to_json(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "base_seed": self.base_seed,
            "replicates": self.replicates,
            "workers": self.workers,
            "population": dataclasses.asdict(self.population),
            "capture_census": self.capture_census,
            "capture_pes": self.capture_pes,
            "dependence": self.dependence,
            "heterogeneity": self.heterogeneity,
            "ee_rate": self.ee_rate,
            "ii_rate": self.ii_rate,
            "listed_nonresponse_rate": self.listed_nonresponse_rate,
            "proxy_miss": self.proxy_miss,
            "absent_rate": self.absent_rate,
            "unlisted_rate": self.unlisted_rate,
            "errors": dataclasses.asdict(self.errors),
            "exclusion_mode": self.exclusion_mode,
            "grouping": list(self.grouping),
            "procedures": list(self.procedures),
            "f30_placements": list(self.f30_placements),
            "with_in_mover_matching": self.with_in_mover_matching,
            "sample": dataclasses.asdict(self.sample) if self.sample else None,
        }
        return data

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {version!r}, this build reads {SCHEMA_VERSION}"
            )
        known = set(cls().to_json())  # field names as emitted
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        kwargs: dict[str, Any] = {
            key: value
            for key, value in data.items()
            if key not in ("schema_version", "population", "errors", "sample", "grouping",
                           "procedures", "f30_placements")
        }
        if "population" in data:
            kwargs["population"] = PopulationConfig(**data["population"])
        if "errors" in data:
            kwargs["errors"] = MatchErrorModel(**data["errors"])
        if data.get("sample") is not None:
            kwargs["sample"] = SampleSpec(**data["sample"])
        for key in ("grouping", "procedures", "f30_placements"):
            if key in data:
                kwargs[key] = tuple(data[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return ExperimentConfig.from_json(data)


def dump_config(config: ExperimentConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(config.to_json(), handle, indent=2, sort_keys=True)
        handle.write("\n")
