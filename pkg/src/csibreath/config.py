"""YAML run configuration -> dataclasses.

One file describes a whole run: the grid, a scenario (or an input trace),
impairments, pipeline knobs, and sweep settings. Unknown keys are rejected
so typos fail loudly instead of silently running defaults. The full schema
is documented in the README.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ConfigurationError
from .gass import GaParams
from .grid import SubcarrierGrid, custom_grid, default_grid, ht_ltf_grid, l_ltf_grid
from .pipeline import PipelineConfig
from .simulate import (
    ChannelScenario,
    ChirpMotion,
    ImpairmentConfig,
    Motion,
    MotionEvent,
    RateStepMotion,
    SinusoidMotion,
    StaticPath,
)

TOP_LEVEL_KEYS = {"grid", "scenario", "impairments", "input", "pipeline", "sweep", "outputs"}


def load_config(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a mapping")
    _reject_unknown(raw, TOP_LEVEL_KEYS, "top level")
    return raw


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigurationError(f"unknown {where} keys: {sorted(unknown)}")


def _build(cls: type, mapping: dict, where: str, **overrides: Any):
    fields = {f.name for f in dataclasses.fields(cls)}
    _reject_unknown(mapping, fields, where)
    try:
        return cls(**{**mapping, **overrides})
    except TypeError as exc:
        raise ConfigurationError(f"bad {where} section: {exc}") from exc


def grid_from_config(config: dict) -> SubcarrierGrid:
    spec = config.get("grid", "default")
    if isinstance(spec, str):
        builders = {"default": default_grid, "ht-ltf": ht_ltf_grid, "l-ltf": l_ltf_grid}
        if spec not in builders:
            raise ConfigurationError(
                f"unknown grid {spec!r}; expected one of {sorted(builders)}"
            )
        return builders[spec]()
    if isinstance(spec, dict):
        _reject_unknown(spec, {"center_frequencies_hz", "physical_indices", "field"}, "grid")
        if "center_frequencies_hz" not in spec:
            raise ConfigurationError("custom grid needs center_frequencies_hz")
        return custom_grid(
            np.asarray(spec["center_frequencies_hz"], dtype=float),
            physical_index=(
                np.asarray(spec["physical_indices"], dtype=int)
                if "physical_indices" in spec
                else None
            ),
            field_tag=spec.get("field", "HT-LTF"),
        )
    raise ConfigurationError("grid must be a name or a mapping")


def _motion_from_config(spec: dict) -> Motion:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("scenario.motion needs a 'kind'")
    kind = spec["kind"]
    body = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "sinusoid":
        return _build(SinusoidMotion, body, "scenario.motion")
    if kind == "chirp":
        return _build(ChirpMotion, body, "scenario.motion")
    if kind == "steps":
        if "segments" in body:
            body["segments"] = tuple(tuple(s) for s in body["segments"])
        return _build(RateStepMotion, body, "scenario.motion")
    raise ConfigurationError(f"unknown motion kind {kind!r}")


def scenario_from_config(config: dict) -> ChannelScenario:
    if "scenario" not in config:
        raise ConfigurationError("config has no scenario section")
    section = dict(config["scenario"])
    if "static_paths" not in section or "motion" not in section:
        raise ConfigurationError("scenario needs static_paths and motion")
    paths = tuple(
        _build(StaticPath, dict(p), "scenario.static_paths") for p in section.pop("static_paths")
    )
    motion = _motion_from_config(section.pop("motion"))
    events = tuple(
        _build(MotionEvent, dict(e), "scenario.motion_events")
        for e in section.pop("motion_events", [])
    )
    return _build(
        ChannelScenario,
        section,
        "scenario",
        static_paths=paths,
        motion=motion,
        motion_events=events,
    )


def impairments_from_config(config: dict, seed_offset: int = 0) -> ImpairmentConfig:
    section = dict(config.get("impairments", {}))
    base_seed = int(section.pop("seed", 0))
    return _build(ImpairmentConfig, section, "impairments", seed=base_seed + seed_offset)


def pipeline_from_config(config: dict) -> PipelineConfig:
    section = dict(config.get("pipeline", {}))
    ga = _build(GaParams, dict(section.pop("ga", {})), "pipeline.ga")
    if "reference_pair" in section and section["reference_pair"] is not None:
        section["reference_pair"] = tuple(section["reference_pair"])
    return _build(PipelineConfig, section, "pipeline", ga=ga)
