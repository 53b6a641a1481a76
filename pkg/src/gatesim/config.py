"""TOML scenario files.

Layout::

    [scenario]       # top-level ScenarioConfig scalars (num_aps, grt_s, scheduler, ...)
    [gate_geometry]
    [mobility]
    [channel]
    [energy]

Every section and key is optional and falls back to the dataclass default.
Unknown sections or keys are rejected so typos do not silently vanish.
"""

from __future__ import annotations

import dataclasses
import enum
import sys
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import (
    ChannelConfig,
    EnergyConfig,
    GateGeometry,
    InvalidConfig,
    MobilityConfig,
    MobilityMode,
    ScenarioConfig,
    SchedulerKind,
)

SECTIONS = {
    "gate_geometry": GateGeometry,
    "mobility": MobilityConfig,
    "channel": ChannelConfig,
    "energy": EnergyConfig,
}


def _scalar_fields(cls) -> dict[str, dataclasses.Field]:
    return {f.name: f for f in dataclasses.fields(cls) if f.name not in SECTIONS}


def _coerce(section: str, name: str, value, default, errors):
    label = name if section == "scenario" else f"{section}.{name}"
    if isinstance(default, bool) or isinstance(value, bool):
        errors.append((label, f"unexpected boolean {value!r}"))
        return default
    if isinstance(default, enum.Enum):
        try:
            return type(default)(str(value).lower())
        except ValueError:
            choices = ", ".join(m.value for m in type(default))
            errors.append((label, f"must be one of {choices}, got {value!r}"))
            return default
    if isinstance(default, int):
        if not isinstance(value, int):
            errors.append((label, f"must be an integer, got {value!r}"))
            return default
        return value
    if isinstance(default, float):
        if not isinstance(value, (int, float)):
            errors.append((label, f"must be a number, got {value!r}"))
            return default
        return float(value)
    if isinstance(default, tuple) or name in ("ap_positions",):
        try:
            if name == "ap_positions":
                return tuple(tuple(float(c) for c in p) for p in value)
            return tuple(float(c) for c in value)
        except (TypeError, ValueError):
            errors.append((label, f"must be a list of numbers, got {value!r}"))
            return default
    if isinstance(default, str):
        if not isinstance(value, str):
            errors.append((label, f"must be a string, got {value!r}"))
            return default
        return value
    return value


def _build(cls, section: str, table: dict, errors):
    proto = cls()
    known = _scalar_fields(cls)
    kwargs = {}
    for key, value in table.items():
        if key not in known:
            label = key if section == "scenario" else f"{section}.{key}"
            errors.append((label, "unknown key"))
            continue
        kwargs[key] = _coerce(section, key, value, getattr(proto, key), errors)
    return kwargs


def from_dict(data: dict) -> ScenarioConfig:
    errors: list[tuple[str, str]] = []
    for key in data:
        if key != "scenario" and key not in SECTIONS:
            errors.append((key, "unknown section"))
    kwargs = _build(ScenarioConfig, "scenario", data.get("scenario", {}), errors)
    for section, cls in SECTIONS.items():
        sub = data.get(section, {})
        if not isinstance(sub, dict):
            errors.append((section, "must be a table"))
            continue
        kwargs[section] = cls(**_build(cls, section, sub, errors))
    if errors:
        raise InvalidConfig(errors)
    return ScenarioConfig(**kwargs)


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def to_dict(cfg: ScenarioConfig) -> dict:
    out: dict = {"scenario": {}}
    for name in _scalar_fields(ScenarioConfig):
        out["scenario"][name] = _plain(getattr(cfg, name))
    for section, cls in SECTIONS.items():
        sub = getattr(cfg, section)
        table = {}
        for name in _scalar_fields(cls):
            value = getattr(sub, name)
            if value is not None:
                table[name] = _plain(value)
        out[section] = table
    return out


def loads(text: str) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfig([("<file>", f"TOML syntax error: {exc}")]) from exc
    return from_dict(data)


def dumps(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def load(path) -> ScenarioConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


def dump(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps(cfg), encoding="utf-8")


__all__ = ["load", "loads", "dump", "dumps", "from_dict", "to_dict", "MobilityMode", "SchedulerKind"]
