"""Delayed mobile-data offloading through mmWave gates: a slotted simulator."""

from .config import dump, dumps, load, loads
from .engine import RunResult, replay_check, run
from .model import (
    GB,
    ChannelConfig,
    EnergyConfig,
    GateGeometry,
    InvalidConfig,
    MetricsReport,
    MobilityConfig,
    MobilityMode,
    ScenarioConfig,
    SchedulerKind,
    validate,
)

__all__ = [
    "GB", "ChannelConfig", "EnergyConfig", "GateGeometry", "InvalidConfig", "MetricsReport",
    "MobilityConfig", "MobilityMode", "RunResult", "ScenarioConfig", "SchedulerKind",
    "dump", "dumps", "load", "loads", "replay_check", "run", "validate",
]
