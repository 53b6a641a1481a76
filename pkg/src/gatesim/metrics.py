"""Headline metrics: fairness indices, gate offloading efficiency, UE energy."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import EnergyConfig, MetricsReport, MetricUndefined, ScenarioConfig

METRIC_NAMES = ("gofe", "f_alloc", "f_byte", "norm_energy")
POINT_KEYS = ("scheduler", "num_aps", "grt_s", "speed_ratio")


def jain_index(values: Sequence[float]) -> float:
    """(sum x)^2 / (K * sum x^2); 1 for equal shares, 1/K when one UE takes all."""
    xs = [float(v) for v in values]
    if not xs:
        raise MetricUndefined("no users")
    if any(v < 0 for v in xs):
        raise MetricUndefined("negative share")
    top = max(xs)
    if top == 0:
        raise MetricUndefined("all shares are zero")
    sq = math.fsum(v * v for v in xs)
    if sq == 0 or math.isinf(sq):
        # the index is scale-free, so rescale when squaring under- or overflows
        xs = [v / top for v in xs]
        sq = math.fsum(v * v for v in xs)
    total = math.fsum(xs)
    return total * total / (len(xs) * sq)


def allocation_fairness(alloc_slots: Sequence[int]) -> float:
    return jain_index(alloc_slots)


def byte_fairness(bytes_offloaded: Sequence[int]) -> float:
    return jain_index(bytes_offloaded)


def gofe(bytes_via_gate: int, total_generated_bytes: int) -> float:
    if total_generated_bytes <= 0:
        raise MetricUndefined("no bytes were generated")
    return bytes_via_gate / total_generated_bytes


def normalized_energy(report: MetricsReport, energy_cfg: EnergyConfig, cfg: ScenarioConfig) -> float:
    """UE radio energy with the gate relative to sending everything over the macro BS.

    Energy is active time times the power draw of the radio in use; gate time
    is counted per granted slot, macro time at the macro rate.
    """
    denom = energy_cfg.ue_power_macro_w * report.total_generated_bytes * 8 / cfg.macro_rate_bps
    if denom <= 0:
        raise MetricUndefined("no bytes were generated")
    numer = (energy_cfg.ue_power_mmw_w * report.gate_active_s
             + energy_cfg.ue_power_macro_w * report.macro_active_s)
    return numer / denom


@dataclass
class ResultRow:
    scheduler: str
    num_aps: int
    grt_s: float
    speed_ratio: float
    seed: int
    gofe: float
    f_alloc: float
    f_byte: float
    norm_energy: float
    total_bytes: int
    gate_bytes: int
    macro_bytes: int

    @property
    def point(self) -> tuple:
        return (self.scheduler, self.num_aps, self.grt_s, self.speed_ratio)


@dataclass
class SummaryRow:
    scheduler: str
    num_aps: int
    grt_s: float
    speed_ratio: float
    count: int
    mean: dict
    std: dict


def _mean_std(values: list[float]) -> tuple[float, float]:
    # statistics works in exact rationals, so the result ignores input order
    vals = sorted(values)
    if any(math.isnan(v) for v in vals):
        return float("nan"), float("nan")
    mean = float(statistics.mean(vals))
    std = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return mean, std


def summarize(runs: Iterable[ResultRow]) -> list[SummaryRow]:
    """Mean, sample std and count of every metric per sweep point, sorted by point."""
    groups: dict[tuple, list[ResultRow]] = {}
    for r in runs:
        groups.setdefault(r.point, []).append(r)
    if not groups:
        raise ValueError("summarize needs at least one run")
    out = []
    for point in sorted(groups):
        rows = groups[point]
        mean, std = {}, {}
        for name in METRIC_NAMES:
            mean[name], std[name] = _mean_std([getattr(r, name) for r in rows])
        out.append(SummaryRow(*point, count=len(rows), mean=mean, std=std))
    return out
