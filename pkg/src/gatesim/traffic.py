"""Delayed-file workload generation and the per-UE file table."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import DelayedFile, FileState, ParamError, ScenarioConfig

WORKLOAD_COLUMNS = ("ue_id", "file_id", "fat_s", "total_bytes", "deadline_s")


@dataclass(frozen=True)
class TrafficParams:
    mean_file_bytes: float
    mean_iat_s: float
    window_s: float
    rho: float
    delta_frac: float

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "TrafficParams":
        return cls(cfg.mean_file_bytes, cfg.mean_iat_s, cfg.grt_s, cfg.rho, cfg.delta_frac)


def draw_deadline(fat_s: float, grt_s: float, rho: float, delta_frac: float,
                  rng: np.random.Generator) -> float:
    """Absolute deadline for a file that arrived at ``fat_s``.

    The relative deadline is a Gaussian with mean ``rho*(grt - fat)`` and
    standard deviation ``delta_frac*(grt - fat)``, clamped at zero. A clamped
    draw gives a deadline equal to the arrival time.
    """
    if fat_s > grt_s:
        raise ParamError(f"file arrival {fat_s} s is after the gate reaching time {grt_s} s")
    if fat_s < 0:
        raise ParamError(f"file arrival {fat_s} s is negative")
    lead = grt_s - fat_s
    x = rng.normal(rho * lead, delta_frac * lead)
    return fat_s + max(float(x), 0.0)


def _ue_files(params: TrafficParams, ue_id: int, first_id: int,
              rng: np.random.Generator) -> list[DelayedFile]:
    files = []
    t = rng.exponential(params.mean_iat_s)
    while t < params.window_s:
        size = max(1, int(round(rng.exponential(params.mean_file_bytes))))
        deadline = draw_deadline(t, params.window_s, params.rho, params.delta_frac, rng)
        files.append(DelayedFile(id=first_id + len(files), owner_ue=ue_id,
                                 total_bytes=size, fat_s=float(t), deadline_s=deadline))
        t += rng.exponential(params.mean_iat_s)
    return files


def generate_workload(params: TrafficParams, ue_count: int,
                      rng: np.random.Generator) -> list[list[DelayedFile]]:
    """Per-UE file lists over ``[0, window_s)``, each ordered by arrival.

    Every UE draws from its own child stream spawned off ``rng``, so a UE's
    files do not depend on how many files the other UEs happened to get and a
    longer window only appends files to each UE's list.
    File ids are unique within the workload, assigned UE by UE.
    """
    children = rng.spawn(ue_count)
    workload = []
    next_id = 0
    for ue_id, child in enumerate(children):
        files = _ue_files(params, ue_id, next_id, child)
        next_id += len(files)
        workload.append(files)
    return workload


def _srtf_key(f: DelayedFile, now_s: float, order: str):
    if order == "size":
        return (f.remaining_bytes, f.deadline_s - now_s, f.id)
    return (f.deadline_s - now_s, f.remaining_bytes, f.id)


def next_file(table: Iterable[DelayedFile], now_s: float,
              order: str = "deadline") -> Optional[DelayedFile]:
    """Front of the SRTF queue: the arrived, unfinished file due soonest.

    Ties go to the smaller remaining size, then the lower file id. With
    ``order="size"`` remaining size is the primary key instead.
    """
    best = None
    best_key = None
    for f in table:
        if f.remaining_bytes <= 0 or f.fat_s > now_s:
            continue
        key = _srtf_key(f, now_s, order)
        if best_key is None or key < best_key:
            best, best_key = f, key
    return best


def total_remaining(table: Iterable[DelayedFile], now_s: float) -> int:
    return sum(f.remaining_bytes for f in table if f.fat_s <= now_s)


def dump_workload(workload: Sequence[Sequence[DelayedFile]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(WORKLOAD_COLUMNS)
        for files in workload:
            for f in files:
                w.writerow([f.owner_ue, f.id, repr(f.fat_s), f.total_bytes, repr(f.deadline_s)])


def load_workload(path, ue_count: Optional[int] = None) -> list[list[DelayedFile]]:
    """Inverse of :func:`dump_workload`; UEs without rows get empty lists."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != WORKLOAD_COLUMNS:
            raise ParamError(f"workload header must be {','.join(WORKLOAD_COLUMNS)}")
        for row in reader:
            f = DelayedFile(id=int(row["file_id"]), owner_ue=int(row["ue_id"]),
                            total_bytes=int(row["total_bytes"]), fat_s=float(row["fat_s"]),
                            deadline_s=float(row["deadline_s"]))
            if f.deadline_s < f.fat_s or f.total_bytes <= 0 or not math.isfinite(f.fat_s):
                raise ParamError(f"bad workload row {row}")
            rows.append(f)
    n = ue_count if ue_count is not None else (max((f.owner_ue for f in rows), default=-1) + 1)
    workload: list[list[DelayedFile]] = [[] for _ in range(n)]
    for f in rows:
        workload[f.owner_ue].append(f)
    for files in workload:
        files.sort(key=lambda f: (f.fat_s, f.id))
    return workload


def reset_files(workload: Sequence[Sequence[DelayedFile]]) -> list[list[DelayedFile]]:
    """Fresh copies with all transfer counters zeroed, for replaying a workload."""
    return [[DelayedFile(id=f.id, owner_ue=f.owner_ue, total_bytes=f.total_bytes,
                         fat_s=f.fat_s, deadline_s=f.deadline_s, state=FileState.PENDING)
             for f in files] for files in workload]
