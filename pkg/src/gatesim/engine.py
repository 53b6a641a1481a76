"""End-to-end scenario run: pre-gate macro phase, slotted gate phase, macro drain.

The run follows the offloading protocol event by event and records it as a
list of :class:`ProtocolEvent`. Randomness comes from independent named
sub-streams of the master seed so that traffic, mobility and blockage are the
same whichever scheduler is plugged in.
"""

from __future__ import annotations

import enum
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import metrics
from .channel import BlockageStream, build_capacity_table, draw_link_probabilities
from .mobility import init_users, stay_times, step_arrays
from .model import (
    DelayedFile,
    FileState,
    MetricsReport,
    MetricUndefined,
    ScenarioConfig,
    SchedulerKind,
    UserEquipment,
    UserRow,
    validate,
)
from .scheduler import (
    RoundRobin,
    SchedulerInputs,
    evaluate_mapping,
    select_multi,
    update_avg_rate,
)
from .traffic import TrafficParams, generate_workload, next_file, reset_files

log = logging.getLogger(__name__)

STREAMS = {"traffic": 0, "mobility": 1, "blockage": 2}


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named part of the model."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(STREAMS[name],)))


class EventKind(str, enum.Enum):
    FILE_GENERATED = "FileGenerated"
    DEADLINE_EXPIRED = "DeadlineExpired"
    MACRO_START = "MacroStart"
    GATE_NOMINATION = "GateNomination"
    GATE_ENTRY = "GateEntry"
    MMW_WAKEUP = "MmwWakeup"
    HANDOVER = "Handover"
    SLOT_SCHEDULED = "SlotScheduled"
    GATE_EXIT = "GateExit"
    MMW_SLEEP = "MmwSleep"
    MACRO_RESUME = "MacroResume"
    FILE_DONE = "FileDone"


@dataclass(frozen=True)
class ProtocolEvent:
    time_s: float
    kind: EventKind
    ue_id: int
    file_id: Optional[int] = None
    detail: str = ""


@dataclass
class SimClock:
    now_s: float = 0.0
    slot_index: int = 0


@dataclass
class SlotRecord:
    slot: int
    time_s: float
    inputs: Optional[SchedulerInputs]
    mapping: tuple
    utilities: dict
    rates: dict
    x: np.ndarray
    y: np.ndarray
    ue_ids: np.ndarray
    stay_s: np.ndarray
    table: object = None


@dataclass
class RunResult:
    report: MetricsReport
    events: list[ProtocolEvent]
    files: list[list[DelayedFile]]
    users: list[UserEquipment]
    config: ScenarioConfig
    p_link: np.ndarray
    blockage: BlockageStream
    num_slots: int
    grants: int
    slots: list[SlotRecord] = field(default_factory=list)

    def __iter__(self):
        # allows ``report, events = run(cfg)``
        return iter((self.report, self.events))

    def blockage_digest(self) -> str:
        h = hashlib.sha256(self.p_link.tobytes())
        for n in range(self.num_slots):
            h.update(np.packbits(self.blockage[n]).tobytes())
        return h.hexdigest()

    def workload_digest(self) -> str:
        h = hashlib.sha256()
        for files in self.files:
            for f in files:
                h.update(repr((f.owner_ue, f.id, f.fat_s, f.total_bytes, f.deadline_s)).encode())
        return h.hexdigest()


class _Log:
    def __init__(self):
        self.events: list[ProtocolEvent] = []

    def __call__(self, t, kind, ue, file_id=None, detail=""):
        self.events.append(ProtocolEvent(float(t), kind, int(ue), file_id, detail))

    def ordered(self) -> list[ProtocolEvent]:
        # stable: simultaneous events keep protocol order
        return sorted(self.events, key=lambda e: e.time_s)


def _macro_send(f: DelayedFile, nbytes: int):
    f.bytes_via_macro += nbytes
    f.remaining_bytes -= nbytes
    if f.remaining_bytes == 0:
        f.state = FileState.DONE


def _pre_gate(ue: int, files: list[DelayedFile], grt: float, rate: float, order: str,
              emit: _Log) -> Optional[DelayedFile]:
    """Macro transmission of files whose deadline expires before the gate.

    Files go one at a time in SRTF order, each starting no earlier than its
    deadline. Returns the file still in flight at the gate reaching time.
    """
    expiring = [f for f in files if f.deadline_s < grt]
    for f in sorted(expiring, key=lambda f: (f.deadline_s, f.id)):
        emit(f.deadline_s, EventKind.DEADLINE_EXPIRED, ue, f.id)
    t = 0.0
    while True:
        due = [f for f in expiring if f.remaining_bytes > 0 and f.deadline_s <= t]
        if not due:
            later = [f.deadline_s for f in expiring if f.remaining_bytes > 0 and f.deadline_s > t]
            if not later:
                return None
            t = min(later)
            continue
        f = next_file(due, t, order)
        f.state = FileState.MACRO_ACTIVE
        emit(t, EventKind.MACRO_START, ue, f.id)
        need_s = f.remaining_bytes * 8 / rate
        if t + need_s <= grt:
            _macro_send(f, f.remaining_bytes)
            t += need_s
            emit(t, EventKind.FILE_DONE, ue, f.id, "macro")
            continue
        _macro_send(f, min(f.remaining_bytes, int((grt - t) * rate / 8)))
        if f.state == FileState.DONE:
            emit(grt, EventKind.FILE_DONE, ue, f.id, "macro")
            return None
        return f


def _drain(ue: int, files: list[DelayedFile], t: float, rate: float, order: str, emit: _Log):
    """Everything left after the gate goes over the macro BS, in SRTF order."""
    while True:
        f = next_file(files, t, order)
        if f is None:
            return
        f.state = FileState.MACRO_ACTIVE
        t += f.remaining_bytes * 8 / rate
        _macro_send(f, f.remaining_bytes)
        emit(t, EventKind.FILE_DONE, ue, f.id, "macro")


def _gate_send(files: list[DelayedFile], budget: int, now: float, order: str,
               ue: int, t_done: float, emit: _Log) -> int:
    """Spend ``budget`` bytes on the UE's SRTF queue; leftovers roll to the next file."""
    sent = 0
    while budget > 0:
        f = next_file(files, now, order)
        if f is None:
            break
        take = min(budget, f.remaining_bytes)
        f.state = FileState.GATE_ACTIVE
        f.bytes_via_gate += take
        f.remaining_bytes -= take
        budget -= take
        sent += take
        if f.remaining_bytes == 0:
            f.state = FileState.DONE
            emit(t_done, EventKind.FILE_DONE, ue, f.id, "gate")
    return sent


def run(cfg: ScenarioConfig, workload: Optional[Sequence[Sequence[DelayedFile]]] = None,
        trace: bool = False) -> RunResult:
    """Simulate one scenario.

    ``workload`` replays a fixed set of files instead of drawing one (the
    files are copied, the caller's objects are left untouched). With
    ``trace`` every gate slot's scheduler inputs and decision are kept.
    """
    cfg = validate(cfg)
    seed = cfg.rng_seed
    grt, slot_s = cfg.grt_s, cfg.slot_s
    K, A = cfg.num_ues, cfg.num_aps
    order = cfg.srtf_order
    emit = _Log()

    if workload is None:
        files = generate_workload(TrafficParams.from_config(cfg), K, substream(seed, "traffic"))
    else:
        files = reset_files(workload)
        files += [[] for _ in range(K - len(files))]
        if len(files) != K:
            raise ValueError(f"workload has {len(files)} UEs, config expects {K}")

    # phase 1: before the gate
    in_flight: list[Optional[DelayedFile]] = []
    for ue in range(K):
        emit(0.0, EventKind.GATE_NOMINATION, ue, None, f"grt={grt!r}")
        for f in files[ue]:
            emit(f.fat_s, EventKind.FILE_GENERATED, ue, f.id, str(f.total_bytes))
        in_flight.append(_pre_gate(ue, files[ue], grt, cfg.macro_rate_bps, order, emit))

    # phase 2: slotted gate traversal
    mob_rng = substream(seed, "mobility")
    users = init_users(cfg, mob_rng)
    blk_rng = substream(seed, "blockage")
    p_link = draw_link_probabilities(A, K, cfg.channel, blk_rng)
    blockage = BlockageStream(p_link, blk_rng)
    geo = cfg.gate_geometry
    ap_pos = np.array(cfg.ap_positions, dtype=float)

    x = np.array([u.position[0] for u in users])
    y = np.array([u.position[1] for u in users])
    heading = np.array([u.heading for u in users])
    speed = np.array([u.speed_mps for u in users])
    in_gate = np.ones(K, dtype=bool)
    remaining = np.array([sum(f.remaining_bytes for f in fl) for fl in files], dtype=np.int64)
    avg_rate = np.full(K, float(cfg.r_init_bps))
    alloc = np.zeros(K, dtype=np.int64)
    offloaded = np.zeros(K, dtype=np.int64)
    exit_time = np.full(K, np.nan)

    for ue in range(K):
        users[ue].file_table = files[ue]
        users[ue].entry_time_s = grt
        emit(grt, EventKind.GATE_ENTRY, ue)
        emit(grt, EventKind.MMW_WAKEUP, ue)
        f = in_flight[ue]
        if f is not None:
            f.state = FileState.GATE_ACTIVE
        emit(grt, EventKind.HANDOVER, ue, None if f is None else f.id,
             "in-flight" if f is not None else "idle")

    kind = SchedulerKind(cfg.scheduler)
    alpha = 0.0 if kind == SchedulerKind.PF else cfg.alpha
    rr = RoundRobin() if kind == SchedulerKind.RR else None
    ts_h_static = float(stay_times(x, y, speed, geo).max()) if cfg.ts_h_mode == "static" else None
    clock = SimClock(now_s=grt)
    grants = 0
    records: list[SlotRecord] = []

    while in_gate.any():
        n = clock.slot_index
        t0 = grt + n * slot_s
        t1 = grt + (n + 1) * slot_s
        clock.now_s = t0
        blocked = blockage[n]

        idx = np.flatnonzero(in_gate)
        nx, ny, nh, gone = step_arrays(x[idx], y[idx], heading[idx], speed[idx], slot_s,
                                       geo, cfg.mobility, mob_rng)
        x[idx], y[idx], heading[idx] = nx, ny, nh
        for ue in idx[gone]:
            in_gate[ue] = False
            exit_time[ue] = t1
            emit(t1, EventKind.GATE_EXIT, ue)
            emit(t1, EventKind.MMW_SLEEP, ue)
            if remaining[ue] > 0:
                emit(t1, EventKind.MACRO_RESUME, ue, None, str(int(remaining[ue])))
                _drain(ue, files[ue], t1, cfg.macro_rate_bps, order, emit)
                remaining[ue] = 0
        clock.slot_index += 1

        gidx = np.flatnonzero(in_gate)
        if gidx.size == 0:
            break
        ts = stay_times(x[gidx], y[gidx], speed[gidx], geo)
        eligible = remaining[gidx] > 0
        if not eligible.any():
            avg_rate[gidx] = update_avg_rate(avg_rate[gidx], 0.0, 0, cfg.n_c)
            continue

        cand = gidx[eligible]
        table = build_capacity_table(cand, np.column_stack((x[cand], y[cand])), ap_pos,
                                     blocked[:, cand], cfg)
        inputs = SchedulerInputs(ue_ids=gidx, remaining_bytes=remaining[gidx], avg_rate=avg_rate[gidx],
                                 stay_s=ts, alpha=alpha, slot_s=slot_s,
                                 ts_h=ts_h_static, slot=n)
        if rr is not None:
            dist = np.hypot(ap_pos[:, 0:1] - x[cand][None, :], ap_pos[:, 1:2] - y[cand][None, :])
            mapping = rr.select(cand, np.ones(cand.size, dtype=bool), A, dist)
            assignment = evaluate_mapping(inputs, table, mapping)
        else:
            assignment = select_multi(inputs, table, A)

        rates = np.zeros(gidx.size)
        served = np.zeros(gidx.size)
        pos_of = {int(u): i for i, u in enumerate(gidx)}
        for ap in sorted(assignment.pairs):
            ue = assignment.pairs[ap]
            i = pos_of[ue]
            rates[i] = assignment.rate_bps[ap]
            served[i] = 1.0
            budget = min(int(assignment.capacity_bps[ap] * slot_s / 8), int(remaining[ue]))
            sent = _gate_send(files[ue], budget, t0, order, ue, t1, emit)
            remaining[ue] -= sent
            offloaded[ue] += sent
            alloc[ue] += 1
            grants += 1
            emit(t0, EventKind.SLOT_SCHEDULED, ue, None, f"ap={ap} bytes={sent}")
        avg_rate[gidx] = update_avg_rate(avg_rate[gidx], rates, served, cfg.n_c)

        if trace:
            if A == 1:
                cap = np.zeros(gidx.size)
                cap[eligible] = table.by_mask[1, 0, :]
                inputs.capacity_bps = cap
            records.append(SlotRecord(slot=n, time_s=t0, inputs=inputs,
                                      mapping=assignment.mapping(A), utilities=dict(assignment.utility),
                                      rates=dict(assignment.rate_bps),
                                      x=x[gidx].copy(), y=y[gidx].copy(), ue_ids=gidx.copy(),
                                      stay_s=ts, table=table))

    for ue, u in enumerate(users):
        u.position = (float(x[ue]), float(y[ue]))
        u.heading = float(heading[ue])
        u.in_gate = False
        u.exit_time_s = float(exit_time[ue])
        u.alloc_slots = int(alloc[ue])
        u.bytes_offloaded = int(offloaded[ue])
        u.avg_rate = float(avg_rate[ue])

    report = _report(cfg, files, users)
    return RunResult(report=report, events=emit.ordered(), files=files, users=users, config=cfg,
                     p_link=p_link, blockage=blockage, num_slots=clock.slot_index, grants=grants,
                     slots=records)


def _safe(fn, *args) -> float:
    try:
        return fn(*args)
    except MetricUndefined:
        return float("nan")


def _report(cfg: ScenarioConfig, files, users) -> MetricsReport:
    total = sum(f.total_bytes for fl in files for f in fl)
    gate = sum(f.bytes_via_gate for fl in files for f in fl)
    macro = sum(f.bytes_via_macro for fl in files for f in fl)
    left = sum(f.remaining_bytes for fl in files for f in fl)
    rows = [UserRow(u.id, u.alloc_slots, u.bytes_offloaded, u.stay_s, u.speed_mps) for u in users]
    report = MetricsReport(
        gofe=_safe(metrics.gofe, gate, total),
        f_alloc=_safe(metrics.allocation_fairness, [r.alloc_slots for r in rows]),
        f_byte=_safe(metrics.byte_fairness, [r.bytes_offloaded for r in rows]),
        norm_energy=float("nan"),
        total_generated_bytes=total,
        bytes_via_gate=gate,
        bytes_via_macro=macro,
        undelivered_bytes=left,
        gate_active_s=sum(r.alloc_slots for r in rows) * cfg.slot_s,
        macro_active_s=macro * 8 / cfg.macro_rate_bps,
        users=rows,
    )
    report.norm_energy = _safe(metrics.normalized_energy, report, cfg.energy, cfg)
    return report


def replay_check(cfg: ScenarioConfig, seed: Optional[int] = None) -> bool:
    """True when two runs of ``(cfg, seed)`` give byte-identical reports and event logs."""
    from .io import events_csv, results_csv, result_row

    if seed is not None:
        cfg = cfg.replace(rng_seed=seed)
    a, b = run(cfg), run(cfg)
    return (events_csv(a.events) == events_csv(b.events)
            and results_csv([result_row(cfg, a.report)]) == results_csv([result_row(cfg, b.report)]))
