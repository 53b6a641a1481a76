"""CSV writers for results, summaries, event logs and per-slot traces.

Floats are written with ``repr`` (shortest round-trip form), so every
emitted value keeps full double precision.
"""

from __future__ import annotations

import csv
import io as _io
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .channel import path_loss_db
from .metrics import METRIC_NAMES, ResultRow, SummaryRow
from .model import MetricsReport, ScenarioConfig, SchedulerKind

RESULT_COLUMNS = ("scheduler", "num_aps", "grt_s", "speed_ratio", "seed", "gofe", "f_alloc",
                  "f_byte", "norm_energy", "total_bytes", "gate_bytes", "macro_bytes")
SUMMARY_COLUMNS = ("scheduler", "num_aps", "grt_s", "speed_ratio", "count") + tuple(
    f"{m}_{s}" for m in METRIC_NAMES for s in ("mean", "std"))
EVENT_COLUMNS = ("time_s", "kind", "ue_id", "file_id", "detail")
DECISION_COLUMNS = ("slot", "scheduler", "mapping", "ue_id", "U_k", "r_k", "R_k", "w_k")
POSITION_COLUMNS = ("slot", "ue_id", "x", "y", "d_k", "TS_k")
LINK_COLUMNS = ("slot", "ap", "ue", "PL_dB", "SINR_dB", "C_bps")


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def to_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def result_row(cfg: ScenarioConfig, report: MetricsReport) -> ResultRow:
    return ResultRow(
        scheduler=SchedulerKind(cfg.scheduler).value, num_aps=cfg.num_aps, grt_s=float(cfg.grt_s),
        speed_ratio=float(cfg.mobility.speed_ratio), seed=cfg.rng_seed, gofe=report.gofe,
        f_alloc=report.f_alloc, f_byte=report.f_byte, norm_energy=report.norm_energy,
        total_bytes=report.total_generated_bytes, gate_bytes=report.bytes_via_gate,
        macro_bytes=report.bytes_via_macro)


def results_csv(rows: Iterable[ResultRow]) -> str:
    return to_csv(RESULT_COLUMNS, ([getattr(r, c) for c in RESULT_COLUMNS] for r in rows))


def summary_csv(rows: Iterable[SummaryRow]) -> str:
    def flat(s: SummaryRow):
        out = [s.scheduler, s.num_aps, s.grt_s, s.speed_ratio, s.count]
        for m in METRIC_NAMES:
            out += [s.mean[m], s.std[m]]
        return out
    return to_csv(SUMMARY_COLUMNS, (flat(s) for s in rows))


def read_results(text: str) -> list[dict]:
    return list(csv.DictReader(_io.StringIO(text)))


def events_csv(events) -> str:
    return to_csv(EVENT_COLUMNS, ((e.time_s, e.kind, e.ue_id, e.file_id, e.detail) for e in events))


def decisions_csv(result) -> str:
    kind = SchedulerKind(result.config.scheduler).value

    def rows():
        for rec in result.slots:
            inp = rec.inputs
            w = inp.weights()
            served = {u: a for a, u in enumerate(rec.mapping) if u is not None}
            mapping = " ".join("-" if u is None else str(u) for u in rec.mapping)
            for i, ue in enumerate(rec.ue_ids):
                ap = served.get(int(ue))
                u_k = rec.utilities.get(ap, 0.0) if ap is not None else 0.0
                r_k = rec.rates.get(ap, 0.0) if ap is not None else 0.0
                yield (rec.slot, kind, mapping, int(ue), u_k, r_k, float(inp.avg_rate[i]), float(w[i]))
    return to_csv(DECISION_COLUMNS, rows())


def positions_csv(result) -> str:
    exit_x, exit_y = result.config.gate_geometry.exit

    def rows():
        for rec in result.slots:
            for i, ue in enumerate(rec.ue_ids):
                d = math.hypot(exit_x - rec.x[i], exit_y - rec.y[i])
                yield (rec.slot, int(ue), float(rec.x[i]), float(rec.y[i]), d, float(rec.stay_s[i]))
    return to_csv(POSITION_COLUMNS, rows())


def links_csv(result) -> str:
    cfg = result.config
    aps = cfg.ap_positions
    h = cfg.gate_geometry.ue_height_m

    def rows():
        for rec in result.slots:
            if rec.table is None:
                continue
            caps = rec.table.capacities(rec.mapping)
            sinrs = rec.table.sinr(rec.mapping)
            col = {int(u): i for i, u in enumerate(rec.ue_ids)}
            for ap, ue in enumerate(rec.mapping):
                if ue is None:
                    continue
                i = col[ue]
                p = aps[ap]
                d = math.sqrt((p[0] - rec.x[i]) ** 2 + (p[1] - rec.y[i]) ** 2 + (p[2] - h) ** 2)
                yield (rec.slot, ap, ue, path_loss_db(d, cfg.channel),
                       10 * math.log10(sinrs[ap]), caps[ap])
    return to_csv(LINK_COLUMNS, rows())


def write_atomic(path, text: str) -> None:
    """Write to a temp file beside ``path`` and rename, so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
