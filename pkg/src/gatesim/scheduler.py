"""Gate coordinator decision kernel: WPF, conventional PF and round robin.

The WPF utility of UE k in slot n is ``(r_k / R_k) * w_k**alpha`` where
``r_k`` is the rate it could get this slot, ``R_k`` its EWMA throughput and
``w_k`` the inverse of its remaining stay normalised to the longest stay.
``alpha = 0`` reduces it to plain proportional fairness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import CapacityTable, enumerate_mappings, gather_index
from .model import Assignment, DegenerateStay


def inst_rate(capacity_bps, remaining_bytes, slot_s):
    """Offloading rate this slot: capacity, capped by what is left to send."""
    if isinstance(capacity_bps, np.ndarray) or isinstance(remaining_bytes, np.ndarray):
        return np.minimum(capacity_bps, 8 * np.asarray(remaining_bytes) / slot_s)
    return min(capacity_bps, 8 * remaining_bytes / slot_s)


def priority_weight(ts_k: float, ts_h: float) -> float:
    if ts_k <= 0:
        raise DegenerateStay(f"stay time {ts_k} leaves the weight undefined")
    return ts_h / ts_k


def priority_weights(stay_s: np.ndarray, ts_h: Optional[float] = None) -> np.ndarray:
    """Vector of ``ts_h / ts_k``; ``ts_h`` defaults to the longest stay.

    A UE with zero remaining stay gets the largest finite weight of the pool
    (1 if there is none).
    """
    stay_s = np.asarray(stay_s, dtype=float)
    if stay_s.size == 0:
        return stay_s.copy()
    if ts_h is None:
        ts_h = float(stay_s.max())
    zero = stay_s <= 0
    w = np.empty_like(stay_s)
    w[~zero] = ts_h / stay_s[~zero]
    if zero.any():
        w[zero] = w[~zero].max() if (~zero).any() else 1.0
    return w


def utility(r_k, avg_rate, w_k, alpha):
    return (r_k / avg_rate) * w_k ** alpha


def update_avg_rate(avg_prev, r_k, scheduled, n_c):
    """EWMA throughput; ``scheduled`` is 1 when the UE was served this slot."""
    return (1.0 - 1.0 / n_c) * avg_prev + (1.0 / n_c) * r_k * scheduled


@dataclass
class SchedulerInputs:
    """Per-slot view of the in-gate UEs, aligned arrays in ascending ``ue_ids``.

    ``capacity_bps`` is only needed for single-AP selection; multi-AP
    selection takes capacities from a :class:`CapacityTable`.
    """

    ue_ids: np.ndarray
    remaining_bytes: np.ndarray
    avg_rate: np.ndarray
    stay_s: np.ndarray
    alpha: float
    slot_s: float
    ts_h: Optional[float] = None
    capacity_bps: Optional[np.ndarray] = None
    slot: int = 0

    def weights(self) -> np.ndarray:
        return priority_weights(self.stay_s, self.ts_h)

    def weight_factor(self) -> np.ndarray:
        # w**0 is exactly 1.0, which keeps alpha = 0 identical to plain PF
        return self.weights() ** self.alpha

    def eligible(self) -> np.ndarray:
        return np.asarray(self.remaining_bytes) > 0


def select_single(inputs: SchedulerInputs) -> Optional[int]:
    """Single-AP argmax of the utility; lowest UE id wins ties."""
    if inputs.capacity_bps is None:
        raise ValueError("select_single needs per-UE capacity_bps")
    r = inst_rate(np.asarray(inputs.capacity_bps, dtype=float), inputs.remaining_bytes, inputs.slot_s)
    u = utility(r, inputs.avg_rate, 1.0, 1.0) * inputs.weight_factor()
    ok = r > 0
    if not ok.any():
        return None
    u = np.where(ok, u, -np.inf)
    return int(inputs.ue_ids[int(np.argmax(u))])


def _lookup(inputs: SchedulerInputs, ue_ids: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(inputs.ue_ids, ue_ids)
    if np.any(pos >= len(inputs.ue_ids)) or np.any(inputs.ue_ids[np.minimum(pos, len(inputs.ue_ids) - 1)] != ue_ids):
        raise KeyError("capacity table lists a UE missing from the scheduler inputs")
    return pos


def _assignment(table: CapacityTable, row: Sequence[int], inputs: SchedulerInputs,
                util: np.ndarray, rate: np.ndarray) -> Assignment:
    """Build an :class:`Assignment` from a local-index mapping row."""
    e = len(table.ue_ids)
    mask = sum(1 << a for a, j in enumerate(row) if j != e)
    out = Assignment()
    for a, j in enumerate(row):
        if j == e:
            continue
        ap = table.ap_ids[a]
        out.pairs[ap] = int(table.ue_ids[j])
        out.capacity_bps[ap] = float(table.by_mask[mask, a, j])
        if table.sinr_by_mask is not None:
            out.sinr_linear[ap] = float(table.sinr_by_mask[mask, a, j])
        out.rate_bps[ap] = float(rate[mask, a, j])
        out.utility[ap] = float(util[mask, a, j])
    return out


def _link_utilities(inputs: SchedulerInputs, table: CapacityTable, pos: Optional[np.ndarray] = None):
    if pos is None:
        pos = _lookup(inputs, table.ue_ids)
    remaining = np.asarray(inputs.remaining_bytes)[pos]
    rate = inst_rate(table.by_mask, remaining, inputs.slot_s)
    util = utility(rate, np.asarray(inputs.avg_rate, dtype=float)[pos], 1.0, 1.0)
    util = util * inputs.weight_factor()[pos]
    return rate, util


def select_multi(inputs: SchedulerInputs, capacity_table: CapacityTable, num_aps: int) -> Assignment:
    """Jointly pick the AP -> UE mapping with the largest summed utility.

    UEs with nothing left to send are never served. Every remaining injective
    mapping, partial ones included, is scored; among equal sums the first in
    lexicographic order (per-AP UE id, idle after all ids) wins.
    """
    if capacity_table.num_aps != num_aps:
        raise ValueError(f"capacity table covers {capacity_table.num_aps} APs, expected {num_aps}")
    pos = _lookup(inputs, capacity_table.ue_ids)
    keep = np.asarray(inputs.remaining_bytes)[pos] > 0
    table = capacity_table
    if not keep.all():
        table, pos = capacity_table.subset(keep), pos[keep]
    e = len(table.ue_ids)
    if e == 0:
        return Assignment()
    rate, util = _link_utilities(inputs, table, pos)
    padded = np.zeros(util.shape[:2] + (e + 1,))
    padded[:, :, :e] = util
    totals = padded.ravel()[gather_index(num_aps, e)].sum(axis=0)
    best = int(np.argmax(totals))
    rows, _ = enumerate_mappings(num_aps, e)
    return _assignment(table, rows[best], inputs, util, rate)


def evaluate_mapping(inputs: SchedulerInputs, capacity_table: CapacityTable,
                     mapping: Sequence[Optional[int]]) -> Assignment:
    """Assignment figures for a mapping chosen elsewhere (e.g. round robin)."""
    local = {int(u): j for j, u in enumerate(capacity_table.ue_ids)}
    e = len(capacity_table.ue_ids)
    row = [e if u is None else local[u] for u in mapping]
    rate, util = _link_utilities(inputs, capacity_table)
    return _assignment(capacity_table, row, inputs, util, rate)


class RoundRobin:
    """Cyclic service in UE-id order, skipping UEs with nothing to send."""

    def __init__(self):
        self.cursor = -1

    def select(self, ue_ids: Sequence[int], eligible: Sequence[bool], num_aps: int,
               distance: Optional[np.ndarray] = None) -> tuple[Optional[int], ...]:
        """Return a per-AP mapping (UE id or None) and advance the cursor.

        ``distance[a, i]`` is the AP-UE distance used to pair APs with the
        chosen UEs nearest-first; without it APs are filled in id order.
        """
        ids = [int(u) for u, ok in zip(ue_ids, eligible) if ok]
        if not ids:
            return (None,) * num_aps
        ids.sort()
        start = next((i for i, u in enumerate(ids) if u > self.cursor), 0)
        chosen = [ids[(start + i) % len(ids)] for i in range(min(num_aps, len(ids)))]
        self.cursor = chosen[-1]
        mapping: list[Optional[int]] = [None] * num_aps
        if distance is None:
            for a, u in enumerate(chosen):
                mapping[a] = u
            return tuple(mapping)
        col = {int(u): i for i, u in enumerate(ue_ids)}
        pairs = sorted((float(distance[a, col[u]]), a, u) for a in range(num_aps) for u in chosen)
        used_ap, used_ue = set(), set()
        for _, a, u in pairs:
            if a in used_ap or u in used_ue:
                continue
            mapping[a] = u
            used_ap.add(a)
            used_ue.add(u)
        return tuple(mapping)


def round_robin(ue_ids: Sequence[int], eligible: Sequence[bool], cursor: int, num_aps: int,
                distance: Optional[np.ndarray] = None) -> tuple[tuple[Optional[int], ...], int]:
    """Functional form of :class:`RoundRobin`: returns ``(mapping, new_cursor)``."""
    rr = RoundRobin()
    rr.cursor = cursor
    mapping = rr.select(ue_ids, eligible, num_aps, distance)
    return mapping, rr.cursor
