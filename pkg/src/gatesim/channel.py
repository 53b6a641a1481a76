"""Parametric 60 GHz link model: path loss, blockage, SINR and capacity.

APs point their main lobe at the UE they serve; every other active AP reaches
a UE through side lobes at both ends. All APs share one channel.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from .model import Assignment, ChannelConfig, NotServed, ScenarioConfig

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0
MIN_DISTANCE_M = 0.1
REF_DISTANCE_M = 1.0


def path_loss_db(distance_m, cfg: ChannelConfig):
    """Log-distance path loss anchored to free space at 1 m.

    Works on scalars and numpy arrays; distances below 0.1 m are clamped.
    """
    ref = 20.0 * math.log10(4.0 * math.pi * REF_DISTANCE_M * cfg.carrier_hz / SPEED_OF_LIGHT)
    if isinstance(distance_m, np.ndarray):
        d = np.maximum(distance_m, MIN_DISTANCE_M)
        return ref + 10.0 * cfg.pathloss_exponent * np.log10(d / REF_DISTANCE_M)
    d = max(float(distance_m), MIN_DISTANCE_M)
    return ref + 10.0 * cfg.pathloss_exponent * math.log10(d / REF_DISTANCE_M)


def noise_dbm(cfg: ScenarioConfig) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(cfg.ap_bandwidth_hz) + cfg.channel.noise_figure_db


def capacity_bps(sinr_linear, cfg: ScenarioConfig):
    """Shannon capacity scaled by bandwidth and SNR efficiencies."""
    if isinstance(sinr_linear, np.ndarray):
        return cfg.bw_eff * cfg.ap_bandwidth_hz * np.log2(1.0 + sinr_linear / cfg.snr_eff)
    return cfg.bw_eff * cfg.ap_bandwidth_hz * math.log2(1.0 + sinr_linear / cfg.snr_eff)


def _distance(ap: Sequence[float], ue: Sequence[float], ue_height: float) -> float:
    return math.sqrt((ap[0] - ue[0]) ** 2 + (ap[1] - ue[1]) ** 2 + (ap[2] - ue_height) ** 2)


def _rx_dbm(ap, ue, blocked: bool, gain_db: float, cfg: ScenarioConfig) -> float:
    d = _distance(ap, ue, cfg.gate_geometry.ue_height_m)
    loss = path_loss_db(d, cfg.channel) + (cfg.channel.blockage_loss_db if blocked else 0.0)
    return cfg.ap_tx_dbm + 2.0 * gain_db - loss


def sinr_linear(assignment: Assignment, ue_id: int, aps: Sequence[Sequence[float]],
                ues: Mapping[int, Sequence[float]], blockage_state, cfg: ScenarioConfig) -> float:
    """SINR of ``ue_id`` under ``assignment``, link by link.

    ``aps`` holds 3-D AP positions indexed by AP id, ``ues`` maps UE id to a
    2-D floor position and ``blockage_state[ap][ue]`` flags blocked links
    (``None`` means nothing is blocked).
    """
    serving = [a for a, u in assignment.pairs.items() if u == ue_id]
    if not serving:
        raise NotServed(ue_id)
    a_srv = serving[0]
    pos = ues[ue_id]

    def blocked(a):
        return bool(blockage_state[a][ue_id]) if blockage_state is not None else False

    ch = cfg.channel
    signal_mw = 10.0 ** (_rx_dbm(aps[a_srv], pos, blocked(a_srv), ch.main_lobe_gain_db, cfg) / 10.0)
    interference_mw = 0.0
    for a in sorted(assignment.pairs):
        if a == a_srv:
            continue
        interference_mw += 10.0 ** (_rx_dbm(aps[a], pos, blocked(a), ch.side_lobe_gain_db, cfg) / 10.0)
    noise_mw = 10.0 ** (noise_dbm(cfg) / 10.0)
    return signal_mw / (interference_mw + noise_mw)


def draw_link_probabilities(num_aps: int, num_ues: int, cfg: ChannelConfig,
                            rng: np.random.Generator) -> np.ndarray:
    """Per-link blockage probability, uniform on ``[0, blockage_prob_max]``, fixed per traversal."""
    return rng.uniform(0.0, cfg.blockage_prob_max, size=(num_aps, num_ues))


def sample_blockage(p_link: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One slot of independent Bernoulli blockage, shape ``(num_aps, num_ues)``."""
    return rng.random(p_link.shape) < p_link


class BlockageStream:
    """Per-slot blockage drawn in fixed-size chunks.

    The state of slot ``n`` depends only on the stream and ``n``, so skipping
    idle slots (or changing scheduler) never shifts later draws.
    """

    def __init__(self, p_link: np.ndarray, rng: np.random.Generator, chunk: int = 512):
        self.p_link = p_link
        self.rng = rng
        self.chunk = chunk
        self._chunks: list[np.ndarray] = []

    def __getitem__(self, slot: int) -> np.ndarray:
        c, i = divmod(slot, self.chunk)
        while len(self._chunks) <= c:
            u = self.rng.random((self.chunk,) + self.p_link.shape)
            self._chunks.append(u < self.p_link)
        return self._chunks[c][i]


def link_powers_mw(ap_pos: np.ndarray, ue_xy: np.ndarray, blocked: np.ndarray,
                   cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Received main-lobe and side-lobe powers (mW), both shaped ``(A, K)``."""
    dx = ap_pos[:, 0:1] - ue_xy[None, :, 0]
    dy = ap_pos[:, 1:2] - ue_xy[None, :, 1]
    dz = ap_pos[:, 2:3] - cfg.gate_geometry.ue_height_m
    d = np.sqrt(dx * dx + dy * dy + dz * dz)
    ch = cfg.channel
    loss = path_loss_db(d, ch) + np.where(blocked, ch.blockage_loss_db, 0.0)
    signal = 10.0 ** ((cfg.ap_tx_dbm + 2.0 * ch.main_lobe_gain_db - loss) / 10.0)
    interf = 10.0 ** ((cfg.ap_tx_dbm + 2.0 * ch.side_lobe_gain_db - loss) / 10.0)
    return signal, interf


@lru_cache(maxsize=None)
def _mask_bits(num_aps: int) -> np.ndarray:
    masks = np.arange(1 << num_aps)
    return ((masks[:, None] >> np.arange(num_aps)[None, :]) & 1).astype(float)


@lru_cache(maxsize=None)
def enumerate_mappings(num_aps: int, num_ues: int) -> tuple[np.ndarray, np.ndarray]:
    """Every injective AP -> UE mapping except the all-idle one.

    Rows hold a local UE index per AP, ``num_ues`` meaning idle, and come in
    lexicographic order (idle sorting after every UE). Also returns each
    row's active-AP bitmask.
    """
    idle = num_ues
    arr = np.indices((num_ues + 1,) * num_aps).reshape(num_aps, -1).T
    ok = np.any(arr != idle, axis=1)
    for a, b in itertools.combinations(range(num_aps), 2):
        ok &= (arr[:, a] != arr[:, b]) | (arr[:, a] == idle)
    arr = np.ascontiguousarray(arr[ok], dtype=np.intp)
    masks = ((arr != idle) * (1 << np.arange(num_aps))).sum(axis=1).astype(np.intp)
    arr.setflags(write=False)
    masks.setflags(write=False)
    return arr, masks


@lru_cache(maxsize=None)
def gather_index(num_aps: int, num_ues: int) -> np.ndarray:
    """Flat indices into a ``(2**A, A, E+1)`` array picking each row's per-AP link."""
    rows, masks = enumerate_mappings(num_aps, num_ues)
    width = num_ues + 1
    idx = (masks[None, :] * (num_aps * width)
           + np.arange(num_aps)[:, None] * width + rows.T)
    idx = np.ascontiguousarray(idx)
    idx.setflags(write=False)
    return idx


class CapacityTable:
    """Capacity of every link under every injective AP -> UE configuration.

    A UE's SINR depends only on its serving AP and the set of other active
    APs, so the table stores ``by_mask[mask, ap, j]``: capacity of local UE
    ``j`` served by ``ap`` while exactly the APs in ``mask`` transmit (zero
    when ``ap`` is not in ``mask``). Mappings are enumerated lazily.
    """

    def __init__(self, ap_ids: Sequence[int], ue_ids: Sequence[int], by_mask: np.ndarray,
                 sinr_by_mask: Optional[np.ndarray] = None):
        self.ap_ids = tuple(ap_ids)
        self.ue_ids = np.asarray(ue_ids, dtype=np.intp)
        self.by_mask = by_mask
        self.sinr_by_mask = sinr_by_mask

    @property
    def num_aps(self) -> int:
        return len(self.ap_ids)

    def _rows(self):
        return enumerate_mappings(self.num_aps, len(self.ue_ids))

    def __len__(self) -> int:
        return len(self._rows()[0])

    def full_mapping_count(self) -> int:
        rows, _ = self._rows()
        return int(np.all(rows != len(self.ue_ids), axis=1).sum())

    def _decode(self, row) -> tuple[Optional[int], ...]:
        e = len(self.ue_ids)
        return tuple(None if j == e else int(self.ue_ids[j]) for j in row)

    def capacities(self, mapping: Sequence[Optional[int]]) -> dict[int, float]:
        """Per-AP capacity for a mapping given as a UE id (or None) per AP."""
        local = {int(u): j for j, u in enumerate(self.ue_ids)}
        mask = sum(1 << a for a, u in enumerate(mapping) if u is not None)
        return {self.ap_ids[a]: float(self.by_mask[mask, a, local[u]])
                for a, u in enumerate(mapping) if u is not None}

    def sinr(self, mapping: Sequence[Optional[int]]) -> dict[int, float]:
        local = {int(u): j for j, u in enumerate(self.ue_ids)}
        mask = sum(1 << a for a, u in enumerate(mapping) if u is not None)
        src = self.sinr_by_mask if self.sinr_by_mask is not None else np.full_like(self.by_mask, np.nan)
        return {self.ap_ids[a]: float(src[mask, a, local[u]])
                for a, u in enumerate(mapping) if u is not None}

    def entries(self) -> Iterator[tuple[tuple[Optional[int], ...], dict[int, float]]]:
        rows, _ = self._rows()
        for row in rows:
            mapping = self._decode(row)
            yield mapping, self.capacities(mapping)

    def subset(self, keep: np.ndarray) -> "CapacityTable":
        """Table restricted to the UEs selected by boolean ``keep``."""
        sinr = None if self.sinr_by_mask is None else self.sinr_by_mask[:, :, keep]
        return CapacityTable(self.ap_ids, self.ue_ids[keep], self.by_mask[:, :, keep], sinr)


def build_capacity_table(ue_ids: Sequence[int], ue_xy: np.ndarray, ap_pos: np.ndarray,
                         blockage_state: Optional[np.ndarray], cfg: ScenarioConfig) -> CapacityTable:
    """Capacity lookup for all AP-UE configurations.

    ``ue_xy`` is ``(K, 2)`` for the listed UEs, ``ap_pos`` is ``(A, 3)`` and
    ``blockage_state`` is ``(A, K)`` restricted to the same UEs.
    """
    ap_pos = np.asarray(ap_pos, dtype=float)
    ue_xy = np.asarray(ue_xy, dtype=float).reshape(-1, 2)
    A, K = len(ap_pos), len(ue_xy)
    if blockage_state is None:
        blockage_state = np.zeros((A, K), dtype=bool)
    signal, interf = link_powers_mw(ap_pos, ue_xy, blockage_state, cfg)
    bits = _mask_bits(A)
    # accumulate interferers in AP order so values match a link-by-link sum
    total_interf = np.zeros((1 << A, A, K))
    for b in range(A):
        others = bits[:, b:b + 1] * (np.arange(A) != b)[None, :]
        total_interf += others[:, :, None] * interf[b][None, None, :]
    noise_mw = 10.0 ** (noise_dbm(cfg) / 10.0)
    sinr = signal[None, :, :] / (total_interf + noise_mw)
    sinr *= bits[:, :, None]
    cap = capacity_bps(sinr, cfg)
    return CapacityTable(range(A), ue_ids, cap, sinr)
