"""Domain types and scenario configuration for the mmWave gate simulator.

Every tunable quantity of an experiment lives in :class:`ScenarioConfig` and
its nested sections. Configs are frozen dataclasses so a validated config can
be shared read-only between parallel runs.

Units: bytes are Python ints, rates are bits/s floats, times are seconds.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

GB = 1_000_000_000
KMH = 1000.0 / 3600.0

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]


class InvalidConfig(ValueError):
    """Raised by :func:`validate`; ``errors`` lists ``(field, reason)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = list(errors)
        lines = "; ".join(f"{name}: {why}" for name, why in self.errors)
        super().__init__(f"invalid config: {lines}")


class ParamError(ValueError):
    pass


class NotInGate(RuntimeError):
    pass


class NotServed(KeyError):
    pass


class DegenerateStay(ZeroDivisionError):
    pass


class MetricUndefined(ArithmeticError):
    pass


class SchedulerKind(str, enum.Enum):
    WPF = "wpf"
    PF = "pf"
    RR = "rr"


class MobilityMode(str, enum.Enum):
    RANDOM_WALK = "random_walk"
    DIRECTED = "directed"


class FileState(str, enum.Enum):
    PENDING = "pending"
    MACRO_ACTIVE = "macro_active"
    GATE_ACTIVE = "gate_active"
    DONE = "done"


@dataclass(frozen=True)
class GateGeometry:
    """Rectangular gate floor plan; x runs from entrance to exit.

    ``ap_positions`` of ``None`` means "evenly spaced along the centreline at
    ceiling height", resolved by :func:`validate` for the configured AP count.
    """

    width_m: float = 20.0
    depth_m: float = 10.0
    entrance: Point2 = (0.0, 5.0)
    exit: Point2 = (20.0, 5.0)
    ap_positions: Optional[tuple[Point3, ...]] = None
    ceiling_m: float = 3.0
    ue_height_m: float = 1.0

    def default_ap_positions(self, n: int) -> tuple[Point3, ...]:
        ex, ey = self.entrance
        xx, xy = self.exit
        out = []
        for i in range(n):
            frac = (i + 0.5) / n
            out.append((ex + frac * (xx - ex), ey + frac * (xy - ey), self.ceiling_m))
        return tuple(out)


@dataclass(frozen=True)
class MobilityConfig:
    mode: MobilityMode = MobilityMode.RANDOM_WALK
    mean_speed_mps: float = 5.0 * KMH
    speed_ratio: float = 1.0
    heading_jitter_rad: float = 0.3
    # fraction of the heading error towards the exit removed each step
    exit_bias: float = 0.1
    entry_jitter_m: float = 0.5


@dataclass(frozen=True)
class ChannelConfig:
    carrier_hz: float = 60e9
    main_lobe_gain_db: float = 15.0
    side_lobe_gain_db: float = -5.0
    noise_figure_db: float = 10.0
    blockage_prob_max: float = 0.2
    blockage_loss_db: float = 25.0
    pathloss_exponent: float = 2.0


@dataclass(frozen=True)
class EnergyConfig:
    ue_power_mmw_w: float = 2.0
    ue_power_macro_w: float = 2.0


@dataclass(frozen=True)
class ScenarioConfig:
    num_aps: int = 4
    num_ues: int = 14
    grt_s: float = 1800.0
    slot_s: float = 0.003
    mean_file_bytes: float = 1.62 * GB
    mean_iat_s: float = 600.0
    rho: float = 1.5
    delta_frac: float = 0.1
    macro_rate_bps: float = 100e6
    macro_tx_dbm: float = 46.0
    ap_tx_dbm: float = 10.0
    ap_bandwidth_hz: float = 2.16e9
    bw_eff: float = 0.7
    snr_eff: float = 1.0
    alpha: float = 1.0
    n_c: float = 100.0
    r_init_bps: float = 1e3
    scheduler: SchedulerKind = SchedulerKind.WPF
    rng_seed: int = 1
    # "dynamic": longest stay among in-gate UEs each slot; "static": slowest UE's stay at entry
    ts_h_mode: str = "dynamic"
    # "deadline": earliest remaining deadline first; "size": smallest remaining size first
    srtf_order: str = "deadline"
    gate_geometry: GateGeometry = field(default_factory=GateGeometry)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)

    def replace(self, **changes) -> "ScenarioConfig":
        """``dataclasses.replace`` that also accepts ``section__field`` keys."""
        nested: dict[str, dict] = {}
        flat = {}
        for key, value in changes.items():
            if "__" in key:
                section, name = key.split("__", 1)
                nested.setdefault(section, {})[name] = value
            else:
                flat[key] = value
        for section, values in nested.items():
            flat[section] = dataclasses.replace(getattr(self, section), **values)
        return dataclasses.replace(self, **flat)

    @property
    def ap_positions(self) -> tuple[Point3, ...]:
        pos = self.gate_geometry.ap_positions
        if pos is None:
            return self.gate_geometry.default_ap_positions(self.num_aps)
        return tuple(pos[: self.num_aps])


@dataclass
class DelayedFile:
    id: int
    owner_ue: int
    total_bytes: int
    fat_s: float
    deadline_s: float
    remaining_bytes: int = -1
    bytes_via_gate: int = 0
    bytes_via_macro: int = 0
    state: FileState = FileState.PENDING

    def __post_init__(self):
        if self.remaining_bytes < 0:
            self.remaining_bytes = self.total_bytes

    def conserved(self) -> bool:
        return (
            self.remaining_bytes >= 0
            and self.bytes_via_gate + self.bytes_via_macro + self.remaining_bytes == self.total_bytes
        )


@dataclass
class UserEquipment:
    id: int
    position: Point2
    heading: float
    speed_mps: float
    file_table: list[DelayedFile] = field(default_factory=list)
    alloc_slots: int = 0
    bytes_offloaded: int = 0
    avg_rate: float = 0.0
    in_gate: bool = False
    exit_time_s: Optional[float] = None
    entry_time_s: Optional[float] = None

    @property
    def stay_s(self) -> Optional[float]:
        if self.entry_time_s is None or self.exit_time_s is None:
            return None
        return self.exit_time_s - self.entry_time_s


@dataclass
class Assignment:
    """One slot's AP -> UE mapping with the per-link figures behind it."""

    pairs: dict[int, int] = field(default_factory=dict)
    sinr_linear: dict[int, float] = field(default_factory=dict)
    capacity_bps: dict[int, float] = field(default_factory=dict)
    rate_bps: dict[int, float] = field(default_factory=dict)
    utility: dict[int, float] = field(default_factory=dict)

    @property
    def served(self) -> list[int]:
        return [self.pairs[a] for a in sorted(self.pairs)]

    @property
    def total_utility(self) -> float:
        total = 0.0
        for a in sorted(self.pairs):
            total += self.utility.get(a, 0.0)
        return total

    def mapping(self, num_aps: int) -> tuple[Optional[int], ...]:
        return tuple(self.pairs.get(a) for a in range(num_aps))


@dataclass
class UserRow:
    ue_id: int
    alloc_slots: int
    bytes_offloaded: int
    stay_s: float
    speed_mps: float


@dataclass
class MetricsReport:
    gofe: float
    f_alloc: float
    f_byte: float
    norm_energy: float
    total_generated_bytes: int
    bytes_via_gate: int
    bytes_via_macro: int
    undelivered_bytes: int
    gate_active_s: float
    macro_active_s: float
    users: list[UserRow] = field(default_factory=list)
    trace: Optional[list] = None


def _finite_positive(errors, name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        errors.append((name, f"must be a finite number, got {value!r}"))
    elif value <= 0:
        errors.append((name, f"must be > 0, got {value!r}"))


def _finite_nonneg(errors, name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        errors.append((name, f"must be a finite number, got {value!r}"))
    elif value < 0:
        errors.append((name, f"must be >= 0, got {value!r}"))


def _is_count(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check every invariant and return ``cfg`` with AP positions resolved.

    All violations are collected before raising, so the :class:`InvalidConfig`
    message names every offending field at once.
    """
    errors: list[tuple[str, str]] = []

    if not _is_count(cfg.num_aps) or not 1 <= cfg.num_aps <= 4:
        errors.append(("num_aps", f"must be an integer in 1..4, got {cfg.num_aps!r}"))
    if not _is_count(cfg.num_ues) or cfg.num_ues < 1:
        errors.append(("num_ues", f"must be a positive integer, got {cfg.num_ues!r}"))
    if not _is_count(cfg.rng_seed) or not 0 <= cfg.rng_seed < 2**64:
        errors.append(("rng_seed", f"must be an unsigned 64-bit integer, got {cfg.rng_seed!r}"))

    for name in ("grt_s", "slot_s", "mean_file_bytes", "mean_iat_s", "macro_rate_bps",
                 "ap_bandwidth_hz", "bw_eff", "snr_eff", "r_init_bps"):
        _finite_positive(errors, name, getattr(cfg, name))
    for name in ("macro_tx_dbm", "ap_tx_dbm"):
        value = getattr(cfg, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            errors.append((name, f"must be a finite number, got {value!r}"))
    _finite_nonneg(errors, "rho", cfg.rho)
    _finite_nonneg(errors, "delta_frac", cfg.delta_frac)
    if (isinstance(cfg.rho, (int, float)) and isinstance(cfg.delta_frac, (int, float))
            and math.isfinite(cfg.rho) and math.isfinite(cfg.delta_frac)
            and cfg.rho > 1 and not cfg.delta_frac < (cfg.rho - 1) / 2):
        errors.append(("delta_frac", f"must be < (rho - 1)/2 = {(cfg.rho - 1) / 2:g} for rho={cfg.rho:g}"))

    if not isinstance(cfg.alpha, (int, float)) or not math.isfinite(cfg.alpha) or not 0 <= cfg.alpha <= 1:
        errors.append(("alpha", f"must lie in [0, 1], got {cfg.alpha!r}"))
    if not isinstance(cfg.n_c, (int, float)) or not math.isfinite(cfg.n_c) or cfg.n_c < 1:
        errors.append(("n_c", f"must be >= 1, got {cfg.n_c!r}"))

    try:
        SchedulerKind(cfg.scheduler)
    except ValueError:
        errors.append(("scheduler", f"must be one of wpf, pf, rr; got {cfg.scheduler!r}"))
    if cfg.ts_h_mode not in ("dynamic", "static"):
        errors.append(("ts_h_mode", f"must be 'dynamic' or 'static', got {cfg.ts_h_mode!r}"))
    if cfg.srtf_order not in ("deadline", "size"):
        errors.append(("srtf_order", f"must be 'deadline' or 'size', got {cfg.srtf_order!r}"))

    geo = cfg.gate_geometry
    _finite_positive(errors, "gate_geometry.width_m", geo.width_m)
    _finite_positive(errors, "gate_geometry.depth_m", geo.depth_m)
    _finite_positive(errors, "gate_geometry.ceiling_m", geo.ceiling_m)
    _finite_nonneg(errors, "gate_geometry.ue_height_m", geo.ue_height_m)
    geo_ok = not any(name.startswith("gate_geometry.") for name, _ in errors)
    if geo_ok:
        for name in ("entrance", "exit"):
            pt = getattr(geo, name)
            if len(pt) != 2 or not all(math.isfinite(c) for c in pt):
                errors.append((f"gate_geometry.{name}", f"must be a finite 2-D point, got {pt!r}"))
            elif not (0 <= pt[0] <= geo.width_m and 0 <= pt[1] <= geo.depth_m):
                errors.append((f"gate_geometry.{name}", f"{pt!r} lies outside the gate box"))
        if tuple(geo.entrance) == tuple(geo.exit):
            errors.append(("gate_geometry.exit", "must differ from the entrance"))
        if geo.ap_positions is not None:
            for i, p in enumerate(geo.ap_positions):
                if len(p) != 3 or not all(math.isfinite(c) for c in p):
                    errors.append((f"gate_geometry.ap_positions[{i}]", f"must be a finite 3-D point, got {p!r}"))
                elif not (0 <= p[0] <= geo.width_m and 0 <= p[1] <= geo.depth_m and 0 < p[2] <= geo.ceiling_m):
                    errors.append((f"gate_geometry.ap_positions[{i}]", f"{p!r} lies outside the gate box"))
            if _is_count(cfg.num_aps) and cfg.num_aps > len(geo.ap_positions):
                errors.append(("num_aps", f"exceeds the {len(geo.ap_positions)} configured AP positions"))

    mob = cfg.mobility
    try:
        MobilityMode(mob.mode)
    except ValueError:
        errors.append(("mobility.mode", f"must be random_walk or directed, got {mob.mode!r}"))
    _finite_positive(errors, "mobility.mean_speed_mps", mob.mean_speed_mps)
    if not isinstance(mob.speed_ratio, (int, float)) or not math.isfinite(mob.speed_ratio) or mob.speed_ratio < 1:
        errors.append(("mobility.speed_ratio", f"must be >= 1, got {mob.speed_ratio!r}"))
    _finite_nonneg(errors, "mobility.heading_jitter_rad", mob.heading_jitter_rad)
    if not isinstance(mob.exit_bias, (int, float)) or not (0 < mob.exit_bias <= 1):
        errors.append(("mobility.exit_bias", f"must lie in (0, 1], got {mob.exit_bias!r}"))
    _finite_nonneg(errors, "mobility.entry_jitter_m", mob.entry_jitter_m)

    ch = cfg.channel
    _finite_positive(errors, "channel.carrier_hz", ch.carrier_hz)
    for name in ("main_lobe_gain_db", "side_lobe_gain_db", "noise_figure_db", "blockage_loss_db"):
        value = getattr(ch, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            errors.append((f"channel.{name}", f"must be finite, got {value!r}"))
    if not isinstance(ch.blockage_prob_max, (int, float)) or not 0 <= ch.blockage_prob_max <= 1:
        errors.append(("channel.blockage_prob_max", f"must lie in [0, 1], got {ch.blockage_prob_max!r}"))
    if not isinstance(ch.pathloss_exponent, (int, float)) or not math.isfinite(ch.pathloss_exponent) \
            or ch.pathloss_exponent < 2:
        errors.append(("channel.pathloss_exponent", f"must be >= 2, got {ch.pathloss_exponent!r}"))

    _finite_positive(errors, "energy.ue_power_mmw_w", cfg.energy.ue_power_mmw_w)
    _finite_positive(errors, "energy.ue_power_macro_w", cfg.energy.ue_power_macro_w)

    if errors:
        raise InvalidConfig(errors)

    return dataclasses.replace(
        cfg,
        scheduler=SchedulerKind(cfg.scheduler),
        mobility=dataclasses.replace(mob, mode=MobilityMode(mob.mode)),
        gate_geometry=dataclasses.replace(
            geo,
            entrance=tuple(float(c) for c in geo.entrance),
            exit=tuple(float(c) for c in geo.exit),
            ap_positions=tuple(tuple(float(c) for c in p) for p in cfg.ap_positions),
        ),
    )
