"""UE movement through the gate and the stay-time expectation."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .model import GateGeometry, MobilityConfig, MobilityMode, NotInGate, ScenarioConfig, UserEquipment


def speed_profile(mean_speed: float, speed_ratio: float, n: int) -> np.ndarray:
    """``n`` speeds spaced linearly with max/min = ``speed_ratio`` and the given mean.

    UE 0 is the slowest.
    """
    if n == 1:
        return np.array([float(mean_speed)])
    s_min = 2.0 * mean_speed / (1.0 + speed_ratio)
    s_max = speed_ratio * s_min
    if speed_ratio == 1:
        return np.full(n, float(mean_speed))
    return np.linspace(s_min, s_max, n)


def init_users(cfg: ScenarioConfig, rng: np.random.Generator) -> list[UserEquipment]:
    geo = cfg.gate_geometry
    mob = cfg.mobility
    speeds = speed_profile(mob.mean_speed_mps, mob.speed_ratio, cfg.num_ues)
    ex, ey = geo.entrance
    ux, uy = _axis(geo)
    # lateral = perpendicular to the entrance->exit axis
    lateral = rng.uniform(-mob.entry_jitter_m, mob.entry_jitter_m, size=cfg.num_ues)
    users = []
    for k in range(cfg.num_ues):
        x = min(max(ex - uy * lateral[k], 0.0), geo.width_m)
        y = min(max(ey + ux * lateral[k], 0.0), geo.depth_m)
        heading = math.atan2(geo.exit[1] - y, geo.exit[0] - x)
        users.append(UserEquipment(id=k, position=(x, y), heading=heading,
                                   speed_mps=float(speeds[k]), in_gate=True))
    return users


def _axis(geo: GateGeometry) -> tuple[float, float]:
    dx = geo.exit[0] - geo.entrance[0]
    dy = geo.exit[1] - geo.entrance[1]
    n = math.hypot(dx, dy)
    return dx / n, dy / n


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def step_arrays(x: np.ndarray, y: np.ndarray, heading: np.ndarray, speed: np.ndarray,
                dt_s: float, geo: GateGeometry, mob: MobilityConfig,
                rng: np.random.Generator):
    """Vectorised move of every UE in the arrays by one step of ``dt_s``.

    Returns new ``(x, y, heading, exited)``. Exited UEs keep the position at
    which they crossed the exit plane.
    """
    gx, gy = geo.exit
    to_exit = np.arctan2(gy - y, gx - x)
    if mob.mode == MobilityMode.DIRECTED:
        heading = to_exit
    else:
        jitter = rng.uniform(-mob.heading_jitter_rad, mob.heading_jitter_rad, size=x.shape)
        heading = heading + jitter
        heading = _wrap(heading + mob.exit_bias * _wrap(to_exit - heading))
    step = speed * dt_s
    nx = x + step * np.cos(heading)
    ny = y + step * np.sin(heading)

    ux, uy = _axis(geo)
    ex, ey = geo.entrance
    length = math.hypot(gx - ex, gy - ey)
    progress = (nx - ex) * ux + (ny - ey) * uy
    exited = progress >= length - 1e-9
    if mob.mode == MobilityMode.DIRECTED:
        # cannot overshoot the exit point itself
        exited |= step >= np.hypot(gx - x, gy - y)

    # reflect off the box walls
    low_x = nx < 0
    nx = np.where(low_x, -nx, nx)
    high_x = nx > geo.width_m
    nx = np.where(high_x, 2 * geo.width_m - nx, nx)
    flip_x = low_x | high_x
    heading = np.where(flip_x, np.pi - heading, heading)
    low_y = ny < 0
    ny = np.where(low_y, -ny, ny)
    high_y = ny > geo.depth_m
    ny = np.where(high_y, 2 * geo.depth_m - ny, ny)
    heading = np.where(low_y | high_y, -heading, heading)
    return nx, ny, _wrap(heading), exited


def step(ue: UserEquipment, dt_s: float, geometry: GateGeometry, cfg: ScenarioConfig,
         rng: np.random.Generator, now_s: float = 0.0) -> UserEquipment:
    """Advance one UE by ``dt_s``; records ``exit_time_s = now_s + dt_s`` on exit."""
    if not ue.in_gate or dt_s == 0:
        return ue
    nx, ny, nh, exited = step_arrays(
        np.array([ue.position[0]]), np.array([ue.position[1]]), np.array([ue.heading]),
        np.array([ue.speed_mps]), dt_s, geometry, cfg.mobility, rng)
    ue.position = (float(nx[0]), float(ny[0]))
    ue.heading = float(nh[0])
    if exited[0]:
        ue.in_gate = False
        ue.exit_time_s = now_s + dt_s
    return ue


def stay_times(x, y, speed, geo: GateGeometry) -> np.ndarray:
    """Expected remaining stay: straight-line distance to the exit over speed."""
    return np.hypot(geo.exit[0] - x, geo.exit[1] - y) / speed


def expected_stay(ue: UserEquipment, geometry: GateGeometry,
                  avg_speed: Optional[float] = None) -> float:
    if not ue.in_gate:
        raise NotInGate(f"UE {ue.id} has left the gate")
    v = ue.speed_mps if avg_speed is None else avg_speed
    d = math.hypot(geometry.exit[0] - ue.position[0], geometry.exit[1] - ue.position[1])
    return d / v
