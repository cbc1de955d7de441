"""Synthetic billboard/trajectory instance generation.

Produces CSV files in the corpus formats, byte-identical for a fixed seed.
Default placement is uniform over the geo box with random-waypoint user
records. With ``hotspots > 0``, billboards and user waypoints concentrate
in a few separated clumps whose popularity is skewed, which engineers the
influence-overlap structure the clustering pipelines exploit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Billboard, TrajectoryRecord, write_billboards, write_trajectories
from .errors import ValidationError

# ~50 m offsets keep every point of a clump within the default 100 m radius
HOTSPOT_RADIUS_M = 50.0
M_PER_DEG_LAT = 111_320.0

# fraction of records made away from the user's home hotspot; gives clusters
# a small cross overlap without dissolving the community structure
COMMUTER_RATE = 0.15


@dataclass
class SyntheticInstance:
    billboards: list[Billboard]
    trajectories: list[TrajectoryRecord]


def _make_instance(n_billboards, n_users, records_per_user, horizon,
                   geo_box, panel_size_range, seed, hotspots) -> SyntheticInstance:
    lat_min, lon_min, lat_max, lon_max = geo_box
    if lat_min >= lat_max or lon_min >= lon_max:
        raise ValidationError(f"degenerate geo box {geo_box}")
    if n_billboards < 1:
        raise ValidationError("need at least one billboard")
    if n_users < 0 or horizon < 1:
        raise ValidationError("counts must be non-negative and horizon positive")
    if n_users > 0 and records_per_user < 1:
        raise ValidationError("records_per_user must be positive")
    lo, hi = panel_size_range
    if lo <= 0 or hi < lo:
        raise ValidationError(f"bad panel size range {panel_size_range}")

    rng = np.random.default_rng(seed)
    mid_lat = 0.5 * (lat_min + lat_max)
    dlat = HOTSPOT_RADIUS_M / M_PER_DEG_LAT
    dlon = HOTSPOT_RADIUS_M / (M_PER_DEG_LAT * max(0.1, np.cos(np.radians(mid_lat))))

    if hotspots > 0:
        centers = np.column_stack([
            rng.uniform(lat_min + dlat, lat_max - dlat, size=hotspots),
            rng.uniform(lon_min + dlon, lon_max - dlon, size=hotspots),
        ])
        # popularity skew: a few major centers hold most traffic, the rest
        # form a thin tail (think downtown vs. outskirts)
        major = max(1, -(-hotspots // 4))
        weights = np.where(np.arange(hotspots) < major, 10.0, 0.3)
        weights /= weights.sum()
    else:
        centers = None
        weights = None

    def point(spot=None):
        if spot is None:
            return rng.uniform(lat_min, lat_max), rng.uniform(lon_min, lon_max)
        clat, clon = centers[spot]
        return (clat + rng.uniform(-dlat, dlat), clon + rng.uniform(-dlon, dlon))

    billboards = []
    for i in range(n_billboards):
        spot = i % hotspots if hotspots > 0 else None
        lat, lon = point(spot)
        size = rng.uniform(lo, hi)
        billboards.append(Billboard(f"b{i}", round(lat, 6), round(lon, 6),
                                    round(size, 3), 1.0))

    trajectories = []
    for j in range(n_users):
        home = int(rng.choice(hotspots, p=weights)) if hotspots > 0 else None
        t = int(rng.integers(0, horizon))
        for _ in range(records_per_user):
            spot = home
            if hotspots > 1 and rng.random() < COMMUTER_RATE:
                spot = int(rng.integers(0, hotspots))  # occasional trip elsewhere
            lat, lon = point(spot)
            dur = int(rng.integers(5, 41))
            t_start = t % horizon
            t_end = min(t_start + dur, horizon)
            trajectories.append(TrajectoryRecord(f"u{j}", round(lat, 6), round(lon, 6),
                                                 t_start, t_end))
            t = t_start + dur + int(rng.integers(0, 61))
    return SyntheticInstance(billboards, trajectories)


def generate_synthetic(billboard_path, trajectory_path, n_billboards: int, n_users: int,
                       records_per_user: int, horizon: int, delta: int,
                       geo_box=(40.60, -74.05, 40.90, -73.70),
                       panel_size_range=(100.0, 1000.0), seed: int = 0,
                       hotspots: int = 0) -> SyntheticInstance:
    """Write a synthetic billboard CSV and trajectory CSV; returns the records.

    ``delta`` is only validated against the horizon here (the caller picks
    the slot length at enumeration time); horizon % delta must be 0 so the
    generated instance can be tiled without partial windows.
    """
    if delta < 1 or horizon % delta != 0:
        raise ValidationError(f"horizon {horizon} must be a multiple of delta {delta}")
    inst = _make_instance(n_billboards, n_users, records_per_user, horizon,
                          geo_box, panel_size_range, seed, hotspots)
    write_billboards(billboard_path, inst.billboards)
    write_trajectories(trajectory_path, inst.trajectories)
    return inst
