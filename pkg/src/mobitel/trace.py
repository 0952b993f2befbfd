"""Deterministic synthetic mobility traces.

A trace is a seeded sequence of legs, each with an activity, a duration
and a speed band; one location sample and one recognition sample are
emitted per profile interval.  The same seed always yields the same
trace, byte for byte once serialized.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .activity import ActivitySample
from .geo import EARTH_RADIUS_M, GeoPoint
from .segments import ActivityClass, LocationSample, SignalPower

# Speed bands per activity, km/h.
SPEED_BANDS = {
    ActivityClass.still: (0.0, 0.3),
    ActivityClass.on_foot: (1.0, 6.0),
    ActivityClass.bicycle: (8.0, 25.0),
    ActivityClass.vehicle: (10.0, 80.0),
    ActivityClass.unknown: (0.0, 5.0),
}

GSM_DBM_RANGE = (-110, -60)
WIFI_DBM_RANGE = (-90, -30)


@dataclass(frozen=True)
class TraceLeg:
    activity: ActivityClass
    duration_s: int
    start: GeoPoint | None = None
    speed_kmh: float | None = None

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("zero-length leg")


@dataclass
class TraceSpec:
    seed: int
    legs: list[TraceLeg]
    sample_interval_s: int = 20
    start: GeoPoint = field(default_factory=lambda: GeoPoint(41.3879, 2.1699))
    start_time: str = "09:00:00"


@dataclass(frozen=True)
class TracePoint:
    location: LocationSample
    activity: ActivitySample


def _advance(point: GeoPoint, bearing_rad: float, distance_m: float) -> GeoPoint:
    """Move a point along a bearing on the sphere (small-step flat
    approximation, adequate at city scale)."""
    dlat = distance_m * math.cos(bearing_rad) / EARTH_RADIUS_M
    dlon = (
        distance_m
        * math.sin(bearing_rad)
        / (EARTH_RADIUS_M * math.cos(math.radians(point.lat)))
    )
    return GeoPoint(point.lat + math.degrees(dlat), point.lon + math.degrees(dlon))


def _clock(start_time: str, offset_s: int) -> str:
    h, m, s = (int(x) for x in start_time.split(":"))
    total = (h * 3600 + m * 60 + s + offset_s) % 86_400
    return f"{total // 3600:02d}:{total % 3600 // 60:02d}:{total % 60:02d}"


def generate_trace(spec: TraceSpec) -> list[TracePoint]:
    """Generate one sample per interval across all legs, deterministic
    for the seed."""
    rng = random.Random(spec.seed)
    out: list[TracePoint] = []
    position = spec.start
    offset = 0
    for leg in spec.legs:
        if leg.start is not None:
            position = leg.start
        band = SPEED_BANDS[leg.activity]
        leg_speed = (
            leg.speed_kmh if leg.speed_kmh is not None else rng.uniform(*band)
        )
        bearing = rng.uniform(0.0, 2.0 * math.pi)
        steps = max(1, leg.duration_s // spec.sample_interval_s)
        for _ in range(steps):
            in_vehicle = leg.activity is ActivityClass.vehicle
            power = SignalPower(
                gsm_dbm=rng.randint(*GSM_DBM_RANGE),
                wifi_dbm=-200 if in_vehicle else rng.randint(*WIFI_DBM_RANGE),
            )
            out.append(
                TracePoint(
                    location=LocationSample(
                        point=position,
                        time=_clock(spec.start_time, offset),
                        power=power,
                    ),
                    activity=ActivitySample(
                        activity=leg.activity,
                        confidence=rng.uniform(60.0, 100.0),
                        at=float(offset),
                    ),
                )
            )
            # Jittered speed around the leg speed, drifting heading.
            step_speed = max(0.0, leg_speed * rng.uniform(0.8, 1.2))
            step_m = step_speed / 3.6 * spec.sample_interval_s
            bearing += rng.uniform(-0.3, 0.3)
            position = _advance(position, bearing, step_m)
            offset += spec.sample_interval_s
    return out


def default_trace_spec(seed: int) -> TraceSpec:
    """A small mixed-mode journey used by the CLI and tests."""
    return TraceSpec(
        seed=seed,
        legs=[
            TraceLeg(ActivityClass.on_foot, duration_s=240),
            TraceLeg(ActivityClass.vehicle, duration_s=360),
            TraceLeg(ActivityClass.on_foot, duration_s=240),
        ],
    )
