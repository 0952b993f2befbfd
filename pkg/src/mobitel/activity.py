"""Activity classification heuristics and the silence-mode state machine.

Windows of periodic activity samples (nominally six samples at a 20 s
cadence, i.e. one two-minute window) are reduced to a single modal
activity, then refined into transport modes using GPS accuracy and
points of interest.  The silence machine mirrors a phone ringer that is
muted while the user rides a vehicle and restored afterwards.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import statistics
from dataclasses import dataclass
from typing import Iterable, Protocol

from .geo import GeoPoint, haversine_distance
from .segments import ActivityClass, LocationSample

log = logging.getLogger(__name__)

# Base five classes returned by the recognition source, in fixed
# tie-break order.
BASE_ACTIVITY_ORDER = (
    ActivityClass.still,
    ActivityClass.on_foot,
    ActivityClass.bicycle,
    ActivityClass.vehicle,
    ActivityClass.unknown,
)

STOP_KINDS = ("bus", "tram", "train", "metro_entrance")

# Ringer codes and the "nothing stored" sentinel.
RINGER_SILENT = 0
RINGER_VIBRATE = 1
RINGER_NORMAL = 2
STORED_NOTHING = 5

RINGER_MODES = (RINGER_SILENT, RINGER_VIBRATE, RINGER_NORMAL)
STORED_STATES = RINGER_MODES + (STORED_NOTHING,)


@dataclass(frozen=True)
class ActivitySample:
    """One recognition result: a base-five activity with a confidence."""

    activity: ActivityClass
    confidence: float
    at: float

    def __post_init__(self) -> None:
        if self.activity not in BASE_ACTIVITY_ORDER:
            raise ValueError(f"not a base activity: {self.activity}")
        if not 0.0 <= self.confidence <= 100.0:
            raise ValueError(f"confidence out of [0, 100]: {self.confidence}")


def classify_window(samples: Iterable[ActivitySample]) -> ActivityClass:
    """Modal activity of one sampling window.

    Ties break by larger summed confidence, then by the fixed order
    still < on_foot < bicycle < vehicle < unknown.  An empty window is
    unknown.
    """
    counts: dict[ActivityClass, int] = {}
    confidence: dict[ActivityClass, float] = {}
    for s in samples:
        counts[s.activity] = counts.get(s.activity, 0) + 1
        confidence[s.activity] = confidence.get(s.activity, 0.0) + s.confidence
    if not counts:
        return ActivityClass.unknown
    return max(
        counts,
        key=lambda a: (counts[a], confidence[a], -BASE_ACTIVITY_ORDER.index(a)),
    )


class RouteOracle(Protocol):
    """Answers whether a transit route of a given kind links two points."""

    def has_route(self, kind: str, a: GeoPoint, b: GeoPoint) -> bool: ...


class TableRouteOracle:
    """Table-driven stand-in for the external directions service.

    Rows are (kind, endpoint a, endpoint b, exists); a query matches a
    row when both endpoints fall within ``match_radius_m`` of the row's
    pair, in either orientation.
    """

    def __init__(self, rows=None, match_radius_m: float = 100.0):
        self.rows: list[tuple[str, GeoPoint, GeoPoint, bool]] = list(rows or [])
        self.match_radius_m = match_radius_m

    @classmethod
    def from_csv(cls, text: str, match_radius_m: float = 100.0) -> "TableRouteOracle":
        """Load "kind,lat1,lon1,lat2,lon2,exists" lines."""
        rows = []
        for rec in csv.reader(io.StringIO(text)):
            if not rec or rec[0].startswith("#"):
                continue
            kind, lat1, lon1, lat2, lon2, exists = rec
            rows.append(
                (
                    kind.strip(),
                    GeoPoint(float(lat1), float(lon1)),
                    GeoPoint(float(lat2), float(lon2)),
                    exists.strip().lower() in ("1", "true", "yes"),
                )
            )
        return cls(rows, match_radius_m=match_radius_m)

    def add(self, kind: str, a: GeoPoint, b: GeoPoint, exists: bool = True) -> None:
        self.rows.append((kind, a, b, exists))

    def has_route(self, kind: str, a: GeoPoint, b: GeoPoint) -> bool:
        for row_kind, ra, rb, exists in self.rows:
            if row_kind != kind:
                continue
            forward = (
                haversine_distance(a, ra) <= self.match_radius_m
                and haversine_distance(b, rb) <= self.match_radius_m
            )
            backward = (
                haversine_distance(a, rb) <= self.match_radius_m
                and haversine_distance(b, ra) <= self.match_radius_m
            )
            if forward or backward:
                return exists
        return False


class PoiIndex:
    """Read-only index of transit stops by kind."""

    def __init__(self, stops: Iterable[tuple[GeoPoint, str]] = ()):
        self.stops: tuple[tuple[GeoPoint, str], ...] = tuple(stops)
        for _, kind in self.stops:
            if kind not in STOP_KINDS:
                raise ValueError(f"unknown stop kind: {kind}")

    @classmethod
    def from_csv(cls, text: str) -> "PoiIndex":
        """Load "kind,lat,lon" lines."""
        stops = []
        for rec in csv.reader(io.StringIO(text)):
            if not rec or rec[0].startswith("#"):
                continue
            kind, lat, lon = rec
            stops.append((GeoPoint(float(lat), float(lon)), kind.strip()))
        return cls(stops)

    def nearest(self, point: GeoPoint, kind: str) -> tuple[GeoPoint, float] | None:
        best: tuple[GeoPoint, float] | None = None
        for stop, stop_kind in self.stops:
            if stop_kind != kind:
                continue
            d = haversine_distance(point, stop)
            if best is None or d < best[1]:
                best = (stop, d)
        return best


# Activity bases eligible for motorized refinement.
_MOTORIZED_BASES = (ActivityClass.vehicle, ActivityClass.unknown, ActivityClass.still)

_KIND_TO_ACTIVITY = {
    "bus": ActivityClass.bus,
    "tram": ActivityClass.tram,
    "train": ActivityClass.train,
}


def refine_activity(
    base: ActivityClass,
    window: list[LocationSample],
    gps_accuracy_m: list[float],
    poi: PoiIndex,
    route_oracle: RouteOracle,
    *,
    metro_accuracy_m: float = 100.0,
    stop_radius_m: float = 50.0,
) -> ActivityClass:
    """Refine a motorized base activity into metro/bus/tram/train.

    A whole window of reported accuracy worse than ``metro_accuracy_m``
    (median) is read as the underground signature; otherwise both window
    endpoints near same-kind stops with a confirmed route select that
    kind.  Non-motorized bases pass through unchanged, as does any base
    when neither heuristic fires.
    """
    if base not in _MOTORIZED_BASES or not window:
        return base

    if gps_accuracy_m and statistics.median(gps_accuracy_m) > metro_accuracy_m:
        return ActivityClass.metro

    first, last = window[0].point, window[-1].point
    for kind in ("bus", "tram", "train"):
        near_first = poi.nearest(first, kind)
        near_last = poi.nearest(last, kind)
        if near_first is None or near_last is None:
            continue
        if near_first[1] > stop_radius_m or near_last[1] > stop_radius_m:
            continue
        try:
            confirmed = route_oracle.has_route(kind, first, last)
        except Exception as exc:
            log.warning("route oracle failed, skipping %s heuristic: %s", kind, exc)
            continue
        if confirmed:
            return _KIND_TO_ACTIVITY[kind]
    return base


def silence_transition(
    current_mode: int,
    stored_previous: int,
    detected: ActivityClass,
    feature_on: bool,
) -> tuple[int, int]:
    """One step of the silence-mode machine.

    Detecting a vehicle stores the current ringer mode (once) and mutes;
    any other detection restores the stored mode and clears the slot.
    Returns (new_mode, new_stored_previous).
    """
    if current_mode not in RINGER_MODES:
        raise ValueError(f"invalid ringer mode: {current_mode}")
    if stored_previous not in STORED_STATES:
        raise ValueError(f"invalid stored state: {stored_previous}")

    if not feature_on:
        return current_mode, stored_previous

    if detected is ActivityClass.vehicle:
        stored = current_mode if stored_previous == STORED_NOTHING else stored_previous
        return RINGER_SILENT, stored

    if stored_previous != STORED_NOTHING:
        return stored_previous, STORED_NOTHING
    return current_mode, STORED_NOTHING


class LocationPriority(enum.Enum):
    high_accuracy = "high_accuracy"
    balanced_power_accuracy = "balanced_power_accuracy"
    low_power = "low_power"
    no_power = "no_power"


@dataclass(frozen=True)
class LocationProfile:
    """One location-request priority row: update interval, battery drain
    per hour and expected accuracy."""

    priority: LocationPriority
    interval_s: int | None
    battery_drain_pct_per_h: float | str
    accuracy_m: float | str


_LOCATION_PROFILES = {
    LocationPriority.high_accuracy: LocationProfile(
        LocationPriority.high_accuracy, 5, 7.25, 10.0
    ),
    LocationPriority.balanced_power_accuracy: LocationProfile(
        LocationPriority.balanced_power_accuracy, 20, 0.6, 100.0
    ),
    LocationPriority.low_power: LocationProfile(
        LocationPriority.low_power, None, "small", 10_000.0
    ),
    LocationPriority.no_power: LocationProfile(
        LocationPriority.no_power, None, "small", "variable"
    ),
}


def location_profile(priority: LocationPriority) -> LocationProfile:
    """The fixed profile row for a request priority."""
    return _LOCATION_PROFILES[priority]
