"""Segment model and the on-disk segment file format.

A segment is a run of consecutive location samples sharing one detected
activity, together with derived distance/duration/speed metrics.  The
serialized form is a UTF-8 JSON object whose location array is a flat
list of (lat, lon, time) triples, optionally extended with a fourth
"<gsm>V<wifi>" signal-power entry per sample.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field

from .geo import GeoPoint, haversine_distance

SPEED_KEY = "speed (Km\\h)"  # logical key contains a literal backslash

SECONDS_PER_DAY = 86_400

_POWER_RE = re.compile(r"^(-?\d+)V(-?\d+)$")
_TIME_RE = re.compile(r"^([01]\d|2[0-3]):([0-5]\d):([0-5]\d)$")

WIFI_UNAVAILABLE_DBM = -200


class SegmentError(ValueError):
    """Raised for invalid segment data or malformed segment text."""


class ActivityClass(enum.Enum):
    still = "still"
    on_foot = "on_foot"
    bicycle = "bicycle"
    vehicle = "vehicle"
    bus = "bus"
    tram = "tram"
    train = "train"
    metro = "metro"
    unknown = "unknown"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SignalPower:
    """GSM and Wi-Fi received power in dBm; wifi -200 means unavailable."""

    gsm_dbm: int
    wifi_dbm: int

    def __post_init__(self) -> None:
        if self.gsm_dbm > 0:
            raise ValueError(f"gsm_dbm must be <= 0: {self.gsm_dbm}")
        if not WIFI_UNAVAILABLE_DBM <= self.wifi_dbm <= 0:
            raise ValueError(f"wifi_dbm out of [-200, 0]: {self.wifi_dbm}")

    @property
    def wifi_available(self) -> bool:
        return self.wifi_dbm != WIFI_UNAVAILABLE_DBM

    def render(self) -> str:
        return f"{self.gsm_dbm}V{self.wifi_dbm}"


def parse_power_string(text: str) -> SignalPower:
    """Parse a "<gsm>V<wifi>" power string."""
    m = _POWER_RE.match(text)
    if m is None:
        raise SegmentError(f"malformed power string: {text!r}")
    return SignalPower(gsm_dbm=int(m.group(1)), wifi_dbm=int(m.group(2)))


def is_power_string(value: object) -> bool:
    return isinstance(value, str) and _POWER_RE.match(value) is not None


def time_to_seconds(text: str) -> int:
    """Seconds since midnight for a "HH:MM:SS" time-of-day string."""
    m = _TIME_RE.match(text)
    if m is None:
        raise SegmentError(f"invalid time of day: {text!r}")
    h, mi, s = (int(g) for g in m.groups())
    return h * 3600 + mi * 60 + s


@dataclass(frozen=True)
class LocationSample:
    point: GeoPoint
    time: str
    power: SignalPower | None = None

    def __post_init__(self) -> None:
        time_to_seconds(self.time)


@dataclass(frozen=True)
class SegmentMetrics:
    distance_m: float
    duration_s: int
    speed_kmh: float


def _check_time_order(times: list[str]) -> None:
    """Times of day must be non-decreasing, allowing at most one wrap
    past midnight."""
    seconds = [time_to_seconds(t) for t in times]
    wraps = sum(1 for a, b in zip(seconds, seconds[1:]) if b < a)
    if wraps > 1:
        raise SegmentError("sample times are not non-decreasing")


def segment_duration_s(first_time: str, last_time: str) -> int:
    """Whole seconds between two times of day; a rollover past midnight
    adds one day."""
    delta = time_to_seconds(last_time) - time_to_seconds(first_time)
    if delta < 0:
        delta += SECONDS_PER_DAY
    return delta


def segment_metrics(samples: list[LocationSample]) -> SegmentMetrics:
    """Distance, duration and mean speed over consecutive samples.

    Distance sums the haversine over consecutive pairs; duration is
    last minus first time in whole seconds; speed is 3.6*d/t (0 when
    the duration is 0).
    """
    if len(samples) < 2:
        raise SegmentError("insufficient samples")
    _check_time_order([s.time for s in samples])
    distance = sum(
        haversine_distance(a.point, b.point) for a, b in zip(samples, samples[1:])
    )
    duration = segment_duration_s(samples[0].time, samples[-1].time)
    speed = 3.6 * distance / duration if duration > 0 else 0.0
    return SegmentMetrics(distance_m=distance, duration_s=duration, speed_kmh=speed)


@dataclass(frozen=True)
class Segment:
    """Consecutive same-activity samples plus stored metrics.

    The stored metric fields are kept verbatim from the source (golden
    files may disagree with recomputation); ``recomputed`` carries the
    metrics derived from the samples and is excluded from equality.
    """

    activity: ActivityClass
    locations: tuple[LocationSample, ...]
    distance_m: float
    duration_s: int
    speed_kmh: float
    first_time: str
    last_time: str
    recomputed: SegmentMetrics | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if len(self.locations) < 2:
            raise SegmentError("insufficient samples")
        _check_time_order([s.time for s in self.locations])
        if self.first_time != self.locations[0].time:
            raise SegmentError("first_time does not match first sample")
        if self.last_time != self.locations[-1].time:
            raise SegmentError("last_time does not match last sample")

    @classmethod
    def from_samples(
        cls, activity: ActivityClass, samples: list[LocationSample]
    ) -> "Segment":
        m = segment_metrics(samples)
        return cls(
            activity=activity,
            locations=tuple(samples),
            distance_m=m.distance_m,
            duration_s=m.duration_s,
            speed_kmh=m.speed_kmh,
            first_time=samples[0].time,
            last_time=samples[-1].time,
            recomputed=m,
        )


def serialize_segment(s: Segment, include_power: bool = False) -> str:
    """Serialize one segment to JSON text.

    The location array is a flat list of (lat, lon, time) triples, or
    (lat, lon, time, power) quadruples when ``include_power`` is set.
    """
    location: list[object] = []
    for sample in s.locations:
        location.extend([sample.point.lat, sample.point.lon, sample.time])
        if include_power:
            if sample.power is None:
                raise SegmentError("sample without power in power serialization")
            location.append(sample.power.render())
    obj = {
        "activity": s.activity.value,
        "distance (m)": s.distance_m,
        "duration (s)": s.duration_s,
        SPEED_KEY: s.speed_kmh,
        "first time": s.first_time,
        "last time": s.last_time,
        "location": location,
    }
    return json.dumps(obj, indent=2, ensure_ascii=False)


_BAD_ESCAPE_RE = re.compile(r"(?<!\\)\\(?![\\\"/bfnrtu])")


def _loads_lenient(text: str) -> object:
    """json.loads that tolerates the raw "\\h" escape seen in segment
    files produced by less strict writers."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        fixed = _BAD_ESCAPE_RE.sub(r"\\\\", text)
        try:
            return json.loads(fixed)
        except json.JSONDecodeError as exc:
            raise SegmentError(f"malformed segment text: {exc}") from exc


def _detect_stride(location: list[object]) -> int:
    """Flat-array stride: 4 when every candidate power slot matches the
    power pattern, otherwise 3."""
    n = len(location)
    if n % 4 == 0 and n > 0 and all(is_power_string(v) for v in location[3::4]):
        return 4
    if n % 3 == 0 and n > 0:
        return 3
    raise SegmentError(f"stride mismatch: location array of length {n}")


def _parse_sample(chunk: list[object]) -> LocationSample:
    lat, lon, time = chunk[0], chunk[1], chunk[2]
    if not isinstance(lat, (int, float)) or not isinstance(lon, (int, float)):
        raise SegmentError(f"non-numeric coordinates: {lat!r}, {lon!r}")
    if not isinstance(time, str):
        raise SegmentError(f"expected time string, got {time!r}")
    power = parse_power_string(chunk[3]) if len(chunk) == 4 else None
    return LocationSample(point=GeoPoint(float(lat), float(lon)), time=time, power=power)


def parse_segment(text: str) -> Segment:
    """Parse one segment object, or the first entry of a
    {"segments": [...]} wrapper."""
    obj = _loads_lenient(text)
    if isinstance(obj, dict) and "segments" in obj:
        entries = obj["segments"]
        if not isinstance(entries, list) or not entries:
            raise SegmentError("empty segments wrapper")
        obj = entries[0]
    if not isinstance(obj, dict):
        raise SegmentError("segment text is not a JSON object")
    return segment_from_object(obj)


def parse_segments(text: str) -> list[Segment]:
    """Parse all segments from a file, with or without the wrapper."""
    obj = _loads_lenient(text)
    if isinstance(obj, dict) and "segments" in obj:
        return [segment_from_object(e) for e in obj["segments"]]
    if isinstance(obj, dict):
        return [segment_from_object(obj)]
    raise SegmentError("segment text is not a JSON object")


def segment_from_object(obj: dict) -> Segment:
    location = obj.get("location")
    if not isinstance(location, list):
        raise SegmentError("missing location array")
    stride = _detect_stride(location)
    samples = [
        _parse_sample(location[i : i + stride]) for i in range(0, len(location), stride)
    ]
    if len(samples) < 2:
        raise SegmentError("insufficient samples")
    recomputed = segment_metrics(samples)

    activity_name = obj.get("activity", "unknown")
    try:
        activity = ActivityClass(activity_name)
    except ValueError:
        raise SegmentError(f"unknown activity name: {activity_name!r}") from None

    return Segment(
        activity=activity,
        locations=tuple(samples),
        distance_m=float(obj.get("distance (m)", recomputed.distance_m)),
        duration_s=int(obj.get("duration (s)", recomputed.duration_s)),
        speed_kmh=float(obj.get(SPEED_KEY, recomputed.speed_kmh)),
        first_time=str(obj.get("first time", samples[0].time)),
        last_time=str(obj.get("last time", samples[-1].time)),
        recomputed=recomputed,
    )


def serialize_segments(segments: list[Segment], include_power: bool = False) -> str:
    """Serialize a list of segments inside the {"segments": [...]} wrapper."""
    bodies = [
        json.loads(serialize_segment(s, include_power=include_power)) for s in segments
    ]
    return json.dumps({"segments": bodies}, indent=2, ensure_ascii=False)
