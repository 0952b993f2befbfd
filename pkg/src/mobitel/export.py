"""Analyst query output: per-segment map payload and CSV export."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import groupby
from typing import Iterable

from .geo import GeoPoint
from .store import QueryRow

ACTIVITY_COLORS = {
    "still": "#FF00FF",
    "on_foot": "#FF9900",
    "vehicle": "#333300",
    "bicycle": "#00FF00",
    "bus": "#0099CC",
}
DEFAULT_ACTIVITY_COLOR = "#3e8bff"

NO_MARKERS_MESSAGE = "No se ha encontrado ningun marcador"
MISSING_FIELDS_MESSAGE = "All fields must be filled out"

CSV_HEADER = ("seg_id", "activity", "lat", "lon", "date", "time")


def activity_color(name: str) -> str:
    """Map an activity name to its display color; unmapped names get the
    default marker color."""
    return ACTIVITY_COLORS.get(name, DEFAULT_ACTIVITY_COLOR)


@dataclass(frozen=True)
class MapMarker:
    point: GeoPoint
    activity: str
    date: str
    time: str


@dataclass(frozen=True)
class MapPolyline:
    seg_id: int
    activity: str
    color: str
    points: tuple[GeoPoint, ...]
    date: str
    time: str


@dataclass
class MapPayload:
    polylines: list[MapPolyline]
    markers: list[MapMarker]


def build_map_payload(rows: Iterable[QueryRow]) -> MapPayload:
    """Group consecutive rows by seg_id into one polyline each, with
    boundary markers at every segment's first and last location."""
    polylines: list[MapPolyline] = []
    markers: list[MapMarker] = []
    for seg_id, group in groupby(rows, key=lambda r: r.seg_id):
        seg_rows = list(group)
        first, last = seg_rows[0], seg_rows[-1]
        polylines.append(
            MapPolyline(
                seg_id=seg_id,
                activity=first.activity,
                color=activity_color(first.activity),
                points=tuple(GeoPoint(r.lat, r.lon) for r in seg_rows),
                date=first.date,
                time=first.time,
            )
        )
        for row in (first, last):
            markers.append(
                MapMarker(
                    point=GeoPoint(row.lat, row.lon),
                    activity=row.activity,
                    date=row.date,
                    time=row.time,
                )
            )
    return MapPayload(polylines=polylines, markers=markers)


def map_payload_geojson(payload: MapPayload, message: str | None = None) -> dict:
    """GeoJSON FeatureCollection for the map view."""
    features: list[dict] = []
    for line in payload.polylines:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[p.lon, p.lat] for p in line.points],
                },
                "properties": {
                    "seg_id": line.seg_id,
                    "activity": line.activity,
                    "color": line.color,
                    "date": line.date,
                    "time": line.time,
                },
            }
        )
    for marker in payload.markers:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [marker.point.lon, marker.point.lat],
                },
                "properties": {
                    "activity": marker.activity,
                    "color": activity_color(marker.activity),
                    "date": marker.date,
                    "time": marker.time,
                },
            }
        )
    out = {"type": "FeatureCollection", "features": features}
    if message is not None:
        out["message"] = message
    return out


def export_csv(rows: Iterable[QueryRow]) -> str:
    """RFC 4180 CSV of query rows, in query order, header included."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [row.seg_id, row.activity, row.lat, row.lon, row.date, row.time]
        )
    return buf.getvalue()
