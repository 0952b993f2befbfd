"""Barcelona traffic-state feed, section geometry, and DGT incidences.

The state feed is "#"-delimited text, one road section per line; the
geometry is a ";"-delimited CSV of sections with KML-ordered coordinate
cells.  Both join into a colored map layer exported as GeoJSON.
"""

from __future__ import annotations

import html
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Protocol

import requests

from .geo import GeoPoint

log = logging.getLogger(__name__)

STATE_NAMES = {
    0: "no data",
    1: "very fluid",
    2: "fluid",
    3: "dense",
    4: "very dense",
    5: "congested",
    6: "closed",
}

STATE_COLORS = {
    0: "#9E9E9E",
    1: "#1B5E20",
    2: "#4CAF50",
    3: "#FF9800",
    4: "#F44336",
    5: "#B71C1C",
    6: "#000000",
}

INCIDENCE_ICON_BASE = "iconosIncitar/"

# Query parameters the incidence endpoint expects; the bounding box
# covers the Iberian peninsula.
DGT_QUERY_PARAMS = {
    "latNS": "44.33956524809713",
    "longNS": "30.1904296875",
    "latSW": "26.745610382199022",
    "longSW": "-39.287109375",
    "zoom": "5",
    "accion": "getElementos",
    "Camaras": "false",
    "SensoresTrafico": "false",
    "SensoresMeteorologico": "false",
    "Paneles": "false",
    "IncidenciasRETENCION": "true",
    "IncidenciasOBRAS": "false",
    "IncidenciasMETEOROLOGICA": "true",
    "IncidenciasPUERTOS": "true",
    "IncidenciasOTROS": "true",
    "IncidenciasEVENTOS": "true",
    "niveles": "false",
    "caracter": "acontecimiento",
}


class TrafficParseError(ValueError):
    pass


@dataclass(frozen=True)
class SectionState:
    section_id: int
    at: datetime
    current: int
    predicted_15min: int

    def __post_init__(self) -> None:
        if self.section_id <= 0:
            raise ValueError(f"section id must be positive: {self.section_id}")
        for value in (self.current, self.predicted_15min):
            if value not in STATE_NAMES:
                raise ValueError(f"state code out of [0, 6]: {value}")


@dataclass(frozen=True)
class RoadSection:
    section_id: int
    description: str
    path: tuple[GeoPoint, ...]

    def __post_init__(self) -> None:
        if len(self.path) < 2:
            raise ValueError("section path needs at least 2 points")


@dataclass(frozen=True)
class Incidence:
    point: GeoPoint
    description: str
    icon_name: str

    @property
    def icon_path(self) -> str:
        return INCIDENCE_ICON_BASE + self.icon_name


@dataclass
class ParsedFeed:
    records: list[SectionState]
    warnings: list[str] = field(default_factory=list)


def parse_state_feed(text: str) -> ParsedFeed:
    """Parse "id#timestamp#current#predicted" lines, order-preserving.

    Malformed lines are skipped with a warning (best-effort feed); this
    never raises on any input text.
    """
    records: list[SectionState] = []
    warnings: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            parts = line.split("#")
            if len(parts) != 4:
                raise ValueError(f"expected 4 fields, got {len(parts)}")
            section_id = int(parts[0])
            at = datetime.strptime(parts[1], "%Y%m%d%H%M%S")
            records.append(
                SectionState(
                    section_id=section_id,
                    at=at,
                    current=int(parts[2]),
                    predicted_15min=int(parts[3]),
                )
            )
        except ValueError as exc:
            warnings.append(f"line {lineno}: {line!r}: {exc}")
    for warning in warnings:
        log.warning("state feed: %s", warning)
    return ParsedFeed(records=records, warnings=warnings)


def parse_section_coords(cell: str) -> list[GeoPoint]:
    """Decode one geometry cell of whitespace-separated "lon,lat,0"
    triples (KML order).

    Follows the feed's own convention: split on ",0", strip whitespace,
    then read lon before lat.
    """
    points: list[GeoPoint] = []
    for fragment in cell.split(",0"):
        fragment = "".join(fragment.split())
        if not fragment or fragment == ".":
            continue
        fragment = fragment.lstrip(".")
        halves = fragment.split(",")
        if len(halves) != 2:
            raise TrafficParseError(f"bad coordinate fragment: {fragment!r}")
        try:
            lon, lat = float(halves[0]), float(halves[1])
        except ValueError:
            raise TrafficParseError(
                f"non-numeric coordinate fragment: {fragment!r}"
            ) from None
        points.append(GeoPoint(lat=lat, lon=lon))
    return points


def render_section_coords(points: Iterable[GeoPoint]) -> str:
    """Inverse of parse_section_coords, used for fixtures."""
    return " ".join(f"{p.lon},{p.lat},0" for p in points)


def load_sections_csv(text: str) -> tuple[list[RoadSection], list[str]]:
    """Load the ";"-delimited section sheet (header Tram;Descripció;Coordenades).

    Rows whose geometry decodes to fewer than two points are skipped
    with a warning.
    """
    sections: list[RoadSection] = []
    warnings: list[str] = []
    lines = [ln for ln in text.splitlines() if ln.strip()]
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            section_id, description, cell = line.split(";", 2)
            path = parse_section_coords(cell)
            sections.append(
                RoadSection(
                    section_id=int(section_id),
                    description=description.strip(),
                    path=tuple(path),
                )
            )
        except (ValueError, TrafficParseError) as exc:
            warnings.append(f"line {lineno}: {exc}")
    for warning in warnings:
        log.warning("section sheet: %s", warning)
    return sections, warnings


def state_color(state: int) -> str:
    """Fixed state-to-color table; raises for codes outside [0, 6]."""
    try:
        return STATE_COLORS[state]
    except KeyError:
        raise ValueError(f"state code out of [0, 6]: {state}") from None


class IncidenceSource(Protocol):
    """Yields raw incidence elements (dicts with lat/lng/icono/descripcion)."""

    def fetch(self) -> list[dict]: ...


class FixtureIncidenceSource:
    def __init__(self, elements: list[dict]):
        self.elements = elements

    @classmethod
    def from_file(cls, path) -> "FixtureIncidenceSource":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def fetch(self) -> list[dict]:
        return self.elements


class HttpIncidenceSource:
    """Live client for the incidence endpoint."""

    def __init__(self, url: str, params: dict | None = None, timeout: float = 10.0):
        self.url = url
        self.params = dict(DGT_QUERY_PARAMS if params is None else params)
        self.timeout = timeout

    def fetch(self) -> list[dict]:
        response = requests.get(self.url, params=self.params, timeout=self.timeout)
        response.raise_for_status()
        return response.json()


def fetch_incidences(source: IncidenceSource) -> tuple[list[Incidence], list[str]]:
    """Fetch and parse incidences; descriptions are entity-decoded twice
    (the feed double-encodes them).

    A failing source yields an empty list plus a warning rather than an
    error; malformed elements are skipped the same way.
    """
    warnings: list[str] = []
    try:
        elements = source.fetch()
    except Exception as exc:
        warnings.append(f"incidence source failed: {exc}")
        log.warning(warnings[-1])
        return [], warnings

    incidences: list[Incidence] = []
    for i, element in enumerate(elements):
        try:
            point = GeoPoint(
                lat=float(element["lat"]), lon=float(element["lng"])
            )
            description = html.unescape(html.unescape(str(element["descripcion"])))
            incidences.append(
                Incidence(
                    point=point,
                    description=description,
                    icon_name=str(element["icono"]),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            warnings.append(f"element {i}: {exc!r}")
            log.warning("incidences: %s", warnings[-1])
    return incidences, warnings


@dataclass(frozen=True)
class TrafficPolyline:
    path: tuple[GeoPoint, ...]
    color: str
    section_id: int
    state: int


@dataclass
class TrafficLayer:
    polylines: list[TrafficPolyline]
    markers: list[Incidence]


def join_traffic_map(
    sections: Iterable[RoadSection],
    states: Iterable[SectionState],
    incidences: Iterable[Incidence],
) -> TrafficLayer:
    """Left join of sections against live states.

    Every section yields one polyline; sections without a matching state
    draw in the "no data" color.  Incidences pass through as markers.
    """
    by_id = {s.section_id: s for s in states}
    polylines = []
    for section in sections:
        state = by_id.get(section.section_id)
        code = state.current if state is not None else 0
        polylines.append(
            TrafficPolyline(
                path=section.path,
                color=state_color(code),
                section_id=section.section_id,
                state=code,
            )
        )
    return TrafficLayer(polylines=polylines, markers=list(incidences))


def traffic_layer_geojson(layer: TrafficLayer) -> dict:
    """GeoJSON FeatureCollection: LineString per section with a "stroke"
    color, Point per incidence."""
    features: list[dict] = []
    for line in layer.polylines:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[p.lon, p.lat] for p in line.path],
                },
                "properties": {
                    "stroke": line.color,
                    "section_id": line.section_id,
                    "state": line.state,
                    "state_name": STATE_NAMES[line.state],
                },
            }
        )
    for marker in layer.markers:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [marker.point.lon, marker.point.lat],
                },
                "properties": {
                    "description": marker.description,
                    "icon": marker.icon_path,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}
