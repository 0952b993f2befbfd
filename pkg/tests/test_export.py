import csv
import io

from hypothesis import given, strategies as st

from mobitel.export import (
    ACTIVITY_COLORS,
    CSV_HEADER,
    DEFAULT_ACTIVITY_COLOR,
    NO_MARKERS_MESSAGE,
    activity_color,
    build_map_payload,
    export_csv,
    map_payload_geojson,
)
from mobitel.store import QueryRow


def _row(seg_id, activity="on_foot", lat=41.40, lon=2.16, date="2026-08-20", time="10:00:00"):
    return QueryRow(lat=lat, lon=lon, time=time, date=date, activity=activity, seg_id=seg_id)


# -- colors ------------------------------------------------------------


def test_activity_color_table():
    assert activity_color("still") == "#FF00FF"
    assert activity_color("on_foot") == "#FF9900"
    assert activity_color("vehicle") == "#333300"
    assert activity_color("bicycle") == "#00FF00"
    assert activity_color("bus") == "#0099CC"


def test_unmapped_activities_get_default():
    for name in ("tram", "train", "metro", "unknown", "anything"):
        assert name not in ACTIVITY_COLORS
        assert activity_color(name) == DEFAULT_ACTIVITY_COLOR


# -- map payload -------------------------------------------------------


def test_grouping_one_polyline_per_segment():
    rows = [_row(1, time="10:00:00"), _row(1, time="10:00:20"), _row(2, activity="vehicle")]
    payload = build_map_payload(rows)
    assert [p.seg_id for p in payload.polylines] == [1, 2]
    assert len(payload.polylines[0].points) == 2
    assert payload.polylines[1].color == "#333300"


def test_boundary_markers_first_and_last():
    rows = [
        _row(1, lat=41.40, time="10:00:00"),
        _row(1, lat=41.41, time="10:00:20"),
        _row(1, lat=41.42, time="10:00:40"),
    ]
    payload = build_map_payload(rows)
    assert len(payload.markers) == 2
    assert payload.markers[0].point.lat == 41.40
    assert payload.markers[1].point.lat == 41.42
    assert payload.markers[1].time == "10:00:40"


def test_single_row_segment_markers_coincide():
    payload = build_map_payload([_row(7)])
    assert len(payload.markers) == 2
    assert payload.markers[0] == payload.markers[1]


rows_st = st.lists(
    st.builds(
        _row,
        seg_id=st.integers(min_value=1, max_value=5),
        activity=st.sampled_from(("still", "on_foot", "vehicle", "metro")),
        lat=st.decimals(min_value=41, max_value=42, places=6).map(float),
        lon=st.decimals(min_value=1, max_value=3, places=6).map(float),
    ),
    max_size=30,
).map(lambda rows: sorted(rows, key=lambda r: r.seg_id))


@given(rows_st)
def test_grouping_partitions_rows(rows):
    payload = build_map_payload(rows)
    # Every input point appears in exactly one polyline, in order.
    flattened = [(p.lat, p.lon) for line in payload.polylines for p in line.points]
    assert flattened == [(r.lat, r.lon) for r in rows]
    assert len(payload.markers) == 2 * len(payload.polylines)


@given(rows_st)
def test_color_total_over_payload(rows):
    payload = build_map_payload(rows)
    valid = set(ACTIVITY_COLORS.values()) | {DEFAULT_ACTIVITY_COLOR}
    assert all(line.color in valid for line in payload.polylines)


def test_geojson_message_passthrough():
    doc = map_payload_geojson(build_map_payload([]), message=NO_MARKERS_MESSAGE)
    assert doc["features"] == []
    assert doc["message"] == "No se ha encontrado ningun marcador"
    assert "message" not in map_payload_geojson(build_map_payload([]))


def test_geojson_coordinates_lon_lat():
    doc = map_payload_geojson(build_map_payload([_row(1, lat=41.4, lon=2.16)]))
    line = doc["features"][0]
    assert line["geometry"]["coordinates"] == [[2.16, 41.4]]


# -- CSV export --------------------------------------------------------


def test_csv_header_only_when_empty():
    assert export_csv([]) == "seg_id,activity,lat,lon,date,time\r\n"


def test_csv_row_order_and_crlf():
    text = export_csv([_row(1), _row(2, activity="vehicle")])
    lines = text.split("\r\n")
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1].startswith("1,on_foot,41.4,2.16")
    assert lines[2].startswith("2,vehicle")
    assert lines[-1] == ""


def test_csv_quoting_self_check():
    tricky = _row(1, activity='odd,"name"')
    parsed = list(csv.reader(io.StringIO(export_csv([tricky]))))
    assert parsed[1][1] == 'odd,"name"'


@given(rows_st)
def test_csv_and_map_share_point_multiset(rows):
    # Cross-format check: the CSV body and the map polylines carry the
    # same multiset of (lat, lon) points.
    parsed = list(csv.reader(io.StringIO(export_csv(rows))))[1:]
    csv_points = sorted((float(r[2]), float(r[3])) for r in parsed)
    payload = build_map_payload(rows)
    map_points = sorted((p.lat, p.lon) for line in payload.polylines for p in line.points)
    assert csv_points == map_points
