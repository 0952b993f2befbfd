import math

import pytest
from hypothesis import given, strategies as st

from mobitel.geo import EARTH_RADIUS_M, GeoPoint, haversine_distance

lat_st = st.floats(min_value=-90, max_value=90, allow_nan=False)
lon_st = st.floats(min_value=-180, max_value=180, allow_nan=False)
point_st = st.builds(GeoPoint, lat=lat_st, lon=lon_st)


def test_identity_is_zero():
    p = GeoPoint(41.441145, 2.1659081)
    assert haversine_distance(p, p) == 0.0


def test_equatorial_antipodes():
    d = haversine_distance(GeoPoint(0, 0), GeoPoint(0, 180))
    assert d == pytest.approx(math.pi * EARTH_RADIUS_M)


def test_invalid_coordinates_rejected():
    with pytest.raises(ValueError):
        GeoPoint(91, 0)
    with pytest.raises(ValueError):
        GeoPoint(0, -181)


@given(point_st, point_st)
def test_symmetric_and_nonnegative(a, b):
    d = haversine_distance(a, b)
    assert d >= 0
    assert d == pytest.approx(haversine_distance(b, a), rel=1e-12, abs=1e-9)


@given(point_st, point_st, point_st)
def test_triangle_inequality(a, b, c):
    ab = haversine_distance(a, b)
    bc = haversine_distance(b, c)
    ac = haversine_distance(a, c)
    assert ac <= ab + bc + 1e-6 * max(ab + bc, 1.0)
