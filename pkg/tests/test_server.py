import json
import logging

import pytest
from fastapi.testclient import TestClient

from mobitel import crypto
from mobitel.server import ServerConfig, create_app, load_config
from conftest import FIXTURES, load_fixture

ENVELOPE_INSERTED = '{"success":1,"message":"Inserted"}'
ENVELOPE_ERROR = '{"success":0,"message":"Oops! An error occurred."}'
ENVELOPE_MISSING = '{"success":0,"message":"Required field(s) is missing"}'


@pytest.fixture
def client(tmp_path):
    config = ServerConfig(
        key_dir=str(tmp_path / "keys"),
        traffic_state_path=str(FIXTURES / "state_feed.dat"),
        traffic_sections_path=str(FIXTURES / "trams.csv"),
        incidences_path=str(FIXTURES / "incidences.json"),
    )
    app = create_app(config)
    with TestClient(app) as tc:
        yield tc


def _fetch_der(client) -> bytes:
    response = client.get("/certs/public.der")
    assert response.status_code == 200
    return response.content


def _register(client, usu_hash="hash-t", regid="regid-t"):
    der = _fetch_der(client)
    return client.post(
        "/register",
        data={
            "usu_hash_enc": crypto.encrypt_field(usu_hash.encode(), der),
            "reg_id_enc": crypto.encrypt_field(regid.encode(), der),
        },
    )


def _upload(client, usu_hash="hash-t", payload=None):
    der = _fetch_der(client)
    payload = payload if payload is not None else load_fixture("segment_on_foot.json")
    return client.post(
        "/segments",
        data={
            "usu_hash_enc": crypto.encrypt_field(usu_hash.encode(), der),
            "payload": payload,
        },
    )


# -- key distribution --------------------------------------------------


def test_public_der_stable_across_fetches(client):
    a = _fetch_der(client)
    b = _fetch_der(client)
    assert a == b
    assert client.app.state.keypair.public_der == a


def test_503_before_key_generation(tmp_path):
    app = create_app(ServerConfig(key_dir=str(tmp_path / "k")), generate_keys=False)
    with TestClient(app) as tc:
        assert tc.get("/certs/public.der").status_code == 503


def test_key_reused_across_restarts(tmp_path):
    config = ServerConfig(key_dir=str(tmp_path / "keys"))
    with TestClient(create_app(config)) as tc:
        first = _fetch_der(tc)
    with TestClient(create_app(config)) as tc:
        assert _fetch_der(tc) == first


# -- registration ------------------------------------------------------


def test_register_envelope_bit_exact(client):
    response = _register(client)
    assert response.status_code == 200
    assert json.dumps(response.json(), separators=(",", ":")) == ENVELOPE_INSERTED


def test_register_missing_field(client):
    response = client.post("/register", data={"usu_hash_enc": "aa"})
    assert json.dumps(response.json(), separators=(",", ":")) == ENVELOPE_MISSING


def test_register_corrupt_ciphertext(client):
    response = client.post(
        "/register", data={"usu_hash_enc": "00" * 256, "reg_id_enc": "11" * 256}
    )
    assert json.dumps(response.json(), separators=(",", ":")) == ENVELOPE_ERROR


def test_register_alias(client):
    der = _fetch_der(client)
    response = client.post(
        "/insert.php",
        data={
            "usu_hash_enc": crypto.encrypt_field(b"hash-alias", der),
            "reg_id_enc": crypto.encrypt_field(b"regid-alias", der),
        },
    )
    assert response.json() == {"success": 1, "message": "Inserted"}


def test_register_does_not_log_plaintext_hash(client, caplog):
    with caplog.at_level(logging.DEBUG):
        _register(client, usu_hash="super-secret-hash")
    assert "super-secret-hash" not in caplog.text


# -- segment upload ----------------------------------------------------


def test_upload_roundtrip(client):
    _register(client)
    response = _upload(client)
    assert json.dumps(response.json(), separators=(",", ":")) == ENVELOPE_INSERTED
    seg = client.app.state.store.get_segment(1)
    assert seg.seg_subido == "OK"
    assert seg.seg_activity == "on_foot"
    assert client.app.state.store.location_count(1) == 6


def test_upload_replay_stores_two_segments(client):
    _register(client)
    assert _upload(client).json()["success"] == 1
    assert _upload(client).json()["success"] == 1
    store = client.app.state.store
    assert store.get_segment(1).seg_subido == "OK"
    assert store.get_segment(2).seg_subido == "OK"


def test_upload_unknown_user_is_error(client):
    response = _upload(client, usu_hash="never-registered")
    assert json.dumps(response.json(), separators=(",", ":")) == ENVELOPE_ERROR


def test_upload_malformed_payload_is_missing(client):
    _register(client)
    response = _upload(client, payload="{not json at all")
    assert json.dumps(response.json(), separators=(",", ":")) == ENVELOPE_MISSING


def test_upload_corrupt_hash_is_error(client):
    _register(client)
    der = _fetch_der(client)
    good = crypto.encrypt_field(b"hash-t", der)
    flipped = ("0" if good[0] != "0" else "1") + good[1:]
    response = client.post(
        "/segments",
        data={"usu_hash_enc": flipped, "payload": load_fixture("segment_on_foot.json")},
    )
    assert json.dumps(response.json(), separators=(",", ":")) == ENVELOPE_ERROR


def test_upload_missing_payload(client):
    _register(client)
    der = _fetch_der(client)
    response = client.post(
        "/segments", data={"usu_hash_enc": crypto.encrypt_field(b"hash-t", der)}
    )
    assert json.dumps(response.json(), separators=(",", ":")) == ENVELOPE_MISSING


def test_upload_power_segment_persists_power(client):
    _register(client)
    assert _upload(client, payload=load_fixture("segment_power.json")).json()["success"] == 1
    locs = client.app.state.store.get_locations(1)
    assert locs[0].loc_power == "-105V-55"
    assert locs[1].loc_power == "-85V-200"


# -- analyst query -----------------------------------------------------


def _query(client, **over):
    params = {
        "age_min": "0",
        "age_max": "200",
        "activity": "All",
        "from": "1900-01-01",
        "to": "2100-01-01",
    }
    params.update(over)
    return client.get("/query", params=params)


def test_query_missing_field_400(client):
    response = client.get("/query", params={"age_min": "0"})
    assert response.status_code == 400
    assert response.json()["message"] == "All fields must be filled out"


def test_query_blank_field_400(client):
    response = _query(client, activity="")
    assert response.status_code == 400
    assert response.json()["message"] == "All fields must be filled out"


def test_query_inverted_range_400(client):
    response = _query(client, age_min="50", age_max="20")
    assert response.status_code == 400
    assert response.json()["message"] == "invalid range"


def test_query_empty_result_message(client):
    response = _query(client)
    assert response.status_code == 200
    doc = response.json()
    assert doc["features"] == []
    assert doc["message"] == "No se ha encontrado ningun marcador"


def test_query_map_payload(client):
    _register(client)
    _upload(client)
    doc = _query(client).json()
    assert "message" not in doc
    lines = [f for f in doc["features"] if f["geometry"]["type"] == "LineString"]
    points = [f for f in doc["features"] if f["geometry"]["type"] == "Point"]
    assert len(lines) == 1 and len(points) == 2
    assert lines[0]["properties"]["activity"] == "on_foot"
    assert lines[0]["properties"]["color"] == "#FF9900"
    assert len(lines[0]["geometry"]["coordinates"]) == 6


def test_query_csv_format(client):
    _register(client)
    _upload(client)
    response = _query(client, format="csv")
    assert response.headers["content-type"].startswith("text/csv")
    assert "attachment" in response.headers["content-disposition"]
    body = response.text
    assert body.startswith("seg_id,activity,lat,lon,date,time\r\n")
    assert body.count("\r\n") == 7  # header + 6 rows


def test_query_aliases(client):
    _register(client)
    _upload(client)
    map_doc = client.get(
        "/getLocations.php",
        params={"age_min": "0", "age_max": "200", "activity": "All",
                "from": "1900-01-01", "to": "2100-01-01"},
    ).json()
    assert map_doc["type"] == "FeatureCollection"
    csv_response = client.get(
        "/getCSV.php",
        params={"age_min": "0", "age_max": "200", "activity": "All",
                "from": "1900-01-01", "to": "2100-01-01"},
    )
    assert csv_response.headers["content-type"].startswith("text/csv")


def test_activities_endpoint(client):
    _register(client)
    _upload(client)
    assert client.get("/activities").json() == {"activities": ["on_foot"]}


# -- traffic -----------------------------------------------------------


def test_traffic_endpoint(client):
    doc = client.get("/traffic").json()
    lines = [f for f in doc["features"] if f["geometry"]["type"] == "LineString"]
    points = [f for f in doc["features"] if f["geometry"]["type"] == "Point"]
    assert len(lines) == 15 and len(points) == 2
    first = next(f for f in lines if f["properties"]["section_id"] == 1)
    assert first["properties"]["stroke"] == "#F44336"


def test_traffic_endpoint_without_fixtures(tmp_path):
    app = create_app(ServerConfig(key_dir=str(tmp_path / "k")))
    with TestClient(app) as tc:
        assert tc.get("/traffic").json() == {"type": "FeatureCollection", "features": []}


# -- push --------------------------------------------------------------


def test_push_and_inbox(client):
    _register(client, regid="regid-push")
    delivered = client.post(
        "/admin/push", json={"title": "hello", "body": "world", "target": "regid-push"}
    ).json()
    assert delivered == {"delivered": 1}
    inbox = client.get("/inbox/regid-push").json()
    assert len(inbox["messages"]) == 1
    assert inbox["messages"][0]["title"] == "hello"
    assert client.get("/inbox/regid-push").json() == {"messages": []}


def test_inbox_unknown_device_404(client):
    response = client.get("/inbox/ghost")
    assert response.status_code == 404
    assert response.json()["error"] == "unknown device"


# -- config ------------------------------------------------------------


def test_load_config_file_and_env(tmp_path, monkeypatch):
    path = tmp_path / "conf.json"
    path.write_text(json.dumps({"port": 9000, "db_path": "/tmp/x.db"}))
    monkeypatch.setenv("MOBITEL_PORT", "9100")
    config = load_config(path)
    assert config.port == 9100  # env wins over file
    assert config.db_path == "/tmp/x.db"
    assert config.host == "127.0.0.1"
