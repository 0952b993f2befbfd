"""HTTP surface of the platform.

Public-key distribution, encrypted registration and segment upload with
the fixed two-key response envelope, the analyst query endpoint with
map/CSV output, the traffic layer, and the push-broker admin endpoints.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import parse_qs

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import broker as broker_mod
from . import crypto, export, segments, store, traffic

log = logging.getLogger(__name__)

MSG_INSERTED = "Inserted"
MSG_ERROR = "Oops! An error occurred."
MSG_MISSING = "Required field(s) is missing"

# The service's endpoints under the names the legacy scripts used.
ENDPOINT_ALIASES = {
    "/insert.php": "/register",
    "/getLocations.php": "/query",
    "/getCSV.php": "/query",
}


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8340
    db_path: str = ":memory:"
    key_dir: str = "keys"
    key_bits: int = 2048
    homepage_url: str = "http://localhost:8340/"
    static_dir: str | None = None
    traffic_state_path: str | None = None
    traffic_sections_path: str | None = None
    incidences_path: str | None = None
    incidences_url: str | None = None
    extra: dict = field(default_factory=dict)


_ENV_PREFIX = "MOBITEL_"


def load_config(path: str | Path | None = None) -> ServerConfig:
    """Config file (JSON) overridden by MOBITEL_* environment variables."""
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(json.load(fh))
    config = ServerConfig()
    for name in vars(config):
        if name == "extra":
            continue
        if name in values:
            setattr(config, name, values[name])
        env = os.environ.get(_ENV_PREFIX + name.upper())
        if env is not None:
            current = getattr(config, name)
            setattr(config, name, int(env) if isinstance(current, int) else env)
    return config


def _envelope(success: int, message: str) -> JSONResponse:
    return JSONResponse({"success": success, "message": message})


def _ensure_keys(config: ServerConfig) -> crypto.KeyPairHandle:
    key_dir = Path(config.key_dir)
    key_dir.mkdir(parents=True, exist_ok=True)
    private_pem = key_dir / "private.pem"
    if private_pem.exists():
        keypair = crypto.KeyPairHandle.load_private_pem(private_pem)
    else:
        keypair = crypto.generate_keypair(config.key_bits)
        keypair.save_private_pem(private_pem)
    keypair.save_public_der(key_dir / "public.der")
    return keypair


async def _form_fields(request: Request) -> dict[str, str]:
    body = (await request.body()).decode("utf-8", errors="replace")
    parsed = parse_qs(body, keep_blank_values=True)
    return {k: v[0] for k, v in parsed.items()}


def _normalize_datetime(value: str) -> str:
    """ISO 8601 (datetime or date) to the store's comparison format."""
    value = value.strip()
    try:
        parsed = dt.datetime.fromisoformat(value)
    except ValueError:
        raise ValueError(f"bad datetime: {value!r}") from None
    if len(value) == 10:
        return parsed.date().isoformat()
    return parsed.strftime("%Y-%m-%d %H:%M:%S")


def create_app(
    config: ServerConfig | None = None, generate_keys: bool = True
) -> FastAPI:
    config = config or ServerConfig()
    app = FastAPI(title="mobitel", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.store = store.MobilityStore(config.db_path)
    app.state.broker = broker_mod.PushBroker(homepage_url=config.homepage_url)
    app.state.keypair = _ensure_keys(config) if generate_keys else None

    def _decrypt(field_hex: str) -> str:
        return crypto.decrypt_field(field_hex, app.state.keypair).decode("utf-8")

    @app.get("/certs/public.der")
    def public_der() -> Response:
        if app.state.keypair is None:
            return PlainTextResponse("no key available", status_code=503)
        return Response(
            content=app.state.keypair.public_der,
            media_type="application/octet-stream",
        )

    @app.post("/register")
    @app.post("/insert.php")
    async def register(request: Request) -> JSONResponse:
        fields = await _form_fields(request)
        if "usu_hash_enc" not in fields or "reg_id_enc" not in fields:
            return _envelope(0, MSG_MISSING)
        try:
            usu_hash = _decrypt(fields["usu_hash_enc"])
            regid = _decrypt(fields["reg_id_enc"])
            app.state.store.upsert_user(usu_hash, regid)
            app.state.broker.register_device(regid, usu_hash)
        except Exception:
            log.warning("registration failed")
            return _envelope(0, MSG_ERROR)
        log.info("registered user (id redacted)")
        return _envelope(1, MSG_INSERTED)

    @app.post("/segments")
    async def upload_segment(request: Request) -> JSONResponse:
        fields = await _form_fields(request)
        if "usu_hash_enc" not in fields or "payload" not in fields:
            return _envelope(0, MSG_MISSING)
        try:
            usu_hash = _decrypt(fields["usu_hash_enc"])
        except Exception:
            log.warning("segment upload: field decryption failed")
            return _envelope(0, MSG_ERROR)
        try:
            segment = segments.parse_segment(fields["payload"])
        except segments.SegmentError:
            log.warning("segment upload: malformed payload")
            return _envelope(0, MSG_MISSING)
        try:
            record = app.state.store.insert_segment(
                usu_hash,
                segment.activity.value,
                segment.distance_m,
                segment.duration_s,
                segment.speed_kmh,
                segment.first_time,
                segment.last_time,
            )
            today = dt.date.today().isoformat()
            rows = [
                {
                    "loc_power": s.power.render() if s.power else None,
                    "loc_latitude": s.point.lat,
                    "loc_longitude": s.point.lon,
                    "loc_time": s.time,
                    "loc_date": today,
                }
                for s in segment.locations
            ]
            app.state.store.insert_locations(record.seg_id, rows)
        except store.StoreError:
            log.warning("segment upload: storage failure")
            return _envelope(0, MSG_ERROR)
        return _envelope(1, MSG_INSERTED)

    @app.get("/query")
    @app.get("/getLocations.php")
    @app.get("/getCSV.php")
    def query(request: Request) -> Response:
        params = request.query_params
        required = ("age_min", "age_max", "activity", "from", "to")
        if any(not params.get(name) for name in required):
            return JSONResponse(
                {"message": export.MISSING_FIELDS_MESSAGE}, status_code=400
            )
        fmt = params.get("format", "map")
        if request.url.path == "/getCSV.php":
            fmt = "csv"
        try:
            rows = app.state.store.query_locations(
                int(params["age_min"]),
                int(params["age_max"]),
                params["activity"],
                _normalize_datetime(params["from"]),
                _normalize_datetime(params["to"]),
            )
        except (ValueError, store.StoreError) as exc:
            return JSONResponse({"message": str(exc)}, status_code=400)
        if fmt == "csv":
            return Response(
                content=export.export_csv(rows),
                media_type="text/csv",
                headers={
                    "Content-Disposition": 'attachment; filename="locations.csv"'
                },
            )
        payload = export.build_map_payload(rows)
        message = export.NO_MARKERS_MESSAGE if not rows else None
        return JSONResponse(export.map_payload_geojson(payload, message=message))

    @app.get("/activities")
    def activities() -> JSONResponse:
        return JSONResponse({"activities": app.state.store.distinct_activities()})

    @app.get("/traffic")
    def traffic_layer() -> JSONResponse:
        states: list[traffic.SectionState] = []
        sections: list[traffic.RoadSection] = []
        if config.traffic_state_path and Path(config.traffic_state_path).exists():
            text = Path(config.traffic_state_path).read_text(encoding="utf-8")
            states = traffic.parse_state_feed(text).records
        if config.traffic_sections_path and Path(config.traffic_sections_path).exists():
            text = Path(config.traffic_sections_path).read_text(encoding="utf-8")
            sections, _ = traffic.load_sections_csv(text)
        if config.incidences_url:
            source: traffic.IncidenceSource = traffic.HttpIncidenceSource(
                config.incidences_url
            )
        elif config.incidences_path and Path(config.incidences_path).exists():
            source = traffic.FixtureIncidenceSource.from_file(config.incidences_path)
        else:
            source = traffic.FixtureIncidenceSource([])
        incidences, _ = traffic.fetch_incidences(source)
        layer = traffic.join_traffic_map(sections, states, incidences)
        return JSONResponse(traffic.traffic_layer_geojson(layer))

    @app.post("/admin/push")
    async def admin_push(request: Request) -> JSONResponse:
        body = await request.json()
        delivered = app.state.broker.push(
            str(body.get("title", "")),
            str(body.get("body", "")),
            str(body.get("target", "all")),
        )
        return JSONResponse({"delivered": delivered})

    @app.get("/inbox/{regid}")
    def inbox(regid: str) -> JSONResponse:
        try:
            messages = app.state.broker.poll_inbox(regid)
        except broker_mod.UnknownDeviceError as exc:
            return JSONResponse({"error": str(exc)}, status_code=404)
        return JSONResponse({"messages": [m.to_json() for m in messages]})

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True))

    return app


def main() -> None:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="Run the mobility telemetry server")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    parser.add_argument("--db")
    parser.add_argument("--key-dir")
    parser.add_argument("--static-dir")
    args = parser.parse_args()

    config = load_config(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    if args.db:
        config.db_path = args.db
    if args.key_dir:
        config.key_dir = args.key_dir
    if args.static_dir:
        config.static_dir = args.static_dir

    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
