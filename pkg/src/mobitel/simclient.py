"""Synthetic client: upload protocol driver and fixed-cadence load test.

Mirrors a terminal's behaviour: download the public key, register with
encrypted identity fields, classify the trace into windows, run the
silence machine, and upload stride-4 segments.
"""

from __future__ import annotations

import json
import logging
import random
import string
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from . import crypto
from .activity import (
    PoiIndex,
    RINGER_NORMAL,
    STORED_NOTHING,
    RouteOracle,
    TableRouteOracle,
    classify_window,
    refine_activity,
    silence_transition,
)
from .segments import ActivityClass, LocationSample, Segment, serialize_segment
from .trace import TracePoint

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2

WINDOW_SAMPLES = 6  # 2 minutes at the 20 s cadence


class ClientConfigError(Exception):
    pass


@dataclass
class ClientConfig:
    """Client preferences persisted as a key-value JSON file.

    The user hash is generated once and reused across runs, like a
    preference file on a terminal.
    """

    server_url: str = "http://127.0.0.1:8340"
    user_hash: str = ""
    regid: str = ""
    silence_feature: bool = True
    profile: dict = field(default_factory=dict)
    path: Path | None = None

    @classmethod
    def load(cls, path: str | Path, server_url: str | None = None) -> "ClientConfig":
        path = Path(path)
        values: dict = {}
        if path.exists():
            try:
                values = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ClientConfigError(f"unreadable config {path}: {exc}") from exc
        config = cls(
            server_url=values.get("server_url", cls.server_url),
            user_hash=values.get("user_hash", ""),
            regid=values.get("regid", ""),
            silence_feature=values.get("silence_feature", True),
            profile=values.get("profile", {}),
            path=path,
        )
        if server_url:
            config.server_url = server_url
        if not config.user_hash:
            config.user_hash = _random_key(32)
        if not config.regid:
            config.regid = "regid-" + _random_key(16)
        config.save()
        return config

    def save(self) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(
            json.dumps(
                {
                    "server_url": self.server_url,
                    "user_hash": self.user_hash,
                    "regid": self.regid,
                    "silence_feature": self.silence_feature,
                    "profile": self.profile,
                },
                indent=2,
            ),
            encoding="utf-8",
        )


def _random_key(length: int) -> str:
    alphabet = string.ascii_letters + string.digits
    return "".join(random.SystemRandom().choice(alphabet) for _ in range(length))


def windows_of(points: list[TracePoint], size: int = WINDOW_SAMPLES):
    for i in range(0, len(points), size):
        yield points[i : i + size]


def segment_trace(
    points: list[TracePoint],
    poi: PoiIndex | None = None,
    oracle: RouteOracle | None = None,
    silence_feature: bool = True,
    ringer_mode: int = RINGER_NORMAL,
) -> tuple[list[Segment], list[tuple[int, int]]]:
    """Window-classify a trace into segments and run the silence machine.

    Every sample lands in exactly one segment: runs too short to stand
    alone are merged into the neighbouring segment.  Returns the
    segments and the (mode, stored_previous) ringer trace per window.
    """
    poi = poi or PoiIndex()
    oracle = oracle or TableRouteOracle()
    labelled: list[tuple[ActivityClass, LocationSample]] = []
    ringer = (ringer_mode, STORED_NOTHING)
    ringer_trace: list[tuple[int, int]] = []
    for window in windows_of(points):
        base = classify_window([p.activity for p in window])
        locations = [p.location for p in window]
        refined = refine_activity(base, locations, [], poi, oracle)
        ringer = silence_transition(ringer[0], ringer[1], refined, silence_feature)
        ringer_trace.append(ringer)
        labelled.extend((refined, loc) for loc in locations)

    runs: list[tuple[ActivityClass, list[LocationSample]]] = []
    for activity, location in labelled:
        if runs and runs[-1][0] is activity:
            runs[-1][1].append(location)
        else:
            runs.append((activity, [location]))
    # A one-sample run cannot form a segment; fold it into a neighbour.
    merged: list[tuple[ActivityClass, list[LocationSample]]] = []
    for activity, locations in runs:
        if len(locations) < 2 and merged:
            merged[-1][1].extend(locations)
        else:
            merged.append((activity, locations))
    if len(merged) > 1 and len(merged[0][1]) < 2:
        head = merged.pop(0)
        merged[0] = (merged[0][0], head[1] + merged[0][1])

    segments = [
        Segment.from_samples(activity, locations) for activity, locations in merged
    ]
    return segments, ringer_trace


@dataclass
class UploadReport:
    samples_generated: int = 0
    segments_built: int = 0
    envelopes: list[dict] = field(default_factory=list)
    transport_errors: list[str] = field(default_factory=list)
    ringer_trace: list[tuple[int, int]] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if self.transport_errors:
            return EXIT_PARTIAL
        if any(e.get("success") != 1 for e in self.envelopes):
            return EXIT_PARTIAL
        return EXIT_OK


def run_upload(
    config: ClientConfig,
    points: list[TracePoint],
    poi: PoiIndex | None = None,
    oracle: RouteOracle | None = None,
    timeout: float = 10.0,
) -> UploadReport:
    """Full upload flow against a live server; failures are listed in
    the report and the run continues."""
    report = UploadReport(samples_generated=len(points))
    base = config.server_url.rstrip("/")
    try:
        response = requests.get(f"{base}/certs/public.der", timeout=timeout)
        response.raise_for_status()
        public_der = response.content
    except requests.RequestException as exc:
        report.transport_errors.append(f"public key fetch failed: {exc}")
        return report

    try:
        envelope = requests.post(
            f"{base}/register",
            data={
                "usu_hash_enc": crypto.encrypt_field(
                    config.user_hash.encode(), public_der
                ),
                "reg_id_enc": crypto.encrypt_field(config.regid.encode(), public_der),
            },
            timeout=timeout,
        ).json()
        report.envelopes.append({"endpoint": "register", **envelope})
    except (requests.RequestException, ValueError) as exc:
        report.transport_errors.append(f"registration failed: {exc}")
        return report

    segments, ringer_trace = segment_trace(
        points, poi=poi, oracle=oracle, silence_feature=config.silence_feature
    )
    report.segments_built = len(segments)
    report.ringer_trace = ringer_trace
    for segment in segments:
        payload = serialize_segment(segment, include_power=True)
        try:
            envelope = requests.post(
                f"{base}/segments",
                data={
                    "usu_hash_enc": crypto.encrypt_field(
                        config.user_hash.encode(), public_der
                    ),
                    "payload": payload,
                },
                timeout=timeout,
            ).json()
            report.envelopes.append({"endpoint": "segments", **envelope})
        except (requests.RequestException, ValueError) as exc:
            report.transport_errors.append(f"segment upload failed: {exc}")
    return report


@dataclass
class LoadTestReport:
    key_bits: int
    period_s: float
    duration_s: float
    requests_sent: int = 0
    successes: int = 0
    latencies_s: list[float] = field(default_factory=list)
    cpu_time_delta_s: float = 0.0

    @property
    def mean_latency_s(self) -> float:
        return (
            sum(self.latencies_s) / len(self.latencies_s) if self.latencies_s else 0.0
        )


def load_test(
    config: ClientConfig,
    period_s: float,
    duration_s: float,
    key_bits: int = 2048,
    timeout: float = 10.0,
) -> LoadTestReport:
    """One encrypted register request per period for the duration.

    The CPU delta covers this process, which is meaningful when the
    server runs in-process (bench mode); for a remote server it reflects
    client-side encryption cost only.
    """
    report = LoadTestReport(key_bits=key_bits, period_s=period_s, duration_s=duration_s)
    target = int(duration_s / period_s) if period_s > 0 else 0
    if target == 0:
        return report
    base = config.server_url.rstrip("/")
    public_der = requests.get(f"{base}/certs/public.der", timeout=timeout).content

    cpu_start = time.process_time()
    t0 = time.perf_counter()
    for i in range(target):
        payload = {
            "usu_hash_enc": crypto.encrypt_field(config.user_hash.encode(), public_der),
            "reg_id_enc": crypto.encrypt_field(
                f"{config.regid}-{i}".encode(), public_der
            ),
        }
        start = time.perf_counter()
        try:
            envelope = requests.post(
                f"{base}/register", data=payload, timeout=timeout
            ).json()
            ok = envelope.get("success") == 1
        except (requests.RequestException, ValueError):
            ok = False
        report.latencies_s.append(time.perf_counter() - start)
        report.requests_sent += 1
        report.successes += int(ok)
        next_slot = t0 + (i + 1) * period_s
        sleep = next_slot - time.perf_counter()
        if sleep > 0 and i + 1 < target:
            time.sleep(sleep)
    report.cpu_time_delta_s = time.process_time() - cpu_start
    return report
