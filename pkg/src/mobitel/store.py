"""Relational persistence of users, segments and locations.

Backed by an embedded SQLite file (or ":memory:").  All writes go
through one lock-serialized connection; the seg_subido flag on a
segment flips to "OK" only when every location row of that segment is
persisted in the same transaction.
"""

from __future__ import annotations

import datetime as dt
import sqlite3
import threading
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

SEG_PENDING = "PENDING"
SEG_UPLOADED = "OK"

ANONYMOUS_DEFAULTS = {
    "usu_nombre": "not_set",
    "usu_apellido": "not_set",
    "usu_peso": 0.00,
    "usu_nacimiento": "1900-01-01",
    "usu_genero": "not_s",
    "usu_mail": "notset@notset.com",
}

PROFILE_FIELDS = tuple(ANONYMOUS_DEFAULTS)


class StoreError(Exception):
    pass


class NoSuchUserError(StoreError):
    pass


class NoSuchSegmentError(StoreError):
    pass


@dataclass(frozen=True)
class UserRecord:
    usu_id: int
    usu_hash: str
    usu_regid: str
    usu_nombre: str
    usu_apellido: str
    usu_peso: float
    usu_nacimiento: str
    usu_genero: str
    usu_mail: str


@dataclass(frozen=True)
class SegmentRecord:
    seg_id: int
    seg_activity: str
    seg_distance: float
    seg_duration: int
    seg_speed: float
    seg_firsttime: str
    seg_lasttime: str
    usu_hash: str
    seg_subido: str


@dataclass(frozen=True)
class LocationRecord:
    loc_id: int
    loc_power: str | None
    seg_id: int
    loc_latitude: float
    loc_longitude: float
    loc_time: str
    loc_date: str


@dataclass(frozen=True)
class QueryRow:
    """One joined location row for the analyst query path."""

    lat: float
    lon: float
    time: str
    date: str
    activity: str
    seg_id: int


def _migration_sql() -> str:
    return resources.files("mobitel.migrations").joinpath("001_init.sql").read_text()


class MobilityStore:
    """Single-writer store over SQLite; reads see committed snapshots."""

    def __init__(self, path: str | Path = ":memory:"):
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA foreign_keys = ON")
        with self._lock, self._conn:
            self._conn.executescript(_migration_sql())

    def close(self) -> None:
        self._conn.close()

    # -- users ---------------------------------------------------------

    def upsert_user(
        self, usu_hash: str, usu_regid: str, profile: dict | None = None
    ) -> UserRecord:
        """Insert a user with anonymous defaults, or update the regid
        (and any supplied profile fields) of an existing one.  usu_id is
        stable across upserts."""
        if not usu_hash:
            raise StoreError("empty user hash")
        profile = profile or {}
        unknown = set(profile) - set(PROFILE_FIELDS)
        if unknown:
            raise StoreError(f"unknown profile fields: {sorted(unknown)}")
        cols = ["usu_hash", "usu_regid", *profile]
        assignments = ", ".join(f"{k} = :{k}" for k in ("usu_regid", *profile))
        with self._lock, self._conn:
            self._conn.execute(
                f"""
                INSERT INTO tbl_usuarios ({", ".join(cols)})
                VALUES ({", ".join(f":{c}" for c in cols)})
                ON CONFLICT(usu_hash) DO UPDATE SET {assignments}
                """,
                {"usu_hash": usu_hash, "usu_regid": usu_regid, **profile},
            )
        return self.get_user(usu_hash)

    def get_user(self, usu_hash: str) -> UserRecord:
        row = self._conn.execute(
            "SELECT * FROM tbl_usuarios WHERE usu_hash = ?", (usu_hash,)
        ).fetchone()
        if row is None:
            raise NoSuchUserError("no such user")
        return UserRecord(**{k: row[k] for k in row.keys()})

    # -- segments ------------------------------------------------------

    def insert_segment(
        self,
        owner_hash: str,
        activity: str,
        distance_m: float,
        duration_s: int,
        speed_kmh: float,
        first_time: str,
        last_time: str,
    ) -> SegmentRecord:
        self.get_user(owner_hash)  # raises NoSuchUserError
        with self._lock, self._conn:
            cur = self._conn.execute(
                """
                INSERT INTO tbl_Segmento (seg_activity, seg_distance,
                    seg_duration, seg_speed, seg_firsttime, seg_lasttime,
                    usu_hash, seg_subido)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    activity,
                    distance_m,
                    duration_s,
                    speed_kmh,
                    first_time,
                    last_time,
                    owner_hash,
                    SEG_PENDING,
                ),
            )
            seg_id = cur.lastrowid
        return self.get_segment(seg_id)

    def get_segment(self, seg_id: int) -> SegmentRecord:
        row = self._conn.execute(
            "SELECT * FROM tbl_Segmento WHERE seg_id = ?", (seg_id,)
        ).fetchone()
        if row is None:
            raise NoSuchSegmentError(f"no such segment: {seg_id}")
        return SegmentRecord(**{k: row[k] for k in row.keys()})

    # -- locations -----------------------------------------------------

    def insert_locations(self, seg_id: int, rows: list[dict]) -> int:
        """Insert all location rows of a segment in one transaction and
        flip seg_subido to "OK" iff every insert succeeded.

        Each row dict carries loc_latitude, loc_longitude, loc_time,
        loc_date and optional loc_power.  A partial failure rolls the
        whole batch back and leaves the flag pending.  An empty batch
        inserts nothing and never marks the segment uploaded.
        """
        self.get_segment(seg_id)
        if not rows:
            return 0
        with self._lock:
            try:
                with self._conn:
                    self._conn.executemany(
                        """
                        INSERT INTO tbl_Location (loc_power, seg_id,
                            loc_latitude, loc_longitude, loc_time, loc_date)
                        VALUES (:loc_power, :seg_id, :loc_latitude,
                            :loc_longitude, :loc_time, :loc_date)
                        """,
                        [
                            {"loc_power": None, **row, "seg_id": seg_id}
                            for row in rows
                        ],
                    )
                    self._conn.execute(
                        "UPDATE tbl_Segmento SET seg_subido = ? WHERE seg_id = ?",
                        (SEG_UPLOADED, seg_id),
                    )
            except sqlite3.Error as exc:
                raise StoreError(f"location insert failed: {exc}") from exc
        return len(rows)

    def mark_uploaded(self, seg_id: int) -> None:
        """Flip seg_subido to "OK"; only valid for a segment whose
        locations are all persisted (i.e. it has at least one row)."""
        if self.location_count(seg_id) == 0:
            raise StoreError("segment has no locations")
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE tbl_Segmento SET seg_subido = ? WHERE seg_id = ?",
                (SEG_UPLOADED, seg_id),
            )

    def location_count(self, seg_id: int) -> int:
        self.get_segment(seg_id)
        row = self._conn.execute(
            "SELECT COUNT(*) AS n FROM tbl_Location WHERE seg_id = ?", (seg_id,)
        ).fetchone()
        return row["n"]

    def get_locations(self, seg_id: int) -> list[LocationRecord]:
        rows = self._conn.execute(
            "SELECT * FROM tbl_Location WHERE seg_id = ? ORDER BY loc_id", (seg_id,)
        ).fetchall()
        return [LocationRecord(**{k: r[k] for k in r.keys()}) for r in rows]

    # -- analyst query -------------------------------------------------

    def query_locations(
        self,
        age_min: int,
        age_max: int,
        activity: str,
        date_from: str,
        date_to: str,
    ) -> list[QueryRow]:
        """Joined user->segment->location rows under the analyst filter.

        Age is the calendar-year difference between now and the user's
        birth year (not birthday-exact).  ``activity`` "All" disables
        the activity filter.  Date bounds are "YYYY-MM-DD HH:MM:SS"
        strings compared against loc_date + loc_time; plain dates are
        widened to the full day.  Rows come back ordered by seg_id then
        location id.
        """
        if age_min > age_max or date_from > date_to:
            raise StoreError("invalid range")
        lo = date_from if " " in date_from else f"{date_from} 00:00:00"
        hi = date_to if " " in date_to else f"{date_to} 23:59:59"
        current_year = dt.date.today().year
        sql = """
            SELECT a.loc_latitude, a.loc_longitude, a.loc_time, a.loc_date,
                   b.seg_activity, b.seg_id
            FROM tbl_Location a
            JOIN tbl_Segmento b ON a.seg_id = b.seg_id
            JOIN tbl_usuarios d ON b.usu_hash = d.usu_hash
            WHERE (? - CAST(strftime('%Y', d.usu_nacimiento) AS INTEGER))
                  BETWEEN ? AND ?
              AND (a.loc_date || ' ' || a.loc_time) >= ?
              AND (a.loc_date || ' ' || a.loc_time) <= ?
        """
        params: list = [current_year, age_min, age_max, lo, hi]
        if activity != "All":
            sql += " AND b.seg_activity = ?"
            params.append(activity)
        sql += " ORDER BY b.seg_id, a.loc_id"
        rows = self._conn.execute(sql, params).fetchall()
        return [
            QueryRow(
                lat=r["loc_latitude"],
                lon=r["loc_longitude"],
                time=r["loc_time"],
                date=r["loc_date"],
                activity=r["seg_activity"],
                seg_id=r["seg_id"],
            )
            for r in rows
        ]

    def distinct_activities(self) -> list[str]:
        rows = self._conn.execute(
            "SELECT DISTINCT seg_activity FROM tbl_Segmento ORDER BY seg_activity"
        ).fetchall()
        return [r["seg_activity"] for r in rows]
