"""In-process push broker: device registration, titled messages with a
click-through URL, and per-device FIFO inboxes the simulator can poll.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field


class BrokerError(Exception):
    pass


class UnknownDeviceError(BrokerError):
    pass


@dataclass(frozen=True)
class PushMessage:
    title: str
    body: str
    click_url: str
    to_regid: str
    delivered_at: float

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "body": self.body,
            "click_url": self.click_url,
            "to_regid": self.to_regid,
            "delivered_at": self.delivered_at,
        }


@dataclass
class _Registration:
    regid: str
    usu_hash: str
    app_version: int


class PushBroker:
    """Single-owner broker state; all entry points take the lock."""

    def __init__(self, homepage_url: str = "http://localhost/"):
        self.homepage_url = homepage_url
        self._lock = threading.Lock()
        self._by_hash: dict[str, _Registration] = {}
        self._inboxes: dict[str, list[PushMessage]] = {}

    def register_device(self, regid: str, usu_hash: str, app_version: int = 1) -> None:
        """Idempotent registration; a new regid for the same hash
        replaces the old one, which becomes unroutable."""
        if not regid:
            raise BrokerError("empty registration id")
        with self._lock:
            previous = self._by_hash.get(usu_hash)
            if previous is not None and previous.regid != regid:
                self._inboxes.pop(previous.regid, None)
            self._by_hash[usu_hash] = _Registration(regid, usu_hash, app_version)
            self._inboxes.setdefault(regid, [])

    def is_registered(self, usu_hash: str, app_version: int = 1) -> bool:
        """False for unknown hashes and for registrations recorded under
        a different app version (stale)."""
        with self._lock:
            reg = self._by_hash.get(usu_hash)
            return reg is not None and reg.app_version == app_version

    def push(self, title: str, body: str, target: str = "all") -> int:
        """Append a message to each target inbox; returns the delivered
        count.  Unknown regids deliver to nobody (fire and forget)."""
        with self._lock:
            if target == "all":
                targets = list(self._inboxes)
            else:
                targets = [target] if target in self._inboxes else []
            now = time.time()
            for regid in targets:
                self._inboxes[regid].append(
                    PushMessage(
                        title=title,
                        body=body,
                        click_url=self.homepage_url,
                        to_regid=regid,
                        delivered_at=now,
                    )
                )
            return len(targets)

    def poll_inbox(self, regid: str) -> list[PushMessage]:
        """Return and remove pending messages, FIFO."""
        with self._lock:
            if regid not in self._inboxes:
                raise UnknownDeviceError("unknown device")
            pending = self._inboxes[regid]
            self._inboxes[regid] = []
            return pending
