"""Typed session events with JSONL persistence and ordered fan-out."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

EVENT_KINDS = frozenset(
    {
        "instruction",
        "plan",
        "step_started",
        "skill_call",
        "sim_event",
        "step_result",
        "verdict",
        "speech_out",
        "error",
        "scene_snapshot",
    }
)


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    ts: float
    kind: str
    payload: dict

    @property
    def schema(self) -> str:
        return f"{self.kind}@1"

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "ts": self.ts,
            "kind": self.kind,
            "schema": self.schema,
            "payload": self.payload,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def event_from_dict(data: dict) -> SessionEvent:
    return SessionEvent(
        seq=data["seq"], ts=data["ts"], kind=data["kind"], payload=data["payload"]
    )


def read_jsonl(path: str | Path) -> list[SessionEvent]:
    events = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            events.append(event_from_dict(json.loads(line)))
    return events


class LogicalClock:
    """Deterministic stand-in for wall time: 0, 1, 2, ... per call."""

    def __init__(self) -> None:
        self._next = 0

    def __call__(self) -> float:
        value = self._next
        self._next += 1
        return float(value)


class EventLog:
    """Single-writer, multi-reader ordered event log.

    Events are durably appended (written and flushed to the JSONL sink)
    before any subscriber is woken, so replaying the file always equals
    what a live subscriber observed.
    """

    def __init__(
        self,
        path: str | Path | None = None,
        clock: Callable[[], float] | None = None,
    ):
        self._events: list[SessionEvent] = []
        self._cond = threading.Condition()
        self._clock = clock or time.time
        self._closed = False
        self._path = Path(path) if path is not None else None
        self._file = None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._file = self._path.open("a", encoding="utf-8")

    @property
    def last_seq(self) -> int:
        return len(self._events)

    def append(self, kind: str, payload: dict) -> SessionEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        with self._cond:
            if self._closed:
                raise RuntimeError("event log is closed")
            event = SessionEvent(
                seq=len(self._events) + 1,
                ts=round(float(self._clock()), 6),
                kind=kind,
                payload=payload,
            )
            if self._file is not None:
                self._file.write(event.to_json() + "\n")
                self._file.flush()
            self._events.append(event)
            self._cond.notify_all()
            return event

    def events_from(self, from_seq: int = 1) -> list[SessionEvent]:
        with self._cond:
            return self._events[max(from_seq, 1) - 1 :]

    def follow(self, from_seq: int = 1, poll_timeout: float = 0.2) -> Iterator[SessionEvent]:
        """Yield persisted events then live ones; stops once the log closes."""
        next_seq = max(from_seq, 1)
        while True:
            with self._cond:
                while len(self._events) < next_seq and not self._closed:
                    self._cond.wait(timeout=poll_timeout)
                batch = self._events[next_seq - 1 :]
                closed = self._closed
            for event in batch:
                yield event
            next_seq += len(batch)
            if closed and not batch:
                return

    def close(self) -> None:
        with self._cond:
            self._closed = True
            if self._file is not None:
                self._file.close()
                self._file = None
            self._cond.notify_all()


class EventSink:
    """Thin facade the agent loop emits through; collects and forwards."""

    def __init__(self, log: EventLog | None = None, clock: Callable[[], float] | None = None):
        self.log = log or EventLog(clock=clock)
        self.events: list[SessionEvent] = []

    def emit(self, kind: str, payload: dict) -> SessionEvent:
        event = self.log.append(kind, payload)
        self.events.append(event)
        return event
