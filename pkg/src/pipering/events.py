"""Structured diagnostic events and the line grammar used to emit them.

Every node writes one event per line to the diagnostic stream (fd 2);
standard output is the ring link and must never carry text. The grammar
is fixed:

    RING <EVENT> node=<int> pid=<int> [ppid=<int>] [hop=<int>] [ttl=<int>] [child=<int>]

Optional fields appear in exactly that order, space-separated, with
decimal integers, newline-terminated. Which optional fields are present
is determined by the event type (see _FIELDS). Lines that do not match
the grammar are treated as residue by the parser, never as events.

A compatibility output mode replaces the structured lines for IDENTIFY
and CHILD_REAPED with fixed legacy-format strings and suppresses all
other events.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from enum import Enum

DIAG_FD = 2

_DECIMAL = re.compile(r"^-?[0-9]+$")


class EventType(Enum):
    IDENTIFY = "IDENTIFY"
    TOKEN_RX = "TOKEN_RX"
    TOKEN_TX = "TOKEN_TX"
    DATA_TX = "DATA_TX"
    DATA_DELIVERED = "DATA_DELIVERED"
    CS_ENTER = "CS_ENTER"
    CS_EXIT = "CS_EXIT"
    SHUTDOWN_RX = "SHUTDOWN_RX"
    SHUTDOWN_TX = "SHUTDOWN_TX"
    CHILD_REAPED = "CHILD_REAPED"
    PROTOCOL_ERROR = "PROTOCOL_ERROR"
    EXIT = "EXIT"


@dataclass(frozen=True)
class LogEvent:
    event: EventType
    node: int
    pid: int
    ppid: int | None = None
    hop: int | None = None
    ttl: int | None = None
    child: int | None = None


# Optional fields required by each event type; everything else must be absent.
_FIELDS: dict[EventType, tuple[str, ...]] = {
    EventType.IDENTIFY: ("ppid",),
    EventType.TOKEN_RX: ("hop",),
    EventType.TOKEN_TX: ("hop",),
    EventType.DATA_TX: ("hop", "ttl"),
    EventType.DATA_DELIVERED: ("hop", "ttl"),
    EventType.CS_ENTER: ("hop",),
    EventType.CS_EXIT: ("hop",),
    EventType.SHUTDOWN_RX: ("hop", "ttl"),
    EventType.SHUTDOWN_TX: ("hop", "ttl"),
    EventType.CHILD_REAPED: ("child",),
    EventType.PROTOCOL_ERROR: (),
    EventType.EXIT: (),
}

_OPTIONAL_ORDER = ("ppid", "hop", "ttl", "child")


def format_event(ev: LogEvent) -> str:
    """Render an event as one grammar line (no trailing newline)."""
    parts = [f"RING {ev.event.value} node={ev.node} pid={ev.pid}"]
    for name in _OPTIONAL_ORDER:
        value = getattr(ev, name)
        if value is not None:
            parts.append(f"{name}={value}")
    return " ".join(parts)


def parse_event(line: str) -> LogEvent | None:
    """Parse one grammar line; None if the line is not a valid event."""
    tokens = line.rstrip("\n").split(" ")
    if len(tokens) < 4 or tokens[0] != "RING":
        return None
    try:
        event = EventType(tokens[1])
    except ValueError:
        return None
    fields: dict[str, int] = {}
    for token in tokens[2:]:
        name, sep, raw = token.partition("=")
        if not sep or name in fields or not _DECIMAL.match(raw):
            return None
        fields[name] = int(raw, 10)
    expected = ("node", "pid") + _FIELDS[event]
    if tuple(tokens[i][: tokens[i].index("=")] for i in range(2, len(tokens))) != expected:
        return None
    return LogEvent(event=event, **fields)


def render_paper_line(ev: LogEvent) -> str | None:
    """Legacy fixed-format line for an event, or None if it has none."""
    if ev.event is EventType.IDENTIFY:
        return f"Procesul[{ev.node}], ProcessID = {ev.pid}, ParentID = {ev.ppid}"
    if ev.event is EventType.CHILD_REAPED:
        return f"Inca un copil mort PID = {ev.child}."
    return None


_paper_format = False


def set_paper_format(enabled: bool) -> None:
    """Switch this process's diagnostic output to the legacy format."""
    global _paper_format
    _paper_format = enabled


def emit(ev: LogEvent) -> None:
    """Write one event line to the diagnostic stream.

    A single os.write per line keeps concurrent nodes' lines intact on
    the shared stream (short pipe writes are atomic).
    """
    line = render_paper_line(ev) if _paper_format else format_event(ev)
    if line is not None:
        os.write(DIAG_FD, (line + "\n").encode())
