"""Supervisor: launch ring runs, ingest their logs, render verdicts.

A run is executed as a real subprocess tree: the root process is node 1
and every further node is a descendant. The harness captures the shared
diagnostic stream until the root exits (end-of-stream on that pipe also
requires every descendant to be gone, which is what makes the teardown
verdict meaningful), parses each line against the event grammar, and
keeps anything unparseable as residue.

Verdicts are computed from in-band hop counts and per-node stream order
only; wall-clock interleaving of different nodes in the merged capture
carries no meaning. Reports persist as line-delimited JSON: one header
record with the run parameters, exit codes and verdicts, then one record
per event.
"""

from __future__ import annotations

import json
import os
import signal
import subprocess
import sys
import threading
from dataclasses import asdict, dataclass, field

from .events import EventType, LogEvent, parse_event
from .framing import MAX_PAYLOAD
from .protocol import NodeBehavior, Scenario
from .ring import RingSpec


class IoFailure(Exception):
    """Report file could not be written or read back."""


@dataclass(frozen=True)
class Verdict:
    passed: bool
    detail: str = ""


@dataclass
class RingReport:
    spec: RingSpec
    events: list[LogEvent] = field(default_factory=list)
    exit_codes: dict[int, int] = field(default_factory=dict)
    verdicts: dict[str, Verdict] = field(default_factory=dict)
    residue: list[str] = field(default_factory=list)
    stdout: bytes = b""

    def events_of(self, *types: EventType) -> list[LogEvent]:
        wanted = set(types)
        return [ev for ev in self.events if ev.event in wanted]

    def per_node(self) -> dict[int, list[LogEvent]]:
        """Events grouped by node, each list in that node's stream order."""
        grouped: dict[int, list[LogEvent]] = {}
        for ev in self.events:
            grouped.setdefault(ev.node, []).append(ev)
        return grouped


def default_argv(spec: RingSpec, behavior: NodeBehavior) -> list[str]:
    """Command line that runs the bundled CLI for this spec/behavior."""
    argv = [sys.executable, "-m", "pipering", behavior.scenario.value, str(spec.n)]
    if behavior.scenario is not Scenario.IDENTIFY_ONLY:
        argv += ["--laps", str(behavior.revolutions)]
    if behavior.scenario is Scenario.MUTEX and behavior.cs_hold:
        argv += ["--hold", str(int(behavior.cs_hold * 1000))]
    if spec.max_payload != MAX_PAYLOAD:
        argv += ["--max-payload", str(spec.max_payload)]
    argv += ["--timeout", str(spec.teardown_timeout)]
    return argv


def _kill_tree(pgid: int) -> None:
    try:
        os.killpg(pgid, signal.SIGKILL)
    except ProcessLookupError:
        pass


def _tree_empty(pgid: int) -> bool:
    try:
        os.killpg(pgid, 0)
    except ProcessLookupError:
        return True
    return False


def _drain(pipe, sink: bytearray) -> None:
    while True:
        chunk = pipe.read(65536)
        if not chunk:
            return
        sink.extend(chunk)


def launch(
    spec: RingSpec,
    behavior: NodeBehavior,
    argv: list[str] | None = None,
    timeout: float | None = None,
) -> RingReport:
    """Run a ring scenario as a subprocess tree and capture its report.

    Two deadlines apply. The root process must exit within `timeout`
    (an anti-hang guard, generous by default). After that, end-of-stream
    on the captured pipes -- which requires every descendant holding
    them to be gone -- must arrive within spec.teardown_timeout; a
    leaked ring write end shows up here as a stuck stream. On either
    expiry the process group is killed and the teardown verdict fails.
    """
    cmd = argv if argv is not None else default_argv(spec, behavior)
    if timeout is not None:
        run_deadline = timeout
    else:
        # Interpreter-per-node construction/teardown costs scale with n,
        # circulation with n*k; budget generously, the teardown window
        # below is what actually detects leaks.
        work = 0.05 * spec.n + 0.005 * spec.n * behavior.revolutions
        run_deadline = max(10.0, spec.teardown_timeout) + work
    spec = RingSpec(
        n=spec.n,
        revolutions=behavior.revolutions,
        max_payload=spec.max_payload,
        teardown_timeout=spec.teardown_timeout,
    )
    proc = subprocess.Popen(
        cmd,
        stdin=subprocess.DEVNULL,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        start_new_session=True,
    )
    out_buf = bytearray()
    err_buf = bytearray()
    readers = [
        threading.Thread(target=_drain, args=(proc.stdout, out_buf), daemon=True),
        threading.Thread(target=_drain, args=(proc.stderr, err_buf), daemon=True),
    ]
    for reader in readers:
        reader.start()

    timed_out = False
    try:
        proc.wait(timeout=run_deadline)
    except subprocess.TimeoutExpired:
        timed_out = True
        _kill_tree(proc.pid)
        proc.wait()

    leaked = False
    for reader in readers:
        reader.join(spec.teardown_timeout)
        if reader.is_alive():
            leaked = True
    if leaked:
        _kill_tree(proc.pid)
        for reader in readers:
            reader.join()
    proc.stdout.close()
    proc.stderr.close()

    report = RingReport(spec=spec, stdout=bytes(out_buf))
    for line in bytes(err_buf).decode(errors="replace").splitlines():
        ev = parse_event(line)
        if ev is None:
            report.residue.append(line)
        else:
            report.events.append(ev)

    report.exit_codes[1] = proc.returncode
    for ev in report.events_of(EventType.EXIT):
        report.exit_codes.setdefault(ev.node, 0)

    if timed_out:
        report.verdicts["teardown"] = Verdict(
            False, f"root did not exit within {run_deadline}s; tree killed"
        )
    elif leaked:
        report.verdicts["teardown"] = Verdict(
            False,
            f"diagnostic stream still open {spec.teardown_timeout}s after "
            "the root exited; tree killed",
        )
    elif not _tree_empty(proc.pid):
        _kill_tree(proc.pid)
        report.verdicts["teardown"] = Verdict(
            False, "processes survived the root's exit"
        )
    else:
        report.verdicts["teardown"] = Verdict(
            True, f"root exit {proc.returncode}, stream closed, tree empty"
        )
    return report


def verify_chain(report: RingReport) -> Verdict:
    """Topology check: indices are exactly 1..n and parent ids chain."""
    n = report.spec.n
    identities = report.events_of(EventType.IDENTIFY)
    indices = [ev.node for ev in identities]
    duplicates = sorted({i for i in indices if indices.count(i) > 1})
    if duplicates:
        return Verdict(False, f"duplicated indices: {duplicates}")
    if set(indices) != set(range(1, n + 1)):
        missing = sorted(set(range(1, n + 1)) - set(indices))
        extra = sorted(set(indices) - set(range(1, n + 1)))
        return Verdict(False, f"bad index set: missing={missing} extra={extra}")
    pid_of = {ev.node: ev.pid for ev in identities}
    ppid_of = {ev.node: ev.ppid for ev in identities}
    broken = [
        i + 1
        for i in range(1, n)
        if ppid_of[i + 1] != pid_of[i]
    ]
    if broken:
        return Verdict(False, f"parent chain broken at nodes {broken}")
    if len(set(pid_of.values())) != n:
        return Verdict(False, "process ids are not distinct")
    return Verdict(True, f"{n} nodes, parent chain intact")


def _expected_rx_node(hop: int, n: int) -> int:
    return ((hop + 1) % n) + 1


def verify_token(report: RingReport, k: int) -> Verdict:
    """Circulation check: TX hops 0..k*n-1 exactly once, RX order cyclic."""
    n = report.spec.n
    total = k * n
    tx_hops = sorted(ev.hop for ev in report.events_of(EventType.TOKEN_TX))
    expected = list(range(total))
    if tx_hops != expected:
        missing = sorted(set(expected) - set(tx_hops))
        dupes = sorted({h for h in tx_hops if tx_hops.count(h) > 1})
        extra = sorted(set(tx_hops) - set(expected))
        return Verdict(
            False,
            f"token hops wrong: missing={missing} duplicated={dupes} extra={extra}",
        )
    rx = sorted(report.events_of(EventType.TOKEN_RX), key=lambda ev: ev.hop)
    if [ev.hop for ev in rx] != expected:
        return Verdict(False, "receive hops do not cover 0..k*n-1 exactly once")
    wrong = [
        (ev.hop, ev.node)
        for ev in rx
        if ev.node != _expected_rx_node(ev.hop, n)
    ]
    if wrong:
        return Verdict(False, f"receive order not cyclic at (hop, node): {wrong}")
    return Verdict(True, f"{total} hops, cyclic order")


def verify_mutex(report: RingReport) -> Verdict:
    """Exclusion check: CS events alternate globally in token-hop order."""
    n = report.spec.n
    k = report.spec.revolutions
    cs = report.events_of(EventType.CS_ENTER, EventType.CS_EXIT)
    if any(ev.hop is None for ev in cs):
        return Verdict(False, "critical-section event without a hop tag")
    ordered = sorted(cs, key=lambda ev: (ev.hop, ev.event is EventType.CS_EXIT))
    expected_total = 2 * k * n
    if len(ordered) != expected_total:
        return Verdict(
            False, f"expected {expected_total} CS events, saw {len(ordered)}"
        )
    for pos, ev in enumerate(ordered):
        wanted = EventType.CS_ENTER if pos % 2 == 0 else EventType.CS_EXIT
        if ev.event is not wanted:
            return Verdict(
                False,
                f"CS events do not alternate at position {pos} (hop {ev.hop})",
            )
    for enter, leave in zip(ordered[::2], ordered[1::2]):
        if (enter.node, enter.hop) != (leave.node, leave.hop):
            return Verdict(
                False,
                f"enter/exit mismatch: {(enter.node, enter.hop)} vs "
                f"{(leave.node, leave.hop)}",
            )
    entries: dict[int, int] = {}
    for ev in ordered[::2]:
        entries[ev.node] = entries.get(ev.node, 0) + 1
    uneven = {node: c for node, c in entries.items() if c != k}
    if uneven or set(entries) != set(range(1, n + 1)):
        return Verdict(False, f"entry counts not {k} per node: {entries}")
    return Verdict(True, f"{k * n} entries, globally alternating")


def _event_to_record(ev: LogEvent) -> dict:
    record = {"record": "event", "event": ev.event.value, "node": ev.node, "pid": ev.pid}
    for name in ("ppid", "hop", "ttl", "child"):
        value = getattr(ev, name)
        if value is not None:
            record[name] = value
    return record


def _event_from_record(record: dict) -> LogEvent:
    return LogEvent(
        event=EventType(record["event"]),
        node=record["node"],
        pid=record["pid"],
        ppid=record.get("ppid"),
        hop=record.get("hop"),
        ttl=record.get("ttl"),
        child=record.get("child"),
    )


def save_report(report: RingReport, path: str | os.PathLike) -> None:
    """Persist a report as line-delimited JSON (header first, then events)."""
    header = {
        "record": "header",
        "spec": asdict(report.spec),
        "exit_codes": {str(node): code for node, code in report.exit_codes.items()},
        "verdicts": {name: asdict(v) for name, v in report.verdicts.items()},
        "residue": report.residue,
        "stdout": report.stdout.decode("latin-1"),
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")
            for ev in report.events:
                fh.write(json.dumps(_event_to_record(ev)) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write report to {path}: {exc}") from exc


def load_report(path: str | os.PathLike) -> RingReport:
    """Rebuild a report previously written by save_report."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read report from {path}: {exc}") from exc
    if not lines:
        raise IoFailure(f"report file {path} is empty")
    header = json.loads(lines[0])
    if header.get("record") != "header":
        raise IoFailure(f"report file {path} does not start with a header record")
    report = RingReport(
        spec=RingSpec(**header["spec"]),
        exit_codes={int(node): code for node, code in header["exit_codes"].items()},
        verdicts={
            name: Verdict(**fields) for name, fields in header["verdicts"].items()
        },
        residue=list(header["residue"]),
        stdout=header["stdout"].encode("latin-1"),
    )
    for line in lines[1:]:
        report.events.append(_event_from_record(json.loads(line)))
    return report
