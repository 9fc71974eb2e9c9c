"""Supervisor tests: verdicts on constructed fixtures and on live runs."""

import os
import sys

import pytest

from pipering.events import EventType, LogEvent
from pipering.harness import (
    RingReport,
    launch,
    load_report,
    save_report,
    verify_chain,
    verify_mutex,
    verify_token,
)
from pipering.protocol import NodeBehavior, Scenario
from pipering.ring import RingSpec

from ring_oracle import simulate


def identify_events(n, base_pid=1000, launcher=999):
    events = []
    for i in range(1, n + 1):
        events.append(
            LogEvent(
                EventType.IDENTIFY,
                node=i,
                pid=base_pid + i,
                ppid=launcher if i == 1 else base_pid + i - 1,
            )
        )
    return events


def token_events(n, k, base_pid=1000):
    sim = simulate(n, k)
    events = [
        LogEvent(EventType.TOKEN_TX, node=node, pid=base_pid + node, hop=hop)
        for node, hop in sim.token_tx
    ]
    events += [
        LogEvent(EventType.TOKEN_RX, node=node, pid=base_pid + node, hop=hop)
        for node, hop in sim.visits
    ]
    return events


def cs_events(n, k, base_pid=1000):
    sim = simulate(n, k, mutex=True)
    events = []
    for node, hop in sim.visits:
        events.append(LogEvent(EventType.CS_ENTER, node=node, pid=base_pid + node, hop=hop))
        events.append(LogEvent(EventType.CS_EXIT, node=node, pid=base_pid + node, hop=hop))
    return events


def report_with(n, events, revolutions=0):
    return RingReport(spec=RingSpec(n=n, revolutions=revolutions), events=events)


# ----------------------------------------------------------------- verdicts

def test_chain_passes_on_clean_fixture():
    verdict = verify_chain(report_with(4, identify_events(4)))
    assert verdict.passed, verdict.detail


def test_chain_vacuous_for_single_node():
    assert verify_chain(report_with(1, identify_events(1))).passed


def test_chain_fails_on_duplicate_index():
    events = identify_events(4)
    events[2] = LogEvent(EventType.IDENTIFY, node=2, pid=1003, ppid=1002)
    verdict = verify_chain(report_with(4, events))
    assert not verdict.passed
    assert "2" in verdict.detail


def test_chain_fails_on_broken_parent_link():
    events = identify_events(4)
    events[3] = LogEvent(EventType.IDENTIFY, node=4, pid=1004, ppid=42)
    verdict = verify_chain(report_with(4, events))
    assert not verdict.passed
    assert "4" in verdict.detail


def test_token_passes_on_clean_fixture():
    verdict = verify_token(report_with(5, token_events(5, 3)), k=3)
    assert verdict.passed, verdict.detail
    assert "15" in verdict.detail


def test_token_passes_on_self_loop():
    verdict = verify_token(report_with(1, token_events(1, 2)), k=2)
    assert verdict.passed, verdict.detail
    assert "2" in verdict.detail


def test_token_fails_on_missing_hop():
    events = [
        ev
        for ev in token_events(5, 3)
        if not (ev.event is EventType.TOKEN_TX and ev.hop == 7)
    ]
    verdict = verify_token(report_with(5, events), k=3)
    assert not verdict.passed
    assert "missing=[7]" in verdict.detail


def test_token_fails_on_duplicated_hop():
    events = token_events(5, 3)
    events.append(LogEvent(EventType.TOKEN_TX, node=3, pid=1003, hop=7))
    verdict = verify_token(report_with(5, events), k=3)
    assert not verdict.passed
    assert "duplicated=[7]" in verdict.detail


def test_token_fails_on_acyclic_receive_order():
    events = token_events(4, 2)
    swapped = []
    for ev in events:
        if ev.event is EventType.TOKEN_RX and ev.hop == 2:
            ev = LogEvent(EventType.TOKEN_RX, node=1, pid=1001, hop=2)
        swapped.append(ev)
    verdict = verify_token(report_with(4, swapped), k=2)
    assert not verdict.passed
    assert "cyclic" in verdict.detail


def test_mutex_passes_on_clean_fixture():
    verdict = verify_mutex(report_with(8, cs_events(8, 5), revolutions=5))
    assert verdict.passed, verdict.detail
    assert "40" in verdict.detail


def test_mutex_passes_on_single_node():
    verdict = verify_mutex(report_with(1, cs_events(1, 1), revolutions=1))
    assert verdict.passed, verdict.detail


def test_mutex_fails_on_consecutive_enters():
    events = cs_events(2, 1)
    events[1] = LogEvent(EventType.CS_ENTER, node=2, pid=1002, hop=0)
    verdict = verify_mutex(report_with(2, events, revolutions=1))
    assert not verdict.passed
    assert "alternate" in verdict.detail


def test_mutex_fails_on_uneven_entry_counts():
    events = cs_events(2, 2)
    events += [
        LogEvent(EventType.CS_ENTER, node=1, pid=1001, hop=4),
        LogEvent(EventType.CS_EXIT, node=1, pid=1001, hop=4),
    ]
    verdict = verify_mutex(report_with(2, events, revolutions=2))
    assert not verdict.passed


# ------------------------------------------------------------- live launches

def test_launch_identify_collects_everything():
    report = launch(RingSpec(n=4), NodeBehavior(Scenario.IDENTIFY_ONLY))
    assert report.exit_codes[1] == 0
    assert report.stdout == b""
    assert report.residue == []  # parse totality on a clean run
    node1 = next(ev for ev in report.events_of(EventType.IDENTIFY) if ev.node == 1)
    assert node1.ppid == os.getpid()  # node 1's parent is the launcher
    assert len(report.events_of(EventType.IDENTIFY)) == 4
    assert len(report.events_of(EventType.CHILD_REAPED)) == 3
    assert len(report.events_of(EventType.EXIT)) == 4
    assert report.exit_codes == {1: 0, 2: 0, 3: 0, 4: 0}
    assert report.verdicts["teardown"].passed
    assert verify_chain(report).passed


def test_launch_token_run_is_verifiable():
    report = launch(
        RingSpec(n=2, revolutions=1),
        NodeBehavior(Scenario.CIRCULATE, revolutions=1),
    )
    assert report.exit_codes[1] == 0
    tx = sorted(ev.hop for ev in report.events_of(EventType.TOKEN_TX))
    assert tx == [0, 1]  # hop sequence 0, 1 then absorption
    assert verify_token(report, k=1).passed
    assert report.verdicts["teardown"].passed


def test_launch_usage_error_run():
    report = launch(
        RingSpec(n=1),
        NodeBehavior(Scenario.IDENTIFY_ONLY),
        argv=[sys.executable, "-m", "pipering", "identify", "0"],
    )
    assert report.exit_codes[1] == 1
    assert report.events == []
    from pipering.cli import USAGE

    assert USAGE in report.residue


def test_launch_per_node_order_is_preserved():
    report = launch(RingSpec(n=3), NodeBehavior(Scenario.IDENTIFY_ONLY))
    for node, events in report.per_node().items():
        kinds = [ev.event for ev in events]
        assert kinds[0] is EventType.IDENTIFY
        assert kinds[-1] is EventType.EXIT


def test_launch_timeout_kills_the_tree():
    spec = RingSpec(n=1, teardown_timeout=0.5)
    report = launch(
        spec,
        NodeBehavior(Scenario.IDENTIFY_ONLY),
        argv=[sys.executable, "-c", "import time; time.sleep(60)"],
        timeout=0.5,
    )
    assert not report.verdicts["teardown"].passed
    assert report.exit_codes[1] != 0


def test_launch_detects_survivor_processes():
    # Root exits immediately but leaves a child holding the streams.
    orphan = (
        "import subprocess, sys;"
        "subprocess.Popen([sys.executable, '-c', 'import time; time.sleep(60)'])"
    )
    spec = RingSpec(n=1, teardown_timeout=0.5)
    report = launch(
        spec,
        NodeBehavior(Scenario.IDENTIFY_ONLY),
        argv=[sys.executable, "-c", orphan],
        timeout=5.0,
    )
    assert not report.verdicts["teardown"].passed


# ------------------------------------------------------------------ reports

def test_report_roundtrip(tmp_path):
    report = launch(RingSpec(n=3), NodeBehavior(Scenario.IDENTIFY_ONLY))
    report.verdicts["chain"] = verify_chain(report)
    path = tmp_path / "run.jsonl"
    save_report(report, path)
    assert load_report(path) == report


def test_report_roundtrip_on_constructed_report(tmp_path):
    report = report_with(5, token_events(5, 2), revolutions=2)
    report.verdicts["token"] = verify_token(report, k=2)
    report.residue.append("stray line")
    report.exit_codes[1] = 0
    path = tmp_path / "fixture.jsonl"
    save_report(report, path)
    assert load_report(path) == report


def test_empty_report_is_header_only(tmp_path):
    report = RingReport(spec=RingSpec(n=2))
    path = tmp_path / "empty.jsonl"
    save_report(report, path)
    assert path.read_text().count("\n") == 1
    assert load_report(path) == report
