"""Command-line entry point.

Subcommands:

    pipering identify <n>                    build the ring, self-identify, tear down
    pipering token <n> [--laps K]            circulate the token K full laps
    pipering mutex <n> [--laps K] [--hold MS]  token-guarded critical sections

Options available on every subcommand: --paper-format (legacy line
format for identify/reap output), --max-payload BYTES, --timeout SECS.

Exit codes: 0 on a clean run, 1 on a usage error, 2 on a runtime
failure (pipe, spawn or protocol). All text goes to the diagnostic
stream (stderr); standard output is the ring link and carries no bytes.

The root process becomes node 1 of the ring; every other node is a
forked descendant running this same code after build_ring returns in
its process.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

from . import events
from .framing import MAX_PAYLOAD
from .protocol import LinkBroken, NodeBehavior, Scenario, run_node
from .ring import (
    DEFAULT_TEARDOWN_TIMEOUT,
    EndpointFailure,
    ResourceError,
    RingSpec,
    SpawnFailure,
    UsageError,
    build_ring,
    identify,
    validate_spec,
)

USAGE = (
    "usage: pipering {identify,token,mutex} n [--laps K] [--hold MS]"
    " [--paper-format] [--max-payload BYTES] [--timeout SECS]"
)
PAPER_USAGE = "Utilizare: pipering nprocs"


@dataclass(frozen=True)
class CliInvocation:
    subcommand: str
    n: int
    k: int
    paper_format: bool
    cs_hold: float
    max_payload: int
    teardown_timeout: float


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("n", metavar="n", help="number of ring nodes")
    common.add_argument(
        "--paper-format",
        action="store_true",
        help="print identify/reap lines in the legacy fixed format",
    )
    common.add_argument(
        "--max-payload",
        type=int,
        default=MAX_PAYLOAD,
        metavar="BYTES",
        help="frame payload limit (default %(default)s)",
    )
    common.add_argument(
        "--timeout",
        type=float,
        default=DEFAULT_TEARDOWN_TIMEOUT,
        metavar="SECS",
        help="teardown budget recorded for supervising harnesses",
    )
    laps = argparse.ArgumentParser(add_help=False)
    laps.add_argument(
        "--laps",
        type=int,
        default=1,
        metavar="K",
        help="token revolutions before shutdown (default %(default)s)",
    )

    parser = _Parser(prog="pipering", description="rings of processes over pipes")
    sub = parser.add_subparsers(dest="subcommand", metavar="{identify,token,mutex}")
    sub.required = True
    sub.add_parser("identify", parents=[common], help="build, self-identify, tear down")
    sub.add_parser("token", parents=[common, laps], help="circulate a token")
    mutex = sub.add_parser(
        "mutex", parents=[common, laps], help="token-guarded critical sections"
    )
    mutex.add_argument(
        "--hold",
        type=int,
        default=0,
        metavar="MS",
        help="milliseconds to hold the critical section (default %(default)s)",
    )
    return parser


def parse_invocation(argv: list[str]) -> CliInvocation:
    """Parse and validate argv (without the program name)."""
    ns = _build_parser().parse_args(argv)
    spec = validate_spec(["pipering", ns.n])  # single-count convention for n
    k = getattr(ns, "laps", 0)
    if ns.subcommand in ("token", "mutex") and k < 1:
        raise UsageError("--laps must be >= 1")
    hold_ms = getattr(ns, "hold", 0)
    if hold_ms < 0:
        raise UsageError("--hold must be >= 0")
    if not 0 <= ns.max_payload <= MAX_PAYLOAD:
        raise UsageError(f"--max-payload must be in [0, {MAX_PAYLOAD}]")
    if ns.timeout <= 0:
        raise UsageError("--timeout must be positive")
    return CliInvocation(
        subcommand=ns.subcommand,
        n=spec.n,
        k=k,
        paper_format=ns.paper_format,
        cs_hold=hold_ms / 1000.0,
        max_payload=ns.max_payload,
        teardown_timeout=ns.timeout,
    )


_SCENARIOS = {
    "identify": Scenario.IDENTIFY_ONLY,
    "token": Scenario.CIRCULATE,
    "mutex": Scenario.MUTEX,
}


def _diag(message: str) -> None:
    os.write(2, (message + "\n").encode())


def main(argv: list[str] | None = None) -> int:
    """Run the program; returns the process exit code.

    In the forked node processes this function returns as well: every
    node leaves through the same exit-code path as the root.
    """
    raw = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        inv = parse_invocation(raw)
    except UsageError:
        _diag(PAPER_USAGE if "--paper-format" in raw else USAGE)
        return 1
    except ResourceError as exc:
        _diag(f"pipering: {exc}")
        return 2

    events.set_paper_format(inv.paper_format)
    spec = RingSpec(
        n=inv.n,
        revolutions=inv.k,
        max_payload=inv.max_payload,
        teardown_timeout=inv.teardown_timeout,
    )
    behavior = NodeBehavior(
        scenario=_SCENARIOS[inv.subcommand],
        revolutions=inv.k if inv.subcommand != "identify" else 0,
        cs_hold=inv.cs_hold,
    )
    try:
        ctx = build_ring(spec)
    except (EndpointFailure, SpawnFailure) as exc:
        _diag(f"pipering: {exc}")
        return 2
    identify(ctx)
    try:
        return run_node(ctx, behavior, max_payload=spec.max_payload)
    except LinkBroken as exc:
        _diag(f"pipering: {exc}")
        return 2


def run() -> None:
    """Console-script entry."""
    sys.exit(main())
