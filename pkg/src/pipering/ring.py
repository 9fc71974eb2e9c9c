"""Construction of a closed unidirectional ring of OS processes.

Each node reads its ring input from the standard-input slot (fd 0) and
writes its ring output to the standard-output slot (fd 1); fd 2 is the
diagnostic stream. The ring is grown exactly as the classic construction:
the first process connects its own stdout to its stdin through a pipe
(a one-node ring), then each splice creates a fresh pipe and forks a
successor. The parent rebinds its ring output to the new pipe's write
end and leaves the construction loop; the child rebinds its ring input
to the new pipe's read end and keeps building. The last child therefore
still writes into the original self-loop pipe, which closes the ring
back into node 1.

Descriptor hygiene is load-bearing: both raw pipe ends are closed after
every rebind, so each process holds exactly one ring input and one ring
output. A leaked write end would stop end-of-stream from ever cascading
around the ring during teardown.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from enum import Enum

from .events import EventType, LogEvent, emit
from .framing import MAX_PAYLOAD

RING_IN_SLOT = 0
RING_OUT_SLOT = 1

MAX_NODES = 512
DEFAULT_TEARDOWN_TIMEOUT = 2.0


class UsageError(Exception):
    """Invalid command invocation; carries the usage message."""


class ResourceError(Exception):
    """Run parameters beyond what the host can reasonably provide."""


class EndpointFailure(Exception):
    """Pipe creation or endpoint rebinding failed."""


class SpawnFailure(Exception):
    """Could not bring up a successor process."""


@dataclass(frozen=True)
class RingSpec:
    """Validated parameters for one ring run."""

    n: int
    revolutions: int = 0
    max_payload: int = MAX_PAYLOAD
    teardown_timeout: float = DEFAULT_TEARDOWN_TIMEOUT

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"ring needs at least one node, got {self.n}")
        if self.n > MAX_NODES:
            raise ResourceError(
                f"{self.n} nodes exceeds the {MAX_NODES}-node limit"
            )
        if self.revolutions < 0:
            raise ValueError(f"revolutions must be >= 0, got {self.revolutions}")
        if not 0 <= self.max_payload <= MAX_PAYLOAD:
            raise ValueError(
                f"max_payload must be in [0, {MAX_PAYLOAD}], got {self.max_payload}"
            )
        if self.teardown_timeout <= 0:
            raise ValueError("teardown_timeout must be positive")


@dataclass
class RawPipe:
    """A freshly created pipe, before its ends are rebound into ring roles."""

    read_end: int
    write_end: int

    @classmethod
    def open(cls) -> "RawPipe":
        try:
            read_end, write_end = os.pipe()
        except OSError as exc:
            raise EndpointFailure(f"pipe creation failed: {exc}") from exc
        return cls(read_end, write_end)

    def close_both(self) -> None:
        os.close(self.read_end)
        os.close(self.write_end)


@dataclass(frozen=True)
class NodeContext:
    """One process's ring identity and its two endpoints."""

    index: int
    self_id: int
    parent_id: int
    ring_in: int
    ring_out: int
    n: int


@dataclass(frozen=True)
class ReapRecord:
    child_id: int
    status: int


class Role(Enum):
    PARENT = "parent"
    CHILD = "child"


@dataclass(frozen=True)
class SpliceOutcome:
    role: Role
    ctx: NodeContext
    child_id: int | None = None


def validate_spec(args: list[str]) -> RingSpec:
    """Parse a full argument vector of the form [prog, nprocs].

    Exactly one positional count parsing as a decimal integer >= 1 is
    accepted; anything else raises UsageError carrying the usage line.
    Unlike C's atoi, a non-numeric count is rejected outright rather
    than coerced to 0 (the observable outcome is the same usage error).
    """
    prog = args[0] if args else "ring"
    usage = f"usage: {os.path.basename(prog)} nprocs"
    if len(args) != 2:
        raise UsageError(usage)
    try:
        n = int(args[1], 10)
    except ValueError:
        raise UsageError(usage) from None
    if n < 1:
        raise UsageError(usage)
    return RingSpec(n=n)


def _rebind(fd: int, slot: int) -> None:
    try:
        os.dup2(fd, slot)
    except OSError as exc:
        raise EndpointFailure(f"cannot rebind fd {fd} onto slot {slot}: {exc}") from exc


def make_self_loop() -> NodeContext:
    """Connect this process's standard output to its standard input.

    Creates the one-node ring: a byte written to the ring output is
    readable back from the ring input. Both raw pipe descriptors are
    closed after the rebind.
    """
    pipe = RawPipe.open()
    _rebind(pipe.read_end, RING_IN_SLOT)
    _rebind(pipe.write_end, RING_OUT_SLOT)
    pipe.close_both()
    return NodeContext(
        index=1,
        self_id=os.getpid(),
        parent_id=os.getppid(),
        ring_in=RING_IN_SLOT,
        ring_out=RING_OUT_SLOT,
        n=1,
    )


def splice_in_successor(ctx: NodeContext) -> SpliceOutcome:
    """Insert a new successor node after ctx via a fresh pipe and fork.

    The child inherits the current ring endpoints; the parent then
    rebinds its ring output to the new pipe's write end while the child
    rebinds its ring input to the new pipe's read end. Both sides close
    the raw ends. The parent keeps its index; the child is index + 1.
    """
    pipe = RawPipe.open()
    try:
        child_pid = os.fork()
    except OSError as exc:
        pipe.close_both()
        raise SpawnFailure(f"fork failed at index {ctx.index}: {exc}") from exc
    if child_pid > 0:
        _rebind(pipe.write_end, ctx.ring_out)
        pipe.close_both()
        return SpliceOutcome(Role.PARENT, ctx, child_id=child_pid)
    _rebind(pipe.read_end, ctx.ring_in)
    pipe.close_both()
    child_ctx = replace(
        ctx,
        index=ctx.index + 1,
        self_id=os.getpid(),
        parent_id=os.getppid(),
    )
    return SpliceOutcome(Role.CHILD, child_ctx)


def build_ring(spec: RingSpec) -> NodeContext:
    """Build the n-process ring; returns once per process.

    Every participating process returns its own NodeContext: the caller's
    process becomes node 1, and each forked child returns as one of the
    nodes 2..n. Treat the return as running in a fresh process.
    """
    ctx = replace(make_self_loop(), n=spec.n)
    for _ in range(1, spec.n):
        outcome = splice_in_successor(ctx)
        ctx = outcome.ctx
        if outcome.role is Role.PARENT:
            break
    return ctx


def identify(ctx: NodeContext) -> LogEvent:
    """Announce this node's identity on the diagnostic stream."""
    ev = LogEvent(
        event=EventType.IDENTIFY,
        node=ctx.index,
        pid=ctx.self_id,
        ppid=ctx.parent_id,
    )
    emit(ev)
    return ev


def reap_children(ctx: NodeContext) -> list[ReapRecord]:
    """Collect every direct child's exit status (wait-any loop).

    Blocks until all children have terminated; each reap is announced
    with a CHILD_REAPED event. The last node of the ring has no children
    and returns an empty list.
    """
    records: list[ReapRecord] = []
    while True:
        try:
            pid, status = os.wait()
        except ChildProcessError:
            break
        records.append(ReapRecord(pid, os.waitstatus_to_exitcode(status)))
        emit(
            LogEvent(
                event=EventType.CHILD_REAPED,
                node=ctx.index,
                pid=ctx.self_id,
                child=pid,
            )
        )
    return records


def release_ring_out(ctx: NodeContext) -> None:
    """Close this node's ring output so the successor sees end-of-stream.

    When the output sits on the standard-output slot the descriptor is
    replaced with /dev/null instead of closed outright, so interpreter
    shutdown can still flush/close fd 1 without tripping over a dead
    descriptor; the pipe end itself is released either way.
    """
    if ctx.ring_out == RING_OUT_SLOT:
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, RING_OUT_SLOT)
        os.close(devnull)
    else:
        os.close(ctx.ring_out)
