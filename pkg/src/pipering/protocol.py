"""Per-node event loop: token circulation, mutual exclusion, teardown.

One token circulates the ring; holding it is the exclusive right to the
critical section. Hop accounting is carried in-band: a frame's hop_count
field records the link traversals completed by previous forwards, so a
frame read off the wire has taken hop_count + 1 hops once it arrives.
The origin (node 1) injects the token with hop 0 and absorbs it when it
arrives having taken exactly revolutions * n hops, i.e. after the stated
number of full laps. Absorption triggers the shutdown cascade: a
SHUTDOWN frame with ttl = n travels the ring once, each node forwarding
it with ttl - 1 until ttl would reach zero, closing its ring output and
reaping its child on the way out. End-of-stream on the ring input is
kept as a defensive secondary teardown path.

At most one protocol frame is in flight per link in token scenarios (a
data probe may ride one frame ahead of the token), so pipe buffering can
never deadlock.
"""

from __future__ import annotations

import io
import os
import time
from dataclasses import dataclass, replace
from enum import Enum

from .events import EventType, LogEvent, emit
from .framing import MAX_PAYLOAD, Frame, FrameKind, MalformedFrame, decode_frame, encode_frame
from .ring import NodeContext, reap_children, release_ring_out


class LinkBroken(Exception):
    """A ring write failed; the successor is gone."""


class Scenario(Enum):
    IDENTIFY_ONLY = "identify"
    CIRCULATE = "token"
    MUTEX = "mutex"


@dataclass(frozen=True)
class NodeBehavior:
    """What a node does once the ring exists.

    probe_ttl, when set, makes the origin inject one DATA frame with
    that ttl ahead of the token: the minimal network-simulation hook.
    The probe must be absorbed before the token completes its laps
    (ttl <= revolutions * n), which keeps it ahead of the shutdown
    cascade.
    """

    scenario: Scenario
    revolutions: int = 0
    cs_hold: float = 0.0
    probe_ttl: int | None = None

    def __post_init__(self) -> None:
        if self.scenario is not Scenario.IDENTIFY_ONLY and self.revolutions < 1:
            raise ValueError(f"{self.scenario.value} runs need revolutions >= 1")
        if self.cs_hold < 0:
            raise ValueError("cs_hold must be >= 0")
        if self.probe_ttl is not None and self.probe_ttl < 1:
            raise ValueError("probe_ttl must be >= 1")


@dataclass
class TokenState:
    holds_token: bool = False
    entries_made: int = 0


def _write_frame(ctx: NodeContext, frame: Frame) -> None:
    data = encode_frame(frame)
    try:
        while data:
            written = os.write(ctx.ring_out, data)
            data = data[written:]
    except OSError as exc:
        raise LinkBroken(f"ring write from node {ctx.index} failed: {exc}") from exc


_TX_EVENT = {
    FrameKind.TOKEN: EventType.TOKEN_TX,
    FrameKind.DATA: EventType.DATA_TX,
    FrameKind.SHUTDOWN: EventType.SHUTDOWN_TX,
}


def _emit_tx(ctx: NodeContext, frame: Frame) -> None:
    ttl = frame.ttl if frame.kind is not FrameKind.TOKEN else None
    emit(
        LogEvent(
            event=_TX_EVENT[frame.kind],
            node=ctx.index,
            pid=ctx.self_id,
            hop=frame.hop_count,
            ttl=ttl,
        )
    )


def inject_token(ctx: NodeContext) -> None:
    """Put the token on the ring; only the origin does this."""
    frame = Frame(FrameKind.TOKEN, hop_count=0, ttl=0)
    _write_frame(ctx, frame)
    _emit_tx(ctx, frame)


def inject_probe(ctx: NodeContext, ttl: int) -> None:
    """Send a DATA probe that will be absorbed after ttl hops."""
    frame = Frame(FrameKind.DATA, hop_count=0, ttl=ttl)
    _write_frame(ctx, frame)
    _emit_tx(ctx, frame)


def forward(ctx: NodeContext, frame: Frame) -> Frame:
    """Pass a received frame to the successor with hop_count + 1."""
    bumped = replace(frame, hop_count=frame.hop_count + 1)
    _write_frame(ctx, bumped)
    _emit_tx(ctx, bumped)
    return bumped


def initiate_shutdown(ctx: NodeContext) -> None:
    """Start the teardown cascade; ttl = n gives every node one receipt."""
    frame = Frame(FrameKind.SHUTDOWN, hop_count=0, ttl=ctx.n)
    _write_frame(ctx, frame)
    _emit_tx(ctx, frame)


def _teardown(ctx: NodeContext) -> int:
    release_ring_out(ctx)
    reap_children(ctx)
    emit(LogEvent(event=EventType.EXIT, node=ctx.index, pid=ctx.self_id))
    return 0


def run_node(ctx: NodeContext, behavior: NodeBehavior, max_payload: int = MAX_PAYLOAD) -> int:
    """Run this node's role to completion; returns the exit status."""
    if behavior.scenario is Scenario.IDENTIFY_ONLY:
        reap_children(ctx)
        emit(LogEvent(event=EventType.EXIT, node=ctx.index, pid=ctx.self_id))
        return 0

    target_hops = behavior.revolutions * ctx.n
    state = TokenState()
    if ctx.index == 1:
        if behavior.probe_ttl is not None:
            if behavior.probe_ttl > target_hops:
                raise ValueError(
                    f"probe_ttl {behavior.probe_ttl} outlives the token "
                    f"({target_hops} hops)"
                )
            inject_probe(ctx, behavior.probe_ttl)
        inject_token(ctx)

    with io.FileIO(ctx.ring_in, "r", closefd=False) as stream:
        return _dispatch_loop(ctx, behavior, state, target_hops, stream, max_payload)


def _dispatch_loop(
    ctx: NodeContext,
    behavior: NodeBehavior,
    state: TokenState,
    target_hops: int,
    stream: io.FileIO,
    max_payload: int,
) -> int:
    while True:
        try:
            frame = decode_frame(stream, max_payload)
        except MalformedFrame:
            emit(LogEvent(event=EventType.PROTOCOL_ERROR, node=ctx.index, pid=ctx.self_id))
            return 2
        if frame is None:
            # Predecessor closed its output without a shutdown frame.
            return _teardown(ctx)

        if frame.kind is FrameKind.TOKEN:
            emit(
                LogEvent(
                    event=EventType.TOKEN_RX,
                    node=ctx.index,
                    pid=ctx.self_id,
                    hop=frame.hop_count,
                )
            )
            state.holds_token = True
            if behavior.scenario is Scenario.MUTEX:
                emit(
                    LogEvent(
                        event=EventType.CS_ENTER,
                        node=ctx.index,
                        pid=ctx.self_id,
                        hop=frame.hop_count,
                    )
                )
                state.entries_made += 1
                if behavior.cs_hold:
                    time.sleep(behavior.cs_hold)
                emit(
                    LogEvent(
                        event=EventType.CS_EXIT,
                        node=ctx.index,
                        pid=ctx.self_id,
                        hop=frame.hop_count,
                    )
                )
            arrived_hops = frame.hop_count + 1
            if ctx.index == 1 and arrived_hops == target_hops:
                state.holds_token = False
                initiate_shutdown(ctx)
            else:
                forward(ctx, frame)
                state.holds_token = False

        elif frame.kind is FrameKind.DATA:
            if frame.hop_count + 1 == frame.ttl:
                emit(
                    LogEvent(
                        event=EventType.DATA_DELIVERED,
                        node=ctx.index,
                        pid=ctx.self_id,
                        hop=frame.hop_count + 1,
                        ttl=frame.ttl,
                    )
                )
            else:
                forward(ctx, frame)

        else:  # SHUTDOWN
            emit(
                LogEvent(
                    event=EventType.SHUTDOWN_RX,
                    node=ctx.index,
                    pid=ctx.self_id,
                    hop=frame.hop_count,
                    ttl=frame.ttl,
                )
            )
            if frame.ttl - 1 > 0:
                forward(ctx, replace(frame, ttl=frame.ttl - 1))
            return _teardown(ctx)
