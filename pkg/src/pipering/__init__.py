"""Rings of OS processes over anonymous pipes, plus a token protocol.

Construction lives in `ring`, the wire format in `framing`, the per-node
event loop in `protocol`, the diagnostic log grammar in `events`, and
the launching/verifying supervisor in `harness`. The `cli` module ties
them together behind the `pipering` command.
"""

from .events import EventType, LogEvent, format_event, parse_event, render_paper_line
from .framing import (
    MAX_PAYLOAD,
    Frame,
    FrameKind,
    MalformedFrame,
    OversizePayload,
    decode_frame,
    encode_frame,
)
from .harness import (
    RingReport,
    Verdict,
    launch,
    load_report,
    save_report,
    verify_chain,
    verify_mutex,
    verify_token,
)
from .protocol import LinkBroken, NodeBehavior, Scenario, TokenState, run_node
from .ring import (
    MAX_NODES,
    EndpointFailure,
    NodeContext,
    RawPipe,
    ReapRecord,
    ResourceError,
    RingSpec,
    SpawnFailure,
    UsageError,
    build_ring,
    identify,
    make_self_loop,
    reap_children,
    splice_in_successor,
    validate_spec,
)

__version__ = "0.1.0"
