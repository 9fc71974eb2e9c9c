"""Wire-format tests: fixed byte vectors, roundtrips, malformed streams."""

import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipering.framing import (
    MAX_PAYLOAD,
    Frame,
    FrameKind,
    MalformedFrame,
    OversizePayload,
    decode_frame,
    encode_frame,
)

# Known encodings, written out byte by byte.
TOKEN_BYTES = bytes.fromhex("01" + "00000000" + "00000000" + "0000")
DATA_A_BYTES = bytes.fromhex("02" + "00000001" + "00000005" + "0001") + b"A"
SHUTDOWN_BYTES = bytes.fromhex("03" + "00000000" + "00000004" + "0000")


def test_encode_token_marker():
    frame = Frame(FrameKind.TOKEN, hop_count=0, ttl=0, payload=b"")
    assert encode_frame(frame) == TOKEN_BYTES
    assert len(TOKEN_BYTES) == 11


def test_encode_data_with_payload():
    frame = Frame(FrameKind.DATA, hop_count=1, ttl=5, payload=b"A")
    assert encode_frame(frame) == DATA_A_BYTES


def test_encode_shutdown():
    frame = Frame(FrameKind.SHUTDOWN, hop_count=0, ttl=4, payload=b"")
    assert encode_frame(frame) == SHUTDOWN_BYTES


def test_decode_token_marker():
    frame = decode_frame(io.BytesIO(TOKEN_BYTES))
    assert frame == Frame(FrameKind.TOKEN, hop_count=0, ttl=0, payload=b"")


def test_decode_empty_stream_is_end_of_stream():
    assert decode_frame(io.BytesIO(b"")) is None


def test_decode_unknown_kind():
    bad = b"\x7f" + TOKEN_BYTES[1:]
    with pytest.raises(MalformedFrame, match="unknown frame kind"):
        decode_frame(io.BytesIO(bad))


def test_decode_every_unknown_kind_byte():
    known = {int(k) for k in FrameKind}
    for kind_byte in range(256):
        if kind_byte in known:
            continue
        bad = bytes([kind_byte]) + TOKEN_BYTES[1:]
        with pytest.raises(MalformedFrame):
            decode_frame(io.BytesIO(bad))


def test_decode_oversize_declared_length():
    header = bytes([1]) + b"\x00" * 8 + (MAX_PAYLOAD + 1).to_bytes(2, "big")
    with pytest.raises(MalformedFrame, match="exceeds limit"):
        decode_frame(io.BytesIO(header + b"x" * (MAX_PAYLOAD + 1)))


def test_decode_respects_tighter_payload_cap():
    frame = Frame(FrameKind.DATA, payload=b"x" * 64)
    encoded = encode_frame(frame)
    assert decode_frame(io.BytesIO(encoded)) == frame
    with pytest.raises(MalformedFrame):
        decode_frame(io.BytesIO(encoded), max_payload=32)


def test_oversize_payload_rejected_at_construction():
    with pytest.raises(OversizePayload):
        Frame(FrameKind.DATA, payload=b"x" * (MAX_PAYLOAD + 1))


def test_encode_oversize_against_tighter_cap():
    frame = Frame(FrameKind.DATA, payload=b"x" * 100)
    with pytest.raises(OversizePayload):
        encode_frame(frame, max_payload=50)


def test_field_bounds():
    with pytest.raises(ValueError):
        Frame(FrameKind.TOKEN, hop_count=-1)
    with pytest.raises(ValueError):
        Frame(FrameKind.TOKEN, ttl=2**32)


@pytest.mark.parametrize("sample", [TOKEN_BYTES, DATA_A_BYTES, SHUTDOWN_BYTES])
def test_every_strict_prefix_is_malformed(sample):
    for cut in range(1, len(sample)):
        with pytest.raises(MalformedFrame):
            decode_frame(io.BytesIO(sample[:cut]))


frames = st.builds(
    Frame,
    kind=st.sampled_from(list(FrameKind)),
    hop_count=st.integers(0, 2**32 - 1),
    ttl=st.integers(0, 2**32 - 1),
    payload=st.binary(min_size=0, max_size=MAX_PAYLOAD),
)


@settings(max_examples=1000, deadline=None)
@given(frames)
def test_roundtrip(frame):
    assert decode_frame(io.BytesIO(encode_frame(frame))) == frame


@settings(max_examples=200, deadline=None)
@given(st.lists(frames, min_size=0, max_size=8))
def test_concatenated_stream_decodes_in_order(sequence):
    stream = io.BytesIO(b"".join(encode_frame(f) for f in sequence))
    decoded = []
    while True:
        frame = decode_frame(stream)
        if frame is None:
            break
        decoded.append(frame)
    assert decoded == sequence


@settings(max_examples=300, deadline=None)
@given(frames, st.data())
def test_truncation_never_yields_a_frame(frame, data):
    encoded = encode_frame(frame)
    cut = data.draw(st.integers(1, len(encoded) - 1))
    with pytest.raises(MalformedFrame):
        decode_frame(io.BytesIO(encoded[:cut]))
