import os
import random

import pytest
from hypothesis import given, settings, strategies as st

from a2a.codec import InvalidMessage, MalformedPayload, UnknownKind, decode, encode
from a2a.framing import (HEADER_SIZE, ChecksumMismatch, IncompleteMessage, MtuTooSmall,
                         frame_for_control_channel, reassemble)
from a2a.messages import (AlertBody, AnomalyClass, CompressionTier, MessageKind,
                          SemanticMessage, SemanticStateVector, select_tier)
from radio.regime import ConnectivityRegime
from radio.topology import TrafficClass
from .conftest import GOLDEN_DIR

FULL, SUMMARY, CRITICAL = CompressionTier.FULL, CompressionTier.SUMMARY, CompressionTier.CRITICAL

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
json_scalar = st.one_of(st.integers(-10**6, 10**6), finite, st.text(max_size=8), st.booleans(),
                        st.none())

alert_bodies = st.builds(
    AlertBody,
    anomaly_class=st.sampled_from(list(AnomalyClass)),
    location=st.tuples(finite, finite),
    uncertainty_radius_m=st.floats(0, 1e6),
    assistance_level=st.integers(1, 5),
)

state_vectors = st.builds(
    SemanticStateVector,
    values=st.lists(finite, min_size=64, max_size=64).map(tuple),
    tags=st.lists(st.text(min_size=1, max_size=16), max_size=16).map(tuple),
)


@st.composite
def messages(draw):
    kind = draw(st.sampled_from(list(MessageKind)))
    if kind == MessageKind.ALERT:
        body = draw(alert_bodies)
    else:
        body = draw(st.dictionaries(st.text(min_size=1, max_size=10), json_scalar, max_size=6))
    return SemanticMessage(
        kind=kind,
        sender=draw(st.text(min_size=1, max_size=12)),
        seq=draw(st.integers(0, 2**31)),
        confidence=draw(st.floats(0, 1)),
        body=body,
        state=draw(st.one_of(st.none(), state_vectors)),
    )


def golden_message():
    return SemanticMessage(
        kind=MessageKind.STATE_UPDATE, sender="rover-A", seq=7, confidence=0.765,
        body={"position": [3, 4], "mode": "PUSH_REALTIME", "battery": 0.8},
        state=SemanticStateVector(values=tuple(i / 4 for i in range(64)), tags=("rover", "eva")),
    )


def alert_message():
    body = AlertBody(AnomalyClass.UNRESPONSIVE, (90.0, 30.0), 5.0, 5)
    return SemanticMessage(MessageKind.ALERT, "rover-A", 1, 0.85, body=body,
                           state=SemanticStateVector(values=tuple(float(i) for i in range(64)),
                                                     tags=("suit",)))


@pytest.mark.parametrize("tier, filename", [
    (FULL, "state_update_full.json"),
    (SUMMARY, "state_update_summary.json"),
    (CRITICAL, "state_update_critical.json"),
])
def test_golden_encodings(tier, filename):
    with open(os.path.join(GOLDEN_DIR, filename), "rb") as f:
        expected = f.read().rstrip(b"\n")
    assert encode(golden_message(), tier) == expected


def test_alert_tiers_shrink_and_keep_the_alert():
    msg = alert_message()
    sizes = [len(encode(msg, tier)) for tier in (CRITICAL, SUMMARY, FULL)]
    assert sizes[0] < sizes[1] < sizes[2]
    critical = decode(encode(msg, CRITICAL))
    assert critical.body == msg.body
    assert critical.tier == CRITICAL
    assert critical.state.values is None and critical.state.summary is None
    assert critical.state.tags == ("suit",)


def test_summary_decodes_to_summary_not_values():
    msg = golden_message()
    decoded = decode(encode(msg, SUMMARY))
    assert decoded.state.values is None
    assert decoded.state.summary == msg.state.summarize()
    assert decoded.state.summary.mean == 7.875


def test_critical_keeps_only_kind_critical_body_fields():
    decoded = decode(encode(golden_message(), CRITICAL))
    assert decoded.body == {"mode": "PUSH_REALTIME", "position": [3, 4]}


def test_decode_rejects_bad_input():
    data = encode(golden_message())
    with pytest.raises(MalformedPayload):
        decode(data[:-1])
    with pytest.raises(MalformedPayload):
        decode(b"[1, 2]")
    with pytest.raises(MalformedPayload):
        decode(data.replace(b'"seq":7', b'"seq":-7'))
    with pytest.raises(UnknownKind):
        decode(data.replace(b"STATE_UPDATE", b"GOSSIP"))


def test_encode_rejects_invalid_messages():
    with pytest.raises(InvalidMessage):
        encode({"kind": "ALERT"})
    summarized = SemanticMessage(MessageKind.STATE_UPDATE, "a", 0, 0.5,
                                 state=decode(encode(golden_message(), SUMMARY)).state)
    with pytest.raises(InvalidMessage):
        encode(summarized, FULL)


@pytest.mark.parametrize("tier", [FULL, SUMMARY, CRITICAL])
@pytest.mark.parametrize("magnitude", [1.7e308, -1.7976931348623157e308, 5e-324])
def test_extreme_state_values_encode_at_every_tier(tier, magnitude):
    msg = SemanticMessage(MessageKind.STATE_UPDATE, "rover-A", 2, 0.9,
                          body={"mode": "PUSH_REALTIME", "position": [0, 0]},
                          state=SemanticStateVector(values=(magnitude,) * 64, tags=("rover",)))
    decoded = decode(encode(msg, tier))
    assert decoded.tier == tier
    if tier == SUMMARY:
        summary = decoded.state.summary
        assert summary.minimum == summary.maximum == magnitude
        assert summary.mean == magnitude
    elif tier == FULL:
        assert decoded.state.values == msg.state.values


@pytest.mark.parametrize("body", [[1, 2], "text", 3, {"when": object()}, {"x": float("nan")}])
def test_message_body_must_be_json_mapping(body):
    with pytest.raises(InvalidMessage):
        SemanticMessage(MessageKind.COORDINATION, "hub", 1, 0.5, body=body)


@pytest.mark.parametrize("kwargs", [
    dict(confidence=1.5),
    dict(seq=-1),
    dict(sender=""),
])
def test_message_invariants(kwargs):
    base = dict(kind=MessageKind.COORDINATION, sender="b", seq=0, confidence=0.5)
    base.update(kwargs)
    with pytest.raises(ValueError):
        SemanticMessage(**base)


def test_alert_body_invariants():
    with pytest.raises(ValueError):
        AlertBody(AnomalyClass.UNRESPONSIVE, (0, 0), -1.0, 3)
    with pytest.raises(ValueError):
        AlertBody(AnomalyClass.UNRESPONSIVE, (0, 0), 1.0, 6)
    with pytest.raises(ValueError):
        SemanticMessage(MessageKind.ALERT, "a", 0, 0.5, body={"not": "an alert"})


def test_state_vector_invariants():
    with pytest.raises(ValueError):
        SemanticStateVector(values=(1.0,) * 63)
    with pytest.raises(ValueError):
        SemanticStateVector(values=(float("nan"),) * 64)
    with pytest.raises(ValueError):
        SemanticStateVector(values=None, tags=("x" * 17,))


def test_traffic_class_by_kind():
    assert alert_message().traffic_class == TrafficClass.EMERGENCY
    assert golden_message().traffic_class == TrafficClass.OPERATIONAL
    report = SemanticMessage(MessageKind.SITUATION_REPORT, "base", 0, 0.9, body={})
    assert report.traffic_class == TrafficClass.BULK
    policy = SemanticMessage(MessageKind.POLICY_UPDATE, "earth", 0, 1.0, body={"incident": "x"})
    assert policy.traffic_class == TrafficClass.EMERGENCY


@pytest.mark.parametrize("bandwidth, regime, tier", [
    (10_000_000, ConnectivityRegime.HIGH, FULL),
    (128_000, ConnectivityRegime.MODERATE, SUMMARY),
    (8_000, ConnectivityRegime.POOR, CRITICAL),
])
def test_select_tier(bandwidth, regime, tier):
    assert select_tier(bandwidth, regime) == tier


def test_frame_counts():
    assert len(frame_for_control_channel(b"x" * 100, 256)) == 1
    frames = frame_for_control_channel(b"x" * 500, 256)
    assert [len(f) - HEADER_SIZE for f in frames] == [240, 240, 20]
    assert all(len(f) <= 256 for f in frames)
    assert len(frame_for_control_channel(b"", 64)) == 1
    with pytest.raises(MtuTooSmall):
        frame_for_control_channel(b"x", HEADER_SIZE)


def test_reassembly_errors():
    frames = frame_for_control_channel(b"y" * 500, 256, msg_id=9)
    with pytest.raises(IncompleteMessage):
        reassemble(frames[:2])
    with pytest.raises(IncompleteMessage):
        reassemble(frames[:1] + frame_for_control_channel(b"z" * 500, 256, msg_id=10)[1:])
    with pytest.raises(IncompleteMessage):
        reassemble([])
    corrupted = bytearray(frames[1])
    corrupted[HEADER_SIZE + 3] ^= 0x01
    with pytest.raises(ChecksumMismatch):
        reassemble([frames[0], bytes(corrupted), frames[2]])


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(messages())
def test_full_round_trip_is_identity(msg):
    data = encode(msg, FULL)
    decoded = decode(data)
    assert decoded == msg
    assert encode(decoded, FULL) == data


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(messages())
def test_tier_sizes_never_grow(msg):
    full, summary, critical = (len(encode(msg, t)) for t in (FULL, SUMMARY, CRITICAL))
    assert critical <= summary <= full


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(alert_bodies, st.one_of(st.none(), state_vectors))
def test_alert_survives_every_tier(body, state):
    msg = SemanticMessage(MessageKind.ALERT, "suit-watch", 3, 0.9, body=body, state=state)
    for tier in CompressionTier:
        assert decode(encode(msg, tier)).body == body


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(messages(), st.integers(HEADER_SIZE + 1, 400), st.randoms(use_true_random=False))
def test_reassembly_ignores_arrival_order(msg, mtu, rnd):
    data = encode(msg)
    frames = frame_for_control_channel(data, mtu, msg_id=msg.seq)
    rnd.shuffle(frames)
    assert reassemble(frames) == data


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(st.binary(min_size=1, max_size=600), st.integers(HEADER_SIZE + 1, 200), st.data())
def test_single_bit_flip_is_detected(payload, mtu, data):
    frames = frame_for_control_channel(payload, mtu)
    which = data.draw(st.integers(0, len(frames) - 1))
    frame = bytearray(frames[which])
    bit = data.draw(st.integers(0, len(frame) * 8 - 1))
    frame[bit // 8] ^= 1 << (bit % 8)
    frames[which] = bytes(frame)
    random.Random(bit).shuffle(frames)
    with pytest.raises(ChecksumMismatch):
        reassemble(frames)


def test_summary_mean_of_huge_values_stays_finite():
    values = (1.7976931348623157e308,) * 32 + (1.0e308,) * 32
    summary = SemanticStateVector(values=values).summarize()
    assert summary.minimum <= summary.mean <= summary.maximum
    assert summary.mean == pytest.approx(1.7976931348623157e308 / 2 + 1.0e308 / 2)
