import pytest

from a2a.codec import encode
from a2a.framing import frame_for_control_channel
from a2a.messages import AlertBody, AnomalyClass, CompressionTier, MessageKind, SemanticMessage
from agent.biometrics import AnomalyWatcher, BiometricSuit, PingWindow
from agent.cognitive import AgentConfig, CognitiveAgent
from agent.messaging import Messenger, unframe
from agent.policies import (Criticality, Decision, DecisionAction, DisseminationMode,
                            GateOutcome, autonomous_decision_gate, ewma_update, mode_for,
                            modulate_confidence, passes_gate, planning_horizon)
from agent.state import AgentState, PeerAvailability, UnknownPeer
from capabilities.base import World
from capabilities.capsets import create_capability_set
from dtn.network import DtnNetwork
from radio.contact_plan import ContactPlan
from radio.model import RadioModel
from radio.regime import ConnectivityRegime
from radio.topology import NodeId, Tier, TrafficClass
from server.context_server import ContextServer
from simkernel.clock import seconds
from simkernel.engine import Engine
from .conftest import Recorder, make_link

PUSH = DisseminationMode.PUSH_REALTIME
AUTONOMOUS = DisseminationMode.AUTONOMOUS_BULK


def note(sender="rover", seq=1, kind=MessageKind.COORDINATION, body=None):
    return SemanticMessage(kind, sender, seq, 0.8,
                           body=body if body is not None else {"action": "hello", "target": "x"})


@pytest.mark.parametrize("regime, mode", [
    (ConnectivityRegime.HIGH, DisseminationMode.PUSH_REALTIME),
    (ConnectivityRegime.MODERATE, DisseminationMode.PULL_CACHED),
    (ConnectivityRegime.POOR, DisseminationMode.AUTONOMOUS_BULK),
])
def test_mode_follows_regime(regime, mode):
    assert mode_for(regime) == mode


def test_planning_horizon_shrinks_with_delay():
    assert planning_horizon(0.0) == 600.0
    assert planning_horizon(2.0) == 300.0
    assert planning_horizon(18.0) == 60.0
    with pytest.raises(ValueError):
        planning_horizon(-1.0)


def test_confidence_and_gate():
    assert modulate_confidence(0.9, 0.5) == 0.45
    with pytest.raises(ValueError):
        modulate_confidence(1.2, 0.5)
    critical = Decision(DecisionAction.SEND_ALERT, Criticality.CRITICAL, 0.1)
    optional = Decision(DecisionAction.ADAPT_SAMPLING_RATE, Criticality.NON_CRITICAL, 0.1)
    assert passes_gate(critical, 0.1)
    assert not passes_gate(optional, 0.49)
    assert passes_gate(optional, 0.5)


def test_autonomous_decision_gate():
    # a 1 s reallocation deadline cannot wait for a 2 s Earth round trip
    assert autonomous_decision_gate(1.0, 2.0) == GateOutcome.LOCAL
    assert autonomous_decision_gate(600.0, 2.0) == GateOutcome.DEFER_TO_EARTH
    assert autonomous_decision_gate(2.5, 2.0) == GateOutcome.DEFER_TO_EARTH
    with pytest.raises(ValueError):
        autonomous_decision_gate(-1.0, 2.0)


def test_peer_availability_ewma():
    peers = PeerAvailability(["hub", "base"])
    assert peers.update("hub", True) == pytest.approx(0.6)
    assert peers.update("hub", False) == pytest.approx(0.48)
    assert peers["base"] == 0.5
    assert ewma_update(1.0, True) == 1.0
    with pytest.raises(UnknownPeer):
        peers.update("earth", True)
    with pytest.raises(ValueError):
        PeerAvailability(["hub"], alpha=0.0)


def test_cache_keeps_the_freshest_value():
    state = AgentState(role=Tier.ROVER)
    assert state.remember("quality_map", "new", seconds(20))
    assert not state.remember("quality_map", "old", seconds(10))
    assert state.cache["quality_map"].value == "new"
    assert state.staleness("quality_map", seconds(25)) == seconds(5)
    assert state.staleness("missing", seconds(25)) is None
    assert state.cache_staleness(seconds(30)) == {"quality_map": 10.0}


def test_ping_window_rules():
    with pytest.raises(ValueError):
        PingWindow("lost", 0, 10)
    with pytest.raises(ValueError):
        PingWindow("outage", 10, 10)


def suit_world(windows, horizon_s=60):
    engine = Engine(seed=1)
    nodes = [NodeId("suit", Tier.SUIT), NodeId("rover", Tier.ROVER)]
    radio = RadioModel(nodes, ContactPlan.build([make_link("suit", "rover", 250_000, 0.001)], []))
    alerts = []
    horizon = seconds(horizon_s)
    suit = engine.register(BiometricSuit(engine, radio, "suit", "rover", horizon, windows))
    watcher = engine.register(AnomalyWatcher(engine, "rover", "suit", horizon, alerts.append,
                                             (90.0, 30.0)))
    suit.start()
    watcher.start()
    return engine, suit, alerts


def test_three_missed_pings_raise_one_alert():
    windows = [PingWindow("degraded", seconds(10), seconds(15)),
               PingWindow("outage", seconds(15), seconds(60))]
    engine, suit, alerts = suit_world(windows)
    engine.run_until(seconds(60))
    assert len(alerts) == 1
    assert alerts[0].anomaly_class == AnomalyClass.UNRESPONSIVE
    assert alerts[0].assistance_level == 5
    misses = engine.trace.of_kind("ping_missed")
    assert [m["t"] for m in misses[:3]] == [seconds(15.5), seconds(20.5), seconds(25.5)]
    assert misses[2]["consecutive"] == 3
    assert suit.status_at(seconds(12)) == "degraded"
    assert suit.status_at(seconds(15)) == "outage"


def test_alert_without_degradation_asks_for_less_help():
    engine, suit, alerts = suit_world([PingWindow("outage", seconds(20), seconds(60))])
    engine.run_until(seconds(60))
    assert [a.assistance_level for a in alerts] == [3]


def test_nominal_suit_never_alerts():
    engine, suit, alerts = suit_world([])
    engine.run_until(seconds(60))
    assert alerts == []
    assert not engine.trace.of_kind("ping_missed")
    assert all(p["sent"] for p in engine.trace.of_kind("biometric_ping"))


def star_radio():
    """rover and hub both reach base; no rover -- hub link. base reaches earth."""
    nodes = [NodeId("rover", Tier.ROVER), NodeId("hub", Tier.RELAY_HUB),
             NodeId("base", Tier.BASE), NodeId("earth", Tier.EARTH)]
    links = [make_link("rover", "base", 10_000_000, 0.002, 0.95),
             make_link("hub", "base", 10_000_000, 0.002, 0.95),
             make_link("base", "earth", 2_000_000, 1.0, 0.9, delay_min_s=0.75)]
    return RadioModel(nodes, ContactPlan.build(links, []))


def transport(radio):
    engine = Engine(seed=3)
    dtn = engine.register(DtnNetwork(engine, radio, seconds(100)))
    capset = create_capability_set("base", [], World(radio=radio))
    server = engine.register(ContextServer(engine, radio, "base", capset))
    return engine, dtn, server, Messenger(engine, radio, dtn, server)


def test_direct_send_is_framed_and_delivered(triangle):
    engine, dtn, server, messenger = transport(triangle)
    base = engine.register(Recorder("base"))
    msg = note()
    result = messenger.send("rover", "base", msg, CompressionTier.FULL, PUSH)
    assert result.channel == "direct" and result.delay == seconds(0.002)
    engine.run_until(seconds(1))
    [delivery] = base.events
    assert delivery.kind == "a2a_deliver"
    assert unframe(delivery.payload["_frames"]) == msg
    [sent] = engine.trace.of_kind("a2a_sent")
    assert (sent["channel"], sent["tier"], sent["msg_kind"]) == ("direct", "F", "COORDINATION")


def test_send_falls_back_to_the_broker():
    engine, dtn, server, messenger = transport(star_radio())
    result = messenger.send("rover", "hub", note(), CompressionTier.SUMMARY, PUSH)
    assert result.channel == "broker"
    assert server.broker.pending("hub") == 1


def test_autonomous_mode_sends_bundles(triangle):
    engine, dtn, server, messenger = transport(triangle)
    result = messenger.send("rover", "base", note(), CompressionTier.CRITICAL, AUTONOMOUS)
    assert result.channel == "dtn"
    [created] = engine.trace.of_kind("bundle_created")
    assert created["priority"] == TrafficClass.OPERATIONAL.value


def test_earth_is_never_brokered(triangle):
    engine, dtn, server, messenger = transport(triangle)
    assert messenger.send("rover", "earth", note(), CompressionTier.FULL, PUSH).channel == "dtn"
    assert server.broker.pending("earth") == 0


def test_broadcast_skips_peers_that_are_down(triangle):
    engine, dtn, server, messenger = transport(triangle)
    engine.run_until(seconds(15))
    assert messenger.broadcast("rover", ["base", "hub"], note(), CompressionTier.FULL,
                               PUSH) == ["hub"]


@pytest.fixture
def rover_agent(triangle):
    engine, dtn, server, messenger = transport(triangle)
    engine.register(Recorder("base"))
    engine.register(Recorder("hub"))
    agent = engine.register(CognitiveAgent(engine, triangle, dtn, messenger, "rover",
                                           AgentConfig(base="base"), seconds(100)))
    return engine, agent


def test_step_classifies_and_acts(rover_agent):
    engine, agent = rover_agent
    agent.step(0)
    [state] = engine.trace.of_kind("agent_state")
    assert (state["regime"], state["mode"], state["serving"]) == ("HIGH", "PUSH_REALTIME", "base")
    assert state["confidence"] == pytest.approx(0.9 * 0.95)
    assert state["horizon_s"] == pytest.approx(600.0 / (1.0 + 0.002 / 2.0))
    [sent] = engine.trace.of_kind("a2a_sent")
    assert (sent["dst"], sent["msg_kind"], sent["tier"]) == ("base", "STATE_UPDATE", "F")


def test_handover_when_the_serving_link_drops(rover_agent):
    engine, agent = rover_agent
    agent.step(0)
    engine.run_until(seconds(15))
    agent.step(seconds(15))
    [decision] = engine.trace.of_kind("decision")
    assert decision["decision"] == "REQUEST_HANDOVER"
    assert decision["reason"] == "base->hub"
    assert decision["executed"] is True


def test_low_confidence_defers_optional_decisions(rover_agent):
    engine, agent = rover_agent
    agent.state.mode = PUSH
    agent.state.confidence = 0.3
    optional = Decision(DecisionAction.ADAPT_SAMPLING_RATE, Criticality.NON_CRITICAL, 0.3)
    assert not agent.decide(optional)
    assert agent.decide(Decision(DecisionAction.REROUTE, Criticality.CRITICAL, 0.3))
    assert len(agent.state.defer_queue) == 1
    agent.step(0)
    decisions = engine.trace.of_kind("decision")
    assert [(d["decision"], d["executed"]) for d in decisions] == [
        ("ADAPT_SAMPLING_RATE", False), ("REROUTE", True), ("ADAPT_SAMPLING_RATE", True)]
    assert decisions[-1]["confidence"] >= 0.5
    assert agent.state.defer_queue == []


def _deliver(engine, dst, src, msg):
    frames = frame_for_control_channel(encode(msg), 1500)
    engine.schedule(engine.now, dst, "a2a_deliver", {"src": src, "frames": len(frames),
                                                      "_frames": frames})


def test_received_messages_are_traced_by_path(rover_agent):
    engine, agent = rover_agent
    agent.step(0)
    _deliver(engine, "rover", "hub", note(sender="hub"))
    _deliver(engine, "rover", "hub", note(sender="base", seq=4))
    engine.schedule(0, "rover", "a2a_deliver", {"src": "hub", "frames": 1,
                                                "_frames": [b"\x00" * 40]})
    engine.run_until(0)
    delivered = engine.trace.of_kind("a2a_delivered")
    assert [(d["sender"], d["via"]) for d in delivered] == [("hub", "DIRECT"), ("base", "RELAY")]
    assert len(engine.trace.of_kind("coordination_received")) == 2
    assert len(engine.trace.of_kind("a2a_rejected")) == 1


def test_coordination_request_is_traced(rover_agent):
    engine, agent = rover_agent
    agent.step(0)
    request = note(sender="hub", seq=3, body={"action": "priority_request",
                                              "target": "EMERGENCY", "incident": "inc-1"})
    eta = note(sender="base", seq=5, body={"action": "eta", "target": "inc-1", "eta_s": 90.0,
                                           "energy_j": 18000.0, "goal": [9, 3]})
    _deliver(engine, "rover", "hub", request)
    _deliver(engine, "rover", "hub", eta)
    engine.run_until(0)
    received = engine.trace.of_kind("coordination_received")
    assert [(r["agent"], r["sender"], r["action"], r["subject"]) for r in received] == [
        ("rover", "hub", "priority_request", "EMERGENCY"),
        ("rover", "base", "eta", "inc-1"),
    ]
    assert all(r["target"] == "rover" and r["seq"] >= 0 for r in received)
    delivered = engine.trace.of_kind("a2a_delivered")
    assert [d["msg_seq"] for d in delivered] == [3, 5]


def test_duplicate_alerts_are_dropped(rover_agent):
    engine, agent = rover_agent
    agent.step(0)
    alert = SemanticMessage(MessageKind.ALERT, "hub", 9, 0.85,
                            body=AlertBody(AnomalyClass.UNRESPONSIVE, (10.0, 10.0), 5.0, 3))
    _deliver(engine, "rover", "hub", alert)
    _deliver(engine, "rover", "hub", alert)
    engine.run_until(0)
    [received] = engine.trace.of_kind("alert_received")
    assert received["role"] == "ROVER"
    assert len(engine.trace.of_kind("alert_duplicate")) == 1
    # rebroadcast toward base only, never back to the sender
    rebroadcast = [s for s in engine.trace.of_kind("a2a_sent") if s["msg_kind"] == "ALERT"]
    assert [s["dst"] for s in rebroadcast] == ["base"]


def test_unknown_agent_event(rover_agent):
    engine, agent = rover_agent
    engine.schedule(0, "rover", "teleport")
    with pytest.raises(ValueError):
        engine.run_until(0)
