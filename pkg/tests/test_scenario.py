import math

import pytest

from scenario.metrics import POLICY_KINDS, compute_metrics
from scenario.narrative import alert_after_third_miss, check_narrative
from scenario.simulation import build_simulation, run_scenario
from scenario.spec import ScenarioParseError, ScenarioSpec, ScenarioValidationError, load_scenario
from simkernel.clock import seconds
from simkernel.trace import load_jsonl
from utils.yaml_parser import YamlConfigParser

MODE_OF_REGIME = {"HIGH": "PUSH_REALTIME", "MODERATE": "PULL_CACHED", "POOR": "AUTONOMOUS_BULK"}


def minimal(**overrides):
    data = {
        "name": "tiny",
        "duration_s": 10,
        "nodes": [{"name": "a", "tier": "ROVER"}, {"name": "base", "tier": "BASE"}],
        "links": [{"a": "a", "b": "base", "bandwidth_bps": 1000, "delay_s": 0.01,
                   "quality": 0.9}],
    }
    data.update(overrides)
    return data


def errors_of(data):
    with pytest.raises(ScenarioValidationError) as info:
        ScenarioSpec.from_dict(data, "tiny.yaml")
    return info.value.errors


def test_minimal_scenario_loads():
    spec = ScenarioSpec.from_dict(minimal())
    assert spec.nodes_of(spec.nodes[1].tier) == ["base"]
    assert spec.spectrum.emergency_floor == 0.6
    assert spec.regime.high_quality == 0.70


def test_schema_errors_name_the_field():
    assert ("tiny.yaml", "duration_s", ) == errors_of(minimal(duration_s=-1))[0][:2]
    fields = [field for _, field, _ in errors_of(minimal(colour="red"))]
    assert fields == ["colour"]
    fields = [field for _, field, _ in errors_of(minimal(events=[
        {"kind": "occlusion", "link": ["a", "base"], "start_s": 5, "end_s": 5}]))]
    assert fields[0].startswith("events.0")


def test_reference_errors_are_collected():
    data = minimal(
        links=[{"a": "a", "b": "ghost", "bandwidth_bps": 1, "delay_s": 0, "quality": 1}],
        events=[{"kind": "ping_outage", "node": "a", "start_s": 0, "end_s": 5}],
        agents=[{"node": "a", "context_server": "base"}],
    )
    assert errors_of(data) == [
        ("tiny.yaml", "links.0.b", "unknown node 'ghost'"),
        ("tiny.yaml", "events.0.node", "'a' is not a suit"),
        ("tiny.yaml", "agents.0.context_server", "no server on 'base'"),
    ]


def test_locomotion_needs_terrain():
    data = minimal(servers=[{"node": "base", "capabilities": [{"kind": "locomotion_planning"}]}])
    assert errors_of(data) == [("tiny.yaml", "servers.0.capabilities",
                                "locomotion_planning needs a terrain section")]


def test_unknown_capability_kind():
    data = minimal(servers=[{"node": "base", "capabilities": [{"kind": "teleport"}]}])
    [(_, field, reason)] = errors_of(data)
    assert field == "servers.0.capabilities"
    assert "teleport" in reason


def test_parse_errors(tmp_path):
    with pytest.raises(ScenarioParseError):
        load_scenario(str(tmp_path / "missing.yaml"))
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioParseError):
        load_scenario(str(listing))
    broken = tmp_path / "broken.yaml"
    broken.write_text("name: [unclosed\n")
    with pytest.raises(ScenarioParseError):
        load_scenario(str(broken))


def test_environment_substitution(monkeypatch):
    monkeypatch.delenv("LUNARNET_SEED", raising=False)
    assert load_scenario("eva_incident").seed == 42
    monkeypatch.setenv("LUNARNET_SEED", "7")
    assert load_scenario("eva_incident").seed == 7
    assert YamlConfigParser.loads("a: ${LUNARNET_UNSET_NAME}") == {"a": "${LUNARNET_UNSET_NAME}"}
    assert YamlConfigParser.loads("") == {}


def test_bundled_scenarios_validate():
    for name in ("eva_incident", "quiescent"):
        assert load_scenario(name).name == name


def test_eva_narrative(eva_spec, eva_records):
    checks = check_narrative(eva_records, eva_spec)
    assert [c.name for c in checks] == ["a", "b", "c", "d", "e"]
    failed = [f"{c.name}: {c.detail}" for c in checks if not c.passed]
    assert failed == []


def test_eva_metrics(eva_run):
    m = eva_run.metrics
    assert m.duration_s == 1800.0
    assert m.alert_e2e_latency_s is not None and 0 <= m.alert_e2e_latency_s < 1.0
    assert set(m.delivery_ratio) <= {"EMERGENCY", "OPERATIONAL", "BULK"}
    assert all(0.0 <= r <= 1.0 for r in m.delivery_ratio.values())
    assert 0.0 < m.autonomous_decision_fraction <= 1.0
    assert m.earth_rtt_s
    assert all(1.5 <= rtt <= 2.0 for rtt in m.earth_rtt_s)
    assert m.mode_timeline["rover-A"][0][1] == "PUSH_REALTIME"


def test_eva_trace_is_ordered(eva_records):
    keys = [(r["t"], r["seq"]) for r in eva_records if r["seq"] >= 0]
    assert all(a[0] <= b[0] for a, b in zip(keys, keys[1:]))


def test_metrics_come_from_the_trace_alone(eva_run):
    reloaded = load_jsonl(eva_run.trace.to_jsonl().splitlines())
    assert reloaded == eva_run.trace.records
    assert compute_metrics(reloaded) == eva_run.metrics


def test_runs_are_reproducible(eva_spec, eva_run):
    again = run_scenario(eva_spec, seed=42)
    assert again.trace.to_jsonl() == eva_run.trace.to_jsonl()


def test_seed_changes_the_earth_delays(eva_spec, eva_run):
    other = run_scenario(eva_spec, seed=43)
    assert other.metrics.earth_rtt_s != eva_run.metrics.earth_rtt_s


def test_emergency_floor_holds_during_the_incident(eva_records):
    policies = [r for r in eva_records if r["kind"] in POLICY_KINDS]
    assert policies[0]["kind"] == "policy_initialized"
    assert any(r["kind"] == "policy_reallocated" for r in policies)
    restored = [r for r in policies if r["kind"] == "policy_restored"]
    assert restored and restored[-1]["floored"] == []
    for record in policies:
        for link, shares in record["shares"].items():
            assert math.isclose(sum(shares.values()), 1.0, abs_tol=1e-9)
            if link in record["floored"]:
                assert shares["EMERGENCY"] >= record["floor"] - 1e-9


def test_mode_always_follows_regime(eva_records):
    states = [r for r in eva_records if r["kind"] == "agent_state"]
    assert states
    for r in states:
        assert MODE_OF_REGIME[r["regime"]] == r["mode"]


def test_gated_decisions_respect_confidence(eva_records):
    decisions = [r for r in eva_records if r["kind"] == "decision"]
    assert decisions
    for r in decisions:
        if r["criticality"] == "NON_CRITICAL" and r["executed"]:
            assert r["confidence"] >= 0.5
    deferred = [r for r in eva_records if r["kind"] == "decision_deferred"]
    assert all(r["confidence"] < 0.5 for r in deferred)


def test_quiescent_run():
    result = run_scenario(load_scenario("quiescent"))
    m = result.metrics
    assert m.alert_e2e_latency_s is None
    assert all(r == 1.0 for r in m.delivery_ratio.values())
    assert {timeline[0][1] for timeline in m.mode_timeline.values()} == {"PUSH_REALTIME"}
    assert all(len(timeline) == 1 for timeline in m.mode_timeline.values())
    assert not result.trace.of_kind("policy_reallocated")
    assert not result.trace.of_kind("alert_raised")


def test_until_cuts_the_run_short():
    result = run_scenario(load_scenario("quiescent"), until_s=30)
    assert result.metrics.duration_s == 30.0
    assert max(r["t"] for r in result.trace.records) <= seconds(30)


def test_simulation_wiring(eva_spec):
    sim = build_simulation(eva_spec, seed=1)
    assert sorted(sim.agents) == ["base", "rover-A", "rover-B-high-terrain"]
    assert sorted(sim.servers) == ["base", "rover-A"]
    assert sim.twin is not None and sim.ric is not None
    assert [s.node for s in sim.suits] == ["astronaut-suit"]
    assert sim.engine.seed == 1


def test_compute_metrics_on_a_handmade_trace():
    records = [
        {"t": 0, "seq": -1, "target": "scenario", "kind": "run_started", "duration": seconds(100)},
        {"t": seconds(10), "seq": 1, "target": "r", "kind": "alert_raised"},
        {"t": seconds(10.25), "seq": 2, "target": "b", "kind": "alert_received", "role": "ROVER"},
        {"t": seconds(10.5), "seq": 3, "target": "b", "kind": "alert_received", "role": "BASE"},
        {"t": 0, "seq": 4, "target": "dtn", "kind": "bundle_created", "priority": "BULK"},
        {"t": 0, "seq": 5, "target": "dtn", "kind": "bundle_created", "priority": "BULK"},
        {"t": 0, "seq": 6, "target": "dtn", "kind": "bundle_created", "priority": "BULK"},
        {"t": 1, "seq": 7, "target": "dtn", "kind": "bundle_delivered", "priority": "BULK"},
        {"t": 2, "seq": 8, "target": "dtn", "kind": "bundle_expired", "priority": "BULK"},
        {"t": 3, "seq": 9, "target": "a", "kind": "decision", "executed": True,
         "made_by": "LOCAL"},
        {"t": 3, "seq": 9, "target": "a", "kind": "decision", "executed": True,
         "made_by": "EARTH"},
        {"t": 3, "seq": 9, "target": "a", "kind": "decision", "executed": False,
         "made_by": "LOCAL"},
        {"t": 0, "seq": 0, "target": "ric", "kind": "policy_initialized",
         "shares": {"a|b": {"EMERGENCY": 0.2, "OPERATIONAL": 0.5, "BULK": 0.3}}},
        {"t": seconds(1), "seq": 10, "target": "a", "kind": "agent_state", "agent": "a",
         "regime": "HIGH", "mode": "PUSH_REALTIME"},
        {"t": seconds(2), "seq": 11, "target": "a", "kind": "agent_state", "agent": "a",
         "regime": "HIGH", "mode": "PUSH_REALTIME"},
        {"t": seconds(3), "seq": 12, "target": "a", "kind": "agent_state", "agent": "a",
         "regime": "POOR", "mode": "AUTONOMOUS_BULK"},
        {"t": 5, "seq": 13, "target": "a", "kind": "a2a_sent", "tier": "C"},
        {"t": 6, "seq": 14, "target": "earth", "kind": "earth_round_trip", "rtt_s": 1.75},
    ]
    m = compute_metrics(records)
    assert m.duration_s == 100.0
    assert m.alert_e2e_latency_s == 0.5
    assert m.delivery_ratio == {"BULK": 0.5}
    assert m.autonomous_decision_fraction == 0.5
    assert m.regime_timeline == {"a": [[1.0, "HIGH"], [3.0, "POOR"]]}
    assert m.mode_timeline == {"a": [[1.0, "PUSH_REALTIME"], [3.0, "AUTONOMOUS_BULK"]]}
    assert m.messages_by_tier == {"C": 1}
    assert m.earth_rtt_s == [1.75]
    assert [p["t_s"] for p in m.emergency_bandwidth_timeline] == [0.0, 100.0]
    assert m.emergency_bandwidth_timeline[-1]["event"] == "end"
    assert m.to_csv().splitlines()[0] == "metric,key,value"
    assert type(m).from_dict(m.to_dict()) == m


def test_narrative_reports_a_missing_alert(eva_spec):
    check = alert_after_third_miss([], eva_spec)
    assert not check.passed
    assert check.detail == "no alert was raised"
