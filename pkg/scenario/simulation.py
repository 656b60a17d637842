# lunarnet/scenario/simulation.py
import logging
from dataclasses import dataclass, field
from typing import IO, Dict, List, Optional

from agent.biometrics import AnomalyWatcher, BiometricSuit, PingWindow
from agent.cognitive import AgentConfig, CognitiveAgent
from agent.messaging import Messenger
from capabilities.base import World
from capabilities.capsets import create_capability_set
from capabilities.terrain import QualityChange, TerrainGrid
from dtn.network import DtnNetwork
from radio.contact_plan import ContactPlan, DegradationWindow, NodeHalt, OcclusionWindow
from radio.model import RadioModel
from radio.regime import RegimeThresholds
from radio.topology import LinkConfig, LinkState, NodeId, Tier
from ric.controller import RicController
from ric.spectrum import SpectrumPolicy
from ric.twin import EarthTwin
from server.context_server import ContextServer, Topic
from simkernel.clock import SimTime, seconds
from simkernel.engine import Engine
from simkernel.trace import Trace
from .metrics import MetricsReport, compute_metrics
from .spec import (AgentSpec, DegradationEvent, HaltEvent, IncidentCloseEvent, OcclusionEvent,
                   PingWindowEvent, ScenarioSpec)

logger = logging.getLogger(__name__)


@dataclass
class Simulation:
    """Every wired component of one run, exposed for inspection."""

    spec: ScenarioSpec
    engine: Engine
    radio: RadioModel
    dtn: DtnNetwork
    horizon: SimTime
    terrain: Optional[TerrainGrid] = None
    servers: Dict[str, ContextServer] = field(default_factory=dict)
    agents: Dict[str, CognitiveAgent] = field(default_factory=dict)
    ric: Optional[RicController] = None
    twin: Optional[EarthTwin] = None
    suits: List[BiometricSuit] = field(default_factory=list)
    watchers: List[AnomalyWatcher] = field(default_factory=list)

    def start(self) -> None:
        self.engine.record("run_started", "scenario", scenario=self.spec.name,
                           seed=self.engine.seed, duration=self.horizon)
        self.dtn.start()
        for name in sorted(self.servers):
            self.servers[name].start()
        if self.ric is not None:
            self.ric.start()
        if self.twin is not None:
            self.twin.start()
        for name in sorted(self.agents):
            self.agents[name].start()
        for suit in self.suits:
            suit.start()
        for watcher in self.watchers:
            watcher.start()

    def run(self) -> Trace:
        self.engine.run_until(self.horizon)
        return self.engine.trace


@dataclass(frozen=True)
class RunResult:
    trace: Trace
    metrics: MetricsReport


def build_contact_plan(spec: ScenarioSpec) -> ContactPlan:
    links = [
        LinkConfig(
            a=link.a, b=link.b,
            baseline=LinkState(up=True, bandwidth_bps=link.bandwidth_bps,
                               one_way_delay=seconds(link.delay_s), quality=link.quality),
            mtu=link.mtu,
            delay_min=seconds(link.delay_min_s) if link.delay_min_s is not None else None,
        )
        for link in spec.links
    ]
    occlusions, degradations, halts = [], [], []
    for event in spec.events:
        if isinstance(event, OcclusionEvent):
            occlusions.append(OcclusionWindow(tuple(event.link), seconds(event.start_s),
                                              seconds(event.end_s)))
        elif isinstance(event, DegradationEvent):
            degradations.append(DegradationWindow(tuple(event.link), seconds(event.start_s),
                                                  seconds(event.end_s), event.quality,
                                                  event.bandwidth_bps))
        elif isinstance(event, HaltEvent):
            halts.append(NodeHalt(event.node, seconds(event.start_s), seconds(event.end_s)))
    return ContactPlan.build(links, occlusions, degradations, halts)


def build_terrain(spec: ScenarioSpec) -> Optional[TerrainGrid]:
    t = spec.terrain
    if t is None:
        return None
    changes = [QualityChange(seconds(c.at_s), tuple(tuple(cell) for cell in c.cells), c.quality)
               for c in t.changes]
    return TerrainGrid.build(t.width, t.height, t.base_quality, [tuple(c) for c in t.blocked],
                             t.cell_size_m, changes)


def agent_config(spec: ScenarioSpec, agent: AgentSpec) -> AgentConfig:
    earth = spec.nodes_of(Tier.EARTH)
    return AgentConfig(
        base=spec.nodes_of(Tier.BASE)[0],
        earth=earth[0] if earth else None,
        context_server=agent.context_server,
        topics=list(agent.topics),
        base_confidence=agent.base_confidence,
        gate=agent.confidence_gate,
        thresholds=RegimeThresholds(**spec.regime.model_dump()),
        step_period=seconds(agent.step_period_s),
        pull_staleness=seconds(agent.pull_staleness_s),
        summary_period=seconds(agent.summary_period_s),
        report_period=seconds(agent.report_period_s),
        sync_period=seconds(agent.sync_period_s),
        prefetch_lookahead=seconds(agent.prefetch_lookahead_s),
        query_timeout=seconds(agent.query_timeout_s),
        rescue=agent.rescue,
        position=tuple(agent.position_cell),
        move_period=seconds(agent.move_period_s),
        replan_threshold=agent.replan_threshold,
        wireless_weight=agent.wireless_weight,
    )


def build_simulation(spec: ScenarioSpec, seed: Optional[int] = None,
                     until_s: Optional[float] = None,
                     trace_sink: Optional[IO[str]] = None) -> Simulation:
    engine = Engine(seed=spec.seed if seed is None else seed, trace_sink=trace_sink)
    horizon = seconds(until_s if until_s is not None else spec.duration_s)
    plan = build_contact_plan(spec)
    radio = RadioModel([NodeId(n.name, n.tier) for n in spec.nodes], plan,
                       rng=engine.rng("radio"), noise_amplitude=spec.radio.noise_amplitude,
                       ci_rate_per_s=spec.radio.ci_rate_per_s)
    dtn = DtnNetwork(engine, radio, horizon,
                     ttls={cls: seconds(ttl) for cls, ttl in spec.dtn.ttl_s.items()})
    engine.register(dtn)
    sim = Simulation(spec, engine, radio, dtn, horizon, terrain=build_terrain(spec))

    world = World(radio, sim.terrain)
    for server in spec.servers:
        capset = create_capability_set(server.node, server.capabilities, world)
        topics = [Topic(t.name, t.capability, dict(t.arguments), seconds(t.period_s))
                  for t in server.topics]
        sim.servers[server.node] = engine.register(
            ContextServer(engine, radio, server.node, capset, topics, server.broker_capacity,
                          horizon))

    bases = spec.nodes_of(Tier.BASE)
    base = bases[0] if bases else None
    messenger = Messenger(engine, radio, dtn, sim.servers.get(base))
    if spec.agents:
        policy = SpectrumPolicy(plan.links, spec.spectrum.initial, spec.spectrum.emergency_floor)
        assets = spec.nodes_of(Tier.ROVER) + spec.nodes_of(Tier.RELAY_HUB)
        sim.ric = engine.register(RicController(engine, radio, dtn, policy, assets, base, horizon))

    for agent in spec.agents:
        node = agent.node
        sim.agents[node] = engine.register(CognitiveAgent(
            engine, radio, dtn, messenger, node, agent_config(spec, agent), horizon,
            servers=sim.servers, local_server=sim.servers.get(node),
            ric=sim.ric if radio.tier(node) == Tier.BASE else None,
        ))
    if sim.ric is not None:
        sim.ric.attach_agents(sim.agents)

    earth = spec.nodes_of(Tier.EARTH)
    if earth and base is not None and radio.has_link(base, earth[0]):
        shares = spec.spectrum.earth_shares or spec.spectrum.initial
        sim.twin = engine.register(EarthTwin(engine, radio, dtn, messenger, earth[0], base, shares))

    for agent in spec.agents:
        if agent.watches is None:
            continue
        suit = spec.node(agent.watches)
        windows = [PingWindow(e.kind.split("_", 1)[1], seconds(e.start_s), seconds(e.end_s))
                   for e in spec.events
                   if isinstance(e, PingWindowEvent) and e.node == suit.name]
        sim.suits.append(engine.register(
            BiometricSuit(engine, radio, suit.name, agent.node, horizon, windows)))
        sim.watchers.append(engine.register(
            AnomalyWatcher(engine, agent.node, suit.name, horizon,
                           sim.agents[agent.node].raise_alert, tuple(suit.position_m),
                           suit.uncertainty_radius_m)))

    for event in spec.events:
        if isinstance(event, IncidentCloseEvent) and sim.ric is not None:
            at = seconds(event.at_s)
            if at <= horizon:
                engine.schedule(at, sim.ric.component_id, "incident_close")
    return sim


def run_scenario(spec: ScenarioSpec, seed: Optional[int] = None,
                 until_s: Optional[float] = None,
                 trace_sink: Optional[IO[str]] = None) -> RunResult:
    """Run one scenario to its horizon; metrics come from the trace alone."""
    sim = build_simulation(spec, seed, until_s, trace_sink)
    sim.start()
    trace = sim.run()
    metrics = compute_metrics(trace.records)
    logger.info(f"Scenario '{spec.name}' seed={sim.engine.seed}: {len(trace)} trace records")
    return RunResult(trace, metrics)
