# lunarnet/scenario/spec.py
"""Scenario file schema, loading and cross-reference validation."""
import logging
import os
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from capabilities.registry import capability_registry
from radio.topology import Tier, TrafficClass
from utils.yaml_parser import YamlConfigParser

logger = logging.getLogger(__name__)

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                            "scenarios")

ErrorItem = Tuple[str, str, str]


class ScenarioParseError(ValueError):
    """The file is missing or is not a YAML mapping."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class ScenarioValidationError(ValueError):
    """Schema or reference errors, as (path, field, reason) triples."""

    def __init__(self, errors: List[ErrorItem]):
        self.errors = errors
        lines = [f"{path}: {field}: {reason}" for path, field, reason in errors]
        super().__init__("\n".join(lines))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NodeSpec(_Strict):
    name: str = Field(min_length=1)
    tier: Tier
    position_m: Tuple[float, float] = (0.0, 0.0)
    uncertainty_radius_m: float = Field(default=5.0, ge=0)


class LinkSpec(_Strict):
    a: str
    b: str
    bandwidth_bps: int = Field(gt=0)
    delay_s: float = Field(ge=0)
    quality: float = Field(ge=0, le=1)
    mtu: int = Field(default=65_536, gt=0)
    delay_min_s: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _distinct_ends(self) -> "LinkSpec":
        if self.a == self.b:
            raise ValueError(f"link endpoints must differ, got '{self.a}' twice")
        return self


class _Window(_Strict):
    start_s: float = Field(ge=0)
    end_s: float

    @model_validator(mode="after")
    def _ordered(self):
        if self.end_s <= self.start_s:
            raise ValueError(f"end_s {self.end_s} must be after start_s {self.start_s}")
        return self


class OcclusionEvent(_Window):
    kind: Literal["occlusion"]
    link: Tuple[str, str]


class DegradationEvent(_Window):
    kind: Literal["degradation"]
    link: Tuple[str, str]
    quality: float = Field(ge=0, le=1)
    bandwidth_bps: Optional[int] = Field(default=None, gt=0)


class HaltEvent(_Window):
    kind: Literal["halt"]
    node: str


class PingWindowEvent(_Window):
    kind: Literal["ping_outage", "ping_degraded"]
    node: str


class IncidentCloseEvent(_Strict):
    kind: Literal["incident_close"]
    at_s: float = Field(ge=0)


ScriptedEvent = Annotated[
    Union[OcclusionEvent, DegradationEvent, HaltEvent, PingWindowEvent, IncidentCloseEvent],
    Field(discriminator="kind"),
]


class QualityChangeSpec(_Strict):
    at_s: float = Field(ge=0)
    cells: List[Tuple[int, int]]
    quality: float = Field(ge=0, le=1)


class TerrainSpec(_Strict):
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    cell_size_m: float = Field(default=10.0, gt=0)
    base_quality: float = Field(default=1.0, ge=0, le=1)
    blocked: List[Tuple[int, int]] = Field(default_factory=list)
    changes: List[QualityChangeSpec] = Field(default_factory=list)


class TopicSpec(_Strict):
    name: str
    capability: str
    arguments: Dict[str, Any] = Field(default_factory=dict)
    period_s: float = Field(default=10.0, gt=0)


class ServerSpec(_Strict):
    node: str
    capabilities: List[Dict[str, Any]] = Field(default_factory=list)
    topics: List[TopicSpec] = Field(default_factory=list)
    broker_capacity: int = Field(default=256, gt=0)

    @field_validator("capabilities")
    @classmethod
    def _known_kinds(cls, entries: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
        for entry in entries:
            if "kind" not in entry:
                raise ValueError("every capability needs a 'kind'")
            if entry["kind"] not in capability_registry.kinds():
                raise ValueError(f"unknown capability kind '{entry['kind']}'")
        return entries


class RegimeSpec(_Strict):
    high_quality: float = Field(default=0.70, ge=0, le=1)
    poor_quality: float = Field(default=0.30, ge=0, le=1)
    high_bandwidth_bps: int = Field(default=1_000_000, gt=0)
    poor_bandwidth_bps: int = Field(default=64_000, gt=0)
    hysteresis: float = Field(default=0.05, ge=0, le=0.5)


class AgentSpec(_Strict):
    node: str
    context_server: Optional[str] = None
    topics: List[str] = Field(default_factory=list)
    base_confidence: float = Field(default=0.9, ge=0, le=1)
    confidence_gate: float = Field(default=0.5, ge=0, le=1)
    step_period_s: float = Field(default=1.0, gt=0)
    pull_staleness_s: float = Field(default=10.0, ge=0)
    summary_period_s: float = Field(default=10.0, gt=0)
    report_period_s: float = Field(default=60.0, gt=0)
    sync_period_s: float = Field(default=60.0, gt=0)
    prefetch_lookahead_s: float = Field(default=10.0, ge=0)
    query_timeout_s: float = Field(default=30.0, gt=0)
    rescue: bool = False
    watches: Optional[str] = None
    position_cell: Tuple[int, int] = (0, 0)
    move_period_s: float = Field(default=30.0, gt=0)
    replan_threshold: float = Field(default=1.0, ge=0)
    wireless_weight: float = Field(default=10.0, ge=0)


class SpectrumSpec(_Strict):
    initial: Dict[TrafficClass, float] = Field(default_factory=lambda: {
        TrafficClass.EMERGENCY: 0.2, TrafficClass.OPERATIONAL: 0.5, TrafficClass.BULK: 0.3})
    emergency_floor: float = Field(default=0.6, ge=0, le=1)
    earth_shares: Optional[Dict[TrafficClass, float]] = None

    @field_validator("initial", "earth_shares")
    @classmethod
    def _sums_to_one(cls, shares):
        if shares is None:
            return shares
        if any(v < 0 for v in shares.values()) or abs(sum(shares.values()) - 1.0) > 1e-9:
            raise ValueError(f"shares must be non-negative and sum to 1, got {shares}")
        return shares


class RadioSpec(_Strict):
    noise_amplitude: float = Field(default=0.0, ge=0, le=1)
    ci_rate_per_s: float = Field(default=0.002, ge=0)


class DtnSpec(_Strict):
    ttl_s: Dict[TrafficClass, float] = Field(default_factory=dict)

    @field_validator("ttl_s")
    @classmethod
    def _positive(cls, ttls):
        for cls_name, ttl in ttls.items():
            if ttl <= 0:
                raise ValueError(f"TTL for {cls_name.value} must be positive")
        return ttls


class ScenarioSpec(_Strict):
    """A complete, schema-checked scenario."""

    name: str
    seed: int = 0
    duration_s: float = Field(gt=0)
    nodes: List[NodeSpec] = Field(min_length=1)
    links: List[LinkSpec] = Field(default_factory=list)
    events: List[ScriptedEvent] = Field(default_factory=list)
    terrain: Optional[TerrainSpec] = None
    servers: List[ServerSpec] = Field(default_factory=list)
    agents: List[AgentSpec] = Field(default_factory=list)
    regime: RegimeSpec = Field(default_factory=RegimeSpec)
    spectrum: SpectrumSpec = Field(default_factory=SpectrumSpec)
    radio: RadioSpec = Field(default_factory=RadioSpec)
    dtn: DtnSpec = Field(default_factory=DtnSpec)

    @classmethod
    def from_yaml(cls, file_path: str) -> "ScenarioSpec":
        try:
            data = YamlConfigParser.load_config(file_path)
        except FileNotFoundError:
            raise ScenarioParseError(file_path, "no such file")
        except OSError as exc:
            raise ScenarioParseError(file_path, exc.strerror or str(exc))
        except yaml.YAMLError as exc:
            raise ScenarioParseError(file_path, f"invalid YAML: {exc}")
        return cls.from_dict(data, file_path)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "<scenario>") -> "ScenarioSpec":
        try:
            spec = cls.model_validate(data)
        except ValidationError as exc:
            raise ScenarioValidationError([
                (path, ".".join(str(p) for p in err["loc"]) or "<root>", err["msg"])
                for err in exc.errors()
            ])
        errors = [(path, field, reason) for field, reason in spec.reference_errors()]
        if errors:
            raise ScenarioValidationError(errors)
        return spec

    def node(self, name: str) -> NodeSpec:
        for node in self.nodes:
            if node.name == name:
                return node
        raise KeyError(f"Unknown node '{name}'")

    def nodes_of(self, tier: Tier) -> List[str]:
        return [n.name for n in self.nodes if n.tier == tier]

    def reference_errors(self) -> List[Tuple[str, str]]:
        """Every (field, reason) where a name points at nothing."""
        errors: List[Tuple[str, str]] = []
        names = [n.name for n in self.nodes]
        known = set(names)
        tiers = {n.name: n.tier for n in self.nodes}
        for name in sorted({n for n in names if names.count(n) > 1}):
            errors.append(("nodes", f"duplicate node '{name}'"))

        def need(field: str, node: str) -> bool:
            if node not in known:
                errors.append((field, f"unknown node '{node}'"))
                return False
            return True

        link_keys = set()
        for i, link in enumerate(self.links):
            need(f"links.{i}.a", link.a)
            need(f"links.{i}.b", link.b)
            if link.delay_min_s is not None:
                if Tier.EARTH not in (tiers.get(link.a), tiers.get(link.b)):
                    errors.append((f"links.{i}.delay_min_s",
                                   "only links with an EARTH endpoint draw their delay"))
                elif link.delay_min_s > link.delay_s:
                    errors.append((f"links.{i}.delay_min_s",
                                   f"{link.delay_min_s} exceeds delay_s {link.delay_s}"))
            key = tuple(sorted((link.a, link.b)))
            if key in link_keys:
                errors.append((f"links.{i}", f"duplicate link {key[0]}-{key[1]}"))
            link_keys.add(key)
        for i, event in enumerate(self.events):
            if isinstance(event, (OcclusionEvent, DegradationEvent)):
                ends = [need(f"events.{i}.link", end) for end in event.link]
                if all(ends) and tuple(sorted(event.link)) not in link_keys:
                    errors.append((f"events.{i}.link",
                                   f"no link between '{event.link[0]}' and '{event.link[1]}'"))
            elif isinstance(event, (HaltEvent, PingWindowEvent)):
                if need(f"events.{i}.node", event.node) and isinstance(event, PingWindowEvent) \
                        and tiers[event.node] != Tier.SUIT:
                    errors.append((f"events.{i}.node", f"'{event.node}' is not a suit"))
        servers = set()
        for i, server in enumerate(self.servers):
            need(f"servers.{i}.node", server.node)
            servers.add(server.node)
            kinds = {c.get("name", c["kind"]) for c in server.capabilities}
            for j, topic in enumerate(server.topics):
                if topic.capability not in kinds:
                    errors.append((f"servers.{i}.topics.{j}.capability",
                                   f"server '{server.node}' has no capability '{topic.capability}'"))
            if self.terrain is None and any(c["kind"] == "locomotion_planning"
                                            for c in server.capabilities):
                errors.append((f"servers.{i}.capabilities",
                               "locomotion_planning needs a terrain section"))
        bases = self.nodes_of(Tier.BASE)
        if self.agents and len(bases) != 1:
            errors.append(("nodes", f"agents need exactly one BASE node, found {len(bases)}"))
        if len(self.nodes_of(Tier.EARTH)) > 1:
            errors.append(("nodes", "at most one EARTH node is supported"))
        for i, agent in enumerate(self.agents):
            if need(f"agents.{i}.node", agent.node) and tiers[agent.node] in (Tier.EARTH, Tier.SUIT):
                errors.append((f"agents.{i}.node",
                               f"'{agent.node}' is a {tiers[agent.node].value} node"))
            if agent.context_server is not None and agent.context_server not in servers:
                errors.append((f"agents.{i}.context_server",
                               f"no server on '{agent.context_server}'"))
            if agent.watches is not None and need(f"agents.{i}.watches", agent.watches):
                if tiers[agent.watches] != Tier.SUIT:
                    errors.append((f"agents.{i}.watches", f"'{agent.watches}' is not a suit"))
                elif tuple(sorted((agent.node, agent.watches))) not in link_keys:
                    errors.append((f"agents.{i}.watches",
                                   f"no link between '{agent.node}' and '{agent.watches}'"))
            if agent.rescue and agent.node not in servers:
                errors.append((f"agents.{i}.rescue",
                               f"rescue rover '{agent.node}' needs a local server"))
            if self.terrain is not None:
                x, y = agent.position_cell
                if not (0 <= x < self.terrain.width and 0 <= y < self.terrain.height):
                    errors.append((f"agents.{i}.position_cell",
                                   f"cell {agent.position_cell} lies outside the terrain"))
        if len({a.node for a in self.agents}) != len(self.agents):
            errors.append(("agents", "a node hosts at most one agent"))
        return errors


def resolve_scenario_path(name_or_path: str) -> str:
    """A path as given, or the bundled scenario of that name."""
    if os.path.exists(name_or_path):
        return name_or_path
    bundled = os.path.join(SCENARIO_DIR, f"{name_or_path}.yaml")
    if os.path.sep not in name_or_path and os.path.exists(bundled):
        return bundled
    return name_or_path


def load_scenario(name_or_path: str) -> ScenarioSpec:
    path = resolve_scenario_path(name_or_path)
    spec = ScenarioSpec.from_yaml(path)
    logger.debug(f"Loaded scenario '{spec.name}' from {path}")
    return spec
