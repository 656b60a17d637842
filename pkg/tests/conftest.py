import os

import pytest

import capabilities  # noqa: F401  (registers capability kinds)
from radio.contact_plan import ContactPlan, OcclusionWindow
from radio.model import RadioModel
from radio.topology import LinkConfig, LinkState, NodeId, Tier
from scenario.simulation import run_scenario
from scenario.spec import load_scenario
from simkernel.clock import seconds
from simkernel.engine import Component, Engine

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


class Recorder(Component):
    """Component that remembers every event it receives."""

    def __init__(self, component_id: str = "rec"):
        super().__init__(component_id)
        self.events = []

    def handle(self, event):
        self.events.append(event)


def make_link(a, b, bandwidth_bps=1_000_000, delay_s=0.01, quality=0.9, mtu=65_536,
              delay_min_s=None):
    return LinkConfig(a, b, LinkState(True, bandwidth_bps, seconds(delay_s), quality), mtu,
                      seconds(delay_min_s) if delay_min_s is not None else None)


@pytest.fixture
def engine():
    return Engine(seed=7)


@pytest.fixture
def recorder(engine):
    return engine.register(Recorder())


@pytest.fixture
def triangle():
    """rover -- base direct link (occluded 10-20 s), rover -- hub -- base, base -- earth."""
    nodes = [NodeId("rover", Tier.ROVER), NodeId("hub", Tier.RELAY_HUB),
             NodeId("base", Tier.BASE), NodeId("earth", Tier.EARTH)]
    links = [
        make_link("rover", "base", 10_000_000, 0.002, 0.95),
        make_link("rover", "hub", 5_000_000, 0.002, 0.85),
        make_link("hub", "base", 10_000_000, 0.002, 0.95),
        make_link("base", "earth", 2_000_000, 1.0, 0.9, delay_min_s=0.75),
    ]
    plan = ContactPlan.build(links, [OcclusionWindow(("rover", "base"), seconds(10), seconds(20))])
    return RadioModel(nodes, plan)


@pytest.fixture(scope="session")
def eva_spec():
    return load_scenario("eva_incident")


@pytest.fixture(scope="session")
def eva_run(eva_spec):
    return run_scenario(eva_spec, seed=42)


@pytest.fixture(scope="session")
def eva_records(eva_run):
    return eva_run.trace.records
