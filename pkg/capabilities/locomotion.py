# lunarnet/capabilities/locomotion.py
import heapq
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from simkernel.clock import SimTime
from .base import Capability, CapabilityConfig, World
from .parameters import (
    ParameterSet,
    array_param,
    int_param,
    number_param,
)
from .registry import register_capability
from .terrain import Cell, TerrainGrid


class NoPath(LookupError):
    pass


def cell_cost(quality: np.ndarray, cell: Cell, wireless_weight: float) -> float:
    return 1.0 + wireless_weight * (1.0 - float(quality[cell[1], cell[0]]))


def path_cost(path: Sequence[Cell], quality: np.ndarray, wireless_weight: float) -> float:
    """Cost of entering every cell after the start, summed in path order."""
    total = 0.0
    for cell in path[1:]:
        total += cell_cost(quality, cell, wireless_weight)
    return total


def plan_locomotion(grid: TerrainGrid, start: Cell, goal: Cell, wireless_weight: float,
                    quality: Optional[np.ndarray] = None) -> List[Cell]:
    """Least-cost 4-connected path; ties go to the lower x, then the lower y."""
    start, goal = tuple(start), tuple(goal)
    for cell in (start, goal):
        if not grid.traversable(cell):
            raise ValueError(f"Cell {cell} is not traversable")
    if wireless_weight < 0:
        raise ValueError(f"Wireless weight must be non-negative, got {wireless_weight}")
    q = grid.quality if quality is None else np.asarray(quality, dtype=float)

    best = {start: 0.0}
    prev: Dict[Cell, Cell] = {}
    heap = [(0.0, start[0], start[1])]
    done = set()
    while heap:
        cost, x, y = heapq.heappop(heap)
        cell = (x, y)
        if cell in done:
            continue
        done.add(cell)
        if cell == goal:
            break
        for nxt in grid.neighbors(cell):
            if nxt in done:
                continue
            candidate = cost + cell_cost(q, nxt, wireless_weight)
            if candidate < best.get(nxt, float("inf")):
                best[nxt] = candidate
                prev[nxt] = cell
                heapq.heappush(heap, (candidate, nxt[0], nxt[1]))
    if goal not in done:
        raise NoPath(f"No traversable path from {start} to {goal}")
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    return path[::-1]


@dataclass
class LocomotionPlanningConfig(CapabilityConfig):
    wireless_weight: float = 10.0

    def create_capability(self, world: World) -> "LocomotionPlanning":
        if world.terrain is None:
            raise ValueError(f"Capability '{self.name}' needs a terrain grid")
        return LocomotionPlanning(self.name, self.description, world.terrain,
                                  self.wireless_weight)


class LocomotionPlanning(Capability):
    """Grid planner trading path length against predicted link quality."""

    def __init__(self, name: str, description: str, terrain: TerrainGrid,
                 wireless_weight: float):
        cell = array_param("cell", "grid cell [x, y]", items=int_param("coord", "coordinate"),
                           min_length=2, max_length=2)
        request = ParameterSet([
            array_param("start", "start cell [x, y]", items=cell.items, min_length=2, max_length=2),
            array_param("goal", "goal cell [x, y]", items=cell.items, min_length=2, max_length=2),
            number_param("wireless_weight", "weight of (1 - quality) per cell",
                         required=False, default=wireless_weight, minimum=0),
            array_param("quality_map", "rows of predicted quality; terrain truth when empty",
                        required=False, default=[]),
        ])
        response = ParameterSet([
            array_param("path", "cells from start to goal", items=cell),
            number_param("cost", "sum of per-cell costs after the start"),
        ])
        super().__init__(name, "locomotion_planning", description, request, response)
        self.terrain = terrain

    def evaluate(self, params: Dict[str, Any], now: SimTime) -> Dict[str, Any]:
        quality = (np.asarray(params["quality_map"], dtype=float) if params["quality_map"]
                   else self.terrain.quality_at(now))
        weight = params["wireless_weight"]
        path = plan_locomotion(self.terrain, tuple(params["start"]), tuple(params["goal"]),
                               weight, quality)
        return {"path": [list(c) for c in path], "cost": path_cost(path, quality, weight)}


@register_capability("locomotion_planning")
def create_locomotion_config(name: str, config_data: Dict) -> LocomotionPlanningConfig:
    return LocomotionPlanningConfig(
        name=name,
        kind="locomotion_planning",
        description=config_data.get("description", "Wireless-aware grid path planning"),
        wireless_weight=float(config_data.get("wireless_weight", 10.0)),
    )
