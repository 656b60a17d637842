# lunarnet/capabilities/terrain.py
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from simkernel.clock import SimTime

Cell = Tuple[int, int]


@dataclass(frozen=True)
class QualityChange:
    """From ``at`` on, the listed cells predict ``quality``."""

    at: SimTime
    cells: Tuple[Cell, ...]
    quality: float

    def __post_init__(self):
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"Cell quality must be in [0, 1], got {self.quality}")


@dataclass
class TerrainGrid:
    """Traversability and predicted link quality per cell.

    Cells are (x, y); arrays are indexed [y, x].
    """

    width: int
    height: int
    cell_size_m: float = 10.0
    quality: Optional[np.ndarray] = None
    blocked: Optional[np.ndarray] = None
    changes: List[QualityChange] = field(default_factory=list)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"Grid must be non-empty, got {self.width}x{self.height}")
        shape = (self.height, self.width)
        self.quality = (np.ones(shape) if self.quality is None
                        else np.asarray(self.quality, dtype=float))
        self.blocked = (np.zeros(shape, dtype=bool) if self.blocked is None
                        else np.asarray(self.blocked, dtype=bool))
        if self.quality.shape != shape or self.blocked.shape != shape:
            raise ValueError(f"Grid layers must have shape {shape}")
        if np.any((self.quality < 0) | (self.quality > 1)):
            raise ValueError("Cell qualities must lie in [0, 1]")
        for change in self.changes:
            for cell in change.cells:
                self._require(cell)
        self.changes.sort(key=lambda c: c.at)

    @classmethod
    def build(cls, width: int, height: int, base_quality: float = 1.0,
              blocked: Iterable[Cell] = (), cell_size_m: float = 10.0,
              changes: Sequence[QualityChange] = ()) -> "TerrainGrid":
        mask = np.zeros((height, width), dtype=bool)
        for x, y in blocked:
            mask[y, x] = True
        return cls(width, height, cell_size_m, np.full((height, width), float(base_quality)),
                   mask, list(changes))

    def _require(self, cell: Cell) -> None:
        if not self.in_bounds(cell):
            raise ValueError(f"Cell {cell} lies outside the {self.width}x{self.height} grid")

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def traversable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.blocked[cell[1], cell[0]]

    def neighbors(self, cell: Cell) -> List[Cell]:
        x, y = cell
        around = [(x - 1, y), (x, y - 1), (x, y + 1), (x + 1, y)]
        return [c for c in around if self.traversable(c)]

    def quality_at(self, t: SimTime) -> np.ndarray:
        """Predicted quality map with every change up to ``t`` applied."""
        q = self.quality.copy()
        for change in self.changes:
            if change.at > t:
                break
            for x, y in change.cells:
                q[y, x] = change.quality
        return q

    def cell_of(self, location_m: Tuple[float, float]) -> Cell:
        x = int(round(location_m[0] / self.cell_size_m))
        y = int(round(location_m[1] / self.cell_size_m))
        return (min(max(x, 0), self.width - 1), min(max(y, 0), self.height - 1))

    def location_of(self, cell: Cell) -> Tuple[float, float]:
        return (cell[0] * self.cell_size_m, cell[1] * self.cell_size_m)
