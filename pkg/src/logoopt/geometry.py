"""Hyperrectangle cells on the unit cube and the depth ledger holding them.

Cells live on a ternary lattice: along each axis a cell is the interval
``[index / 3**level, (index + 1) / 3**level]``.  Storing the integer pair
instead of float bounds keeps side lengths exact, makes the longest-axis
choice immune to rounding, and lets the middle child reproduce its parent's
center bit for bit.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np


class DomainError(ValueError):
    """A point lies outside the domain it is mapped from."""


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lower, upper]`` in original units."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise ValueError("lower and upper must be non-empty and of equal length")
        if any(not lo < hi for lo, hi in zip(lower, upper)):
            raise ValueError(f"degenerate domain: lower={lower}, upper={upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "Domain":
        return cls((lo,) * dim, (hi,) * dim)


def normalize(point: Sequence[float], domain: Domain) -> np.ndarray:
    """Map ``point`` from ``domain`` onto ``[0, 1]^D``."""
    x = np.asarray(point, dtype=float)
    lo = np.asarray(domain.lower)
    hi = np.asarray(domain.upper)
    if x.shape != lo.shape:
        raise DomainError(f"point has shape {x.shape}, domain has dimension {domain.dim}")
    if np.any(x < lo) or np.any(x > hi):
        raise DomainError(f"point {x.tolist()} outside domain")
    return (x - lo) / (hi - lo)


def denormalize(unit_point: Sequence[float], domain: Domain) -> np.ndarray:
    """Inverse of :func:`normalize`."""
    u = np.asarray(unit_point, dtype=float)
    lo = np.asarray(domain.lower)
    hi = np.asarray(domain.upper)
    if u.shape != lo.shape:
        raise DomainError(f"point has shape {u.shape}, domain has dimension {domain.dim}")
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise DomainError(f"unit point {u.tolist()} outside [0, 1]^D")
    return lo + u * (hi - lo)


@dataclass(frozen=True)
class Cell:
    """A hyperrectangle of the normalized domain and its stored center value.

    ``index[i]`` and ``level[i]`` place the cell on axis ``i`` at
    ``[index[i], index[i] + 1] * 3**-level[i]``; ``depth`` is the number of
    trisections that produced it (``sum(level)``).
    """

    id: int
    depth: int
    index: Tuple[int, ...]
    level: Tuple[int, ...]
    value: float = float("nan")

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def lower(self) -> np.ndarray:
        return np.array([i / 3**l for i, l in zip(self.index, self.level)])

    @property
    def upper(self) -> np.ndarray:
        return np.array([(i + 1) / 3**l for i, l in zip(self.index, self.level)])

    @property
    def center(self) -> np.ndarray:
        # int/int true division is correctly rounded, so equal rationals give equal floats
        return np.array([(2 * i + 1) / (2 * 3**l) for i, l in zip(self.index, self.level)])

    @property
    def sides(self) -> np.ndarray:
        return np.array([3.0**-l for l in self.level])

    @property
    def volume(self) -> float:
        return 3.0 ** -sum(self.level)

    def split_axis(self) -> int:
        """Axis of maximal side length, lowest index on ties."""
        return min(range(self.dim), key=lambda a: (self.level[a], a))


def unit_cell(dim: int, cell_id: int = 0) -> Cell:
    return Cell(id=cell_id, depth=0, index=(0,) * dim, level=(0,) * dim)


def trisect(cell: Cell, ids: Optional[Iterable[int]] = None) -> Tuple[Cell, Cell, Cell]:
    """Split ``cell`` into thirds along its longest side.

    Returns ``(left, center, right)``.  The center child keeps the parent's
    value; the outer children are unevaluated (value NaN).  ``ids`` supplies
    fresh cell ids, consumed in left, center, right order; without it the
    children are numbered ``cell.id + 1 .. cell.id + 3``.
    """
    axis = cell.split_axis()
    it = iter(ids if ids is not None else range(cell.id + 1, cell.id + 4))
    children = []
    for offset in range(3):
        index = list(cell.index)
        level = list(cell.level)
        index[axis] = 3 * index[axis] + offset
        level[axis] += 1
        value = cell.value if offset == 1 else float("nan")
        children.append(
            Cell(id=next(it), depth=cell.depth + 1, index=tuple(index), level=tuple(level), value=value)
        )
    return children[0], children[1], children[2]


@dataclass
class DepthLedger:
    """The depth sets psi_h and their width-``w`` superset views.

    Each depth keeps a dict of live cells and a max-heap keyed on
    ``(-value, id)``.  Heap entries go stale when a cell is divided or its
    value is rewritten; they are discarded lazily on peek.
    """

    dim: int
    w: int = 1
    sets: Dict[int, Dict[int, Cell]] = field(default_factory=dict)
    _heaps: Dict[int, list] = field(default_factory=dict, repr=False)
    _ids: itertools.count = field(default_factory=itertools.count, repr=False)

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("w must be a positive integer")

    def __len__(self) -> int:
        return sum(len(s) for s in self.sets.values())

    def __iter__(self):
        for h in sorted(self.sets):
            yield from self.sets[h].values()

    def next_id(self) -> int:
        return next(self._ids)

    @property
    def max_depth(self) -> int:
        return max((h for h, s in self.sets.items() if s), default=-1)

    def get(self, cell_id: int, depth: Optional[int] = None) -> Optional[Cell]:
        if depth is not None:
            return self.sets.get(depth, {}).get(cell_id)
        for s in self.sets.values():
            if cell_id in s:
                return s[cell_id]
        return None

    def add(self, cell: Cell) -> None:
        self.sets.setdefault(cell.depth, {})[cell.id] = cell
        self._push(cell)

    def remove(self, cell: Cell) -> None:
        del self.sets[cell.depth][cell.id]

    def set_value(self, cell: Cell, value: float) -> Cell:
        """Replace the stored value of a live cell; returns the new cell."""
        current = self.sets[cell.depth][cell.id]
        updated = Cell(current.id, current.depth, current.index, current.level, float(value))
        self.sets[cell.depth][cell.id] = updated
        self._push(updated)
        return updated

    def divide(self, cell: Cell) -> Tuple[Cell, Cell, Cell]:
        """Trisect a live cell, moving it out of psi_h and its children into psi_{h+1}."""
        children = trisect(self.sets[cell.depth][cell.id], self._ids)
        self.remove(cell)
        for child in children:
            self.add(child)
        return children

    def _push(self, cell: Cell) -> None:
        if cell.value == cell.value:  # unevaluated cells are not selectable yet
            heapq.heappush(self._heaps.setdefault(cell.depth, []), (-cell.value, cell.id))

    def best_at_depth(self, h: int) -> Optional[Cell]:
        heap = self._heaps.get(h)
        cells = self.sets.get(h)
        while heap:
            neg, cid = heap[0]
            cell = cells.get(cid)
            if cell is not None and cell.value == -neg:
                return cell
            heapq.heappop(heap)
        return None

    def superset_members(self, k: int) -> List[Cell]:
        cells: List[Cell] = []
        for h in range(k * self.w, k * self.w + self.w):
            cells.extend(self.sets.get(h, {}).values())
        return cells


def superset_members(ledger: DepthLedger, k: int) -> List[Cell]:
    """Cells whose depth lies in ``[k*w, k*w + w - 1]``."""
    return ledger.superset_members(k)
