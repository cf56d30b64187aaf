"""Simultaneous optimistic optimization, written directly from its step list.

Kept separate from :mod:`logoopt.optimizer` on purpose: it uses plain
per-depth lists and linear scans instead of the ledger's heaps and
superset views, so it can serve as an independent check that LOGO with
``w = 1`` performs exactly the same divisions.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from .geometry import Cell, Domain, denormalize, trisect, unit_cell


class SOODivision(NamedTuple):
    n: int
    evals: int
    depth: int
    center: Tuple[float, ...]
    value: float
    best_value: float


def soo(
    objective: Callable[[np.ndarray], float],
    domain: Domain,
    max_divisions: int,
    hmax: Optional[Callable[[int], float]] = None,
) -> Tuple[np.ndarray, float, List[SOODivision]]:
    """Run SOO for ``max_divisions`` divisions.

    ``hmax(n)`` defaults to ``sqrt(n) - 1`` with ``n`` counted from 1 before
    the first division.  Returns the best point, its value and the list of
    divisions in the order they were made.
    """
    if hmax is None:
        hmax = lambda n: math.sqrt(n) - 1  # noqa: E731

    next_id = 0

    def fresh():
        nonlocal next_id
        next_id += 1
        return next_id - 1

    def f(cell: Cell) -> float:
        return float(objective(denormalize(cell.center, domain)))

    root = unit_cell(domain.dim, fresh())
    root = Cell(root.id, 0, root.index, root.level, f(root))
    levels: Dict[int, List[Cell]] = {0: [root]}
    evals = 1
    n = 0
    best_value = root.value
    best_point = denormalize(root.center, domain)
    trace: List[SOODivision] = []

    while n < max_divisions:
        vmax = -math.inf
        divided = False
        h = 0
        while h <= max(levels):
            # once something was divided this sweep, stop below the depth cap
            if divided and h > math.floor(min(hmax(n + 1), max(levels))):
                break
            cells = levels.get(h, [])
            if cells:
                best = max(cells, key=lambda c: (c.value, -c.id))
                if best.value > vmax:
                    vmax = best.value
                    cells.remove(best)
                    left, center, right = trisect(best, [fresh(), fresh(), fresh()])
                    left = Cell(left.id, left.depth, left.index, left.level, f(left))
                    right = Cell(right.id, right.depth, right.index, right.level, f(right))
                    evals += 2
                    n += 1
                    divided = True
                    for child in (left, right):
                        if child.value > best_value:
                            best_value = child.value
                            best_point = denormalize(child.center, domain)
                    levels.setdefault(h + 1, []).extend([left, center, right])
                    trace.append(
                        SOODivision(n, evals, best.depth, tuple(best.center), best.value, best_value)
                    )
                    if n >= max_divisions:
                        break
            h += 1
    return best_point, best_value, trace
