"""LOGO: locally oriented global optimization over a ternary partition.

The search is written as a generator (:meth:`Search.steps`) that performs
Select, Divide and Group and then hands each freshly divided cell to a
driver, which is responsible for giving the two outer children a value
before resuming.  :func:`run` is the serial driver; the planner and the
parallel runtime supply their own.

SOO is the special case ``w = 1`` (``OptimizerConfig.fixed(1)``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import Cell, DepthLedger, Domain, denormalize, unit_cell
from .objectives import error_metric

log = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (3, 4, 5, 6, 8, 30)
HMAX_SCHEDULES = ("sqrt", "wsqrt")


class EvaluationError(RuntimeError):
    """The objective returned a non-finite value."""

    def __init__(self, point, value):
        super().__init__(f"objective returned {value!r} at {list(np.asarray(point, dtype=float))}")
        self.point = np.asarray(point, dtype=float)
        self.value = value


@dataclass(frozen=True)
class OptimizerConfig:
    """Parameters of a LOGO run.

    ``schedule`` holds the admissible widths; with ``adaptive=False`` only
    ``schedule[0]`` is used.  ``hmax`` picks the depth cap ``sqrt(n) - w``
    (``"sqrt"``) or ``w*sqrt(n) - w`` (``"wsqrt"``).  The run stops after a
    division as soon as any budget is met or the incumbent's error against
    ``f_star`` drops below ``target_error``.

    ``w_rule`` decides when the adaptive width moves to the next, larger
    entry of ``schedule``: ``"stall"`` widens after an iteration that did not
    strictly raise the incumbent and narrows after one that did;
    ``"improve"`` does the opposite.
    """

    schedule: Tuple[int, ...] = DEFAULT_SCHEDULE
    adaptive: bool = True
    hmax: str = "wsqrt"
    max_evals: Optional[int] = None
    max_divisions: Optional[int] = None
    target_error: Optional[float] = None
    f_star: Optional[float] = None
    w_rule: str = "stall"

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(int(w) for w in self.schedule))
        if not self.schedule or any(w < 1 for w in self.schedule):
            raise ValueError(f"w schedule must be non-empty and positive, got {self.schedule}")
        if self.hmax not in HMAX_SCHEDULES:
            raise ValueError(f"hmax must be one of {HMAX_SCHEDULES}, got {self.hmax!r}")
        if self.w_rule not in ("stall", "improve"):
            raise ValueError(f"w_rule must be 'stall' or 'improve', got {self.w_rule!r}")
        if self.target_error is not None and self.f_star is None:
            raise ValueError("target_error needs f_star")

    @classmethod
    def fixed(cls, w: int, **kwargs) -> "OptimizerConfig":
        return cls(schedule=(w,), adaptive=False, **kwargs)

    @classmethod
    def adaptive_schedule(cls, schedule: Sequence[int] = DEFAULT_SCHEDULE, **kwargs) -> "OptimizerConfig":
        return cls(schedule=tuple(schedule), adaptive=True, **kwargs)


@dataclass(frozen=True)
class DivisionRecord:
    n: int
    evals: int
    cell_id: int
    depth: int
    center: Tuple[float, ...]
    value: float
    best_value: float
    w: int


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    divisions: int
    n: int
    evals: int
    best_value: float
    w: int


@dataclass
class OptimizerState:
    ledger: DepthLedger
    n: int = 0
    evals: int = 0
    h_upper: int = 0
    best_point: Optional[np.ndarray] = None
    best_value: float = -math.inf
    w_index: int = 1
    prev_iter_best: float = -math.inf
    iteration: int = 0
    trace: List[IterationRecord] = field(default_factory=list)
    divisions: List[DivisionRecord] = field(default_factory=list)


def hmax(n: float, w: int, schedule: str = "wsqrt") -> float:
    """Depth cap ``sqrt(n) - w`` or ``w*sqrt(n) - w``."""
    if schedule == "sqrt":
        return math.sqrt(n) - w
    if schedule == "wsqrt":
        return w * math.sqrt(n) - w
    raise ValueError(f"unknown hmax schedule {schedule!r}")


def division_gate(candidate_value: float, val_max: float) -> bool:
    return candidate_value > val_max


def adapt_w(j: int, progressed: bool, schedule: Sequence[int]) -> int:
    """Next 1-based position in the width schedule."""
    return min(j + 1, len(schedule)) if progressed else max(j - 1, 1)


def _rank(cell: Cell):
    return (-cell.value, cell.depth, cell.id)


def select_candidate(ledger: DepthLedger, k: int) -> Optional[Cell]:
    """Best-valued cell of superset ``k``; ties go to smaller depth, then smaller id."""
    best = None
    for h in range(k * ledger.w, k * ledger.w + ledger.w):
        cell = ledger.best_at_depth(h)
        if cell is not None and (best is None or _rank(cell) < _rank(best)):
            best = cell
    return best


class Search:
    """State machine of the LOGO main loop.

    ``steps()`` yields ``("root", cell)`` once and then
    ``("divide", parent, (left, center, right))`` after every division.
    Before resuming, a serial driver must store values for the cells it was
    handed via :meth:`assign` (the center child already carries its
    parent's value).  A parallel driver may instead leave provisional
    values in the ledger; if a whole sweep then finds nothing worth
    dividing, ``("stall",)`` is yielded so the driver can wait for results.
    """

    def __init__(self, domain: Domain, config: OptimizerConfig):
        self.domain = domain
        self.config = config
        w0 = config.schedule[0]
        self.state = OptimizerState(ledger=DepthLedger(dim=domain.dim, w=w0))
        self.stopped = False

    @property
    def w(self) -> int:
        return self.state.ledger.w

    def point_of(self, cell: Cell) -> np.ndarray:
        return denormalize(cell.center, self.domain)

    def assign(self, cell: Cell, value: float, count: bool = True) -> Cell:
        """Store an objective value for ``cell`` and update the incumbent."""
        if not math.isfinite(value):
            raise EvaluationError(self.point_of(cell), value)
        st = self.state
        cell = st.ledger.set_value(cell, value)
        if count:
            st.evals += 1
        if value > st.best_value:
            st.best_value = value
            st.best_point = self.point_of(cell)
        return cell

    def depth_bound(self, h_plus: int) -> int:
        st = self.state
        # n is counted from 1 before the first division
        cap = min(hmax(st.n + 1, self.w, self.config.hmax), st.h_upper)
        return max(math.floor(cap / self.w), h_plus)

    def should_stop(self) -> bool:
        cfg, st = self.config, self.state
        if cfg.max_evals is not None and st.evals >= cfg.max_evals:
            return True
        if cfg.max_divisions is not None and st.n >= cfg.max_divisions:
            return True
        if cfg.target_error is not None and st.best_point is not None:
            return error_metric(cfg.f_star, st.best_value) < cfg.target_error
        return False

    def end_iteration(self, divided: int) -> None:
        st = self.state
        st.trace.append(IterationRecord(st.iteration, divided, st.n, st.evals, st.best_value, self.w))
        if self.config.adaptive:
            improved = st.best_value > st.prev_iter_best
            widen = not improved if self.config.w_rule == "stall" else improved
            st.w_index = adapt_w(st.w_index, widen, self.config.schedule)
            st.ledger.w = self.config.schedule[st.w_index - 1]
        st.prev_iter_best = st.best_value

    def steps(self) -> Iterator[tuple]:
        st = self.state
        root = unit_cell(self.domain.dim, st.ledger.next_id())
        st.ledger.add(root)
        yield ("root", root)
        st.prev_iter_best = st.best_value
        if self.should_stop():
            self.stopped = True
            return
        while True:
            st.iteration += 1
            val_max = -math.inf
            h_plus = st.h_upper
            divided = 0
            k = 0
            while k <= self.depth_bound(h_plus):
                cell = select_candidate(st.ledger, k)
                if cell is not None and division_gate(cell.value, val_max):
                    val_max = cell.value
                    h_plus = 0
                    st.h_upper = max(st.h_upper, cell.depth + 1)
                    st.n += 1
                    divided += 1
                    children = st.ledger.divide(cell)
                    yield ("divide", cell, children)
                    st.divisions.append(
                        DivisionRecord(
                            st.n, st.evals, cell.id, cell.depth, tuple(cell.center), cell.value,
                            st.best_value, self.w,
                        )
                    )
                    if self.should_stop():
                        self.stopped = True
                        st.trace.append(
                            IterationRecord(st.iteration, divided, st.n, st.evals, st.best_value, self.w)
                        )
                        return
                k += 1
            if not divided:
                # only possible while some values are provisional (-inf); the
                # driver must commit a result before resuming
                st.iteration -= 1
                yield ("stall",)
                continue
            self.end_iteration(divided)


@dataclass
class RunResult:
    best_point: np.ndarray
    best_value: float
    trace: List[IterationRecord]
    divisions: List[DivisionRecord]
    state: OptimizerState


def run(
    objective: Callable[[np.ndarray], float],
    domain: Domain,
    config: OptimizerConfig,
    on_division: Optional[Callable[[Search], None]] = None,
) -> RunResult:
    """Maximize ``objective`` over ``domain`` with LOGO.

    ``objective`` receives points in original units.  ``on_division`` is
    called after each division once both new centers are evaluated.
    """
    search = Search(domain, config)
    for event in search.steps():
        if event[0] == "root":
            cell = event[1]
            search.assign(cell, float(objective(search.point_of(cell))))
        elif event[0] == "divide":
            left, _, right = event[2]
            for child in (left, right):
                search.assign(child, float(objective(search.point_of(child))))
            if on_division is not None:
                on_division(search)
        else:
            raise RuntimeError("serial search stalled; all stored values are final")
    st = search.state
    log.info("LOGO finished: n=%d evals=%d best=%.17g", st.n, st.evals, st.best_value)
    return RunResult(st.best_point, st.best_value, st.trace, st.divisions, st)
