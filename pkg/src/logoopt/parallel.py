"""Master/worker evaluation for LOGO and LOGO-OP (pLOGO-OP).

One master thread owns the search.  Worker threads only evaluate: they
read :class:`EvalTask` messages from a task stream and answer with
:class:`WorkerResult` messages on a result stream.  While a cell waits for
its true value it carries a provisional one -- its parent's value, or the
declared worst value for the root -- so the master can keep selecting and
dividing as long as some worker is idle.

Dispatch follows a queue-before-select rule: children that are waiting for
a worker are always sent out before the master runs another Select.  With
one worker this makes the master wait for both children of a division
before the next selection, which reproduces the serial run exactly.
"""

from __future__ import annotations

import logging
import math
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, Dict, List, Optional, Tuple

import numpy as np

from .geometry import Domain
from .optimizer import DivisionRecord, IterationRecord, OptimizerConfig, Search
from .planner import DeterministicMDP, PlannerSearch, PolicySpace, evaluate_policy_pruned

log = logging.getLogger(__name__)


class ProtocolError(RuntimeError):
    """A worker result does not match any task in flight."""


@dataclass(frozen=True)
class EvalTask:
    task_id: int
    cell_id: int
    unit_point: Tuple[float, ...]
    point: np.ndarray
    provisional: float
    v_plus: float
    division: Optional[int] = None  # division number that created the cell; None for the root


@dataclass(frozen=True)
class WorkerResult:
    task_id: int
    value: float
    steps: int = 0
    error: Optional[BaseException] = None


@dataclass(frozen=True)
class TaskLog:
    task_id: int
    cell_id: int
    point: Tuple[float, ...]
    provisional: float
    final: float
    steps: int


class Master:
    """Select/Divide/Group side of the parallel scheme.

    :meth:`schedule` returns the tasks to hand to idle workers and
    :meth:`commit` stores a worker's answer.  Neither blocks, so the class
    can be driven by hand in tests; :func:`drive` wires it to threads.
    """

    def __init__(
        self,
        search: Search,
        workers: int,
        worst_value: Optional[float] = None,
        wall_time: Optional[float] = None,
        on_division: Optional[Callable[["Master"], None]] = None,
    ):
        if workers < 1:
            raise ValueError("need at least one worker")
        self.search = search
        self.k = workers
        self.worst_value = -math.inf if worst_value is None else float(worst_value)
        self.wall_time = wall_time
        self.on_division = on_division
        self.pending: Deque[EvalTask] = deque()
        self.in_flight: Dict[int, EvalTask] = {}
        self.log: List[TaskLog] = []
        self.steps = 0
        self.max_steps = 0
        self.discarded = 0
        self.exhausted = False
        self.stopping = False
        self._gen = search.steps()
        self._next_task = 0
        self._moved: Dict[int, int] = {}
        self._outstanding: Dict[int, int] = {}
        self._started = time.monotonic()

    @property
    def idle(self) -> int:
        return self.k - len(self.in_flight)

    @property
    def done(self) -> bool:
        return not self.in_flight and (self.stopping or (self.exhausted and not self.pending))

    @property
    def evaluations(self) -> int:
        return len(self.log)

    def v_plus(self) -> float:
        return self.search.state.best_value

    def _task(self, cell, provisional, division) -> EvalTask:
        task = EvalTask(
            self._next_task, cell.id, tuple(cell.center), self.search.point_of(cell),
            provisional, self.v_plus(), division,
        )
        self._next_task += 1
        return task

    def _advance(self) -> Optional[str]:
        try:
            event = next(self._gen)
        except StopIteration:
            self.exhausted = True
            return None
        ledger = self.search.state.ledger
        if event[0] == "root":
            root = ledger.set_value(event[1], self.worst_value)
            self.pending.append(self._task(root, self.worst_value, None))
        elif event[0] == "divide":
            parent, (left, center, right) = event[1], event[2]
            self._moved[parent.id] = center.id
            n = self.search.state.n
            self._outstanding[n] = 2
            for child in (left, right):
                child = ledger.set_value(child, parent.value)
                self.pending.append(self._task(child, parent.value, n))
        return event[0]

    def stop(self) -> None:
        """Stop selecting; tasks not yet dispatched are dropped."""
        if not self.stopping:
            self.stopping = True
            self.discarded += len(self.pending)
            self.pending.clear()

    def schedule(self) -> List[EvalTask]:
        """Tasks to dispatch now: queued children first, then fresh divisions."""
        if self.wall_time is not None and time.monotonic() - self._started >= self.wall_time:
            self.stop()
        out = []
        while True:
            while self.pending and self.idle > 0:
                task = self.pending.popleft()
                self.in_flight[task.task_id] = task
                out.append(task)
            if self.idle == 0 or self.pending or self.exhausted or self.stopping:
                return out
            if self._advance() == "stall":
                if not self.in_flight:
                    raise RuntimeError("search stalled with no evaluation in flight")
                return out

    def _resolve(self, cell_id: int):
        # a cell divided while its task was out lives on as its center child
        while cell_id in self._moved:
            cell_id = self._moved[cell_id]
        return self.search.state.ledger.get(cell_id)

    def commit(self, result: WorkerResult) -> None:
        task = self.in_flight.pop(result.task_id, None)
        if task is None:
            if any(entry.task_id == result.task_id for entry in self.log):
                raise ProtocolError(f"task {result.task_id} was already committed")
            raise ProtocolError(f"unknown task id {result.task_id}")
        if result.error is not None:
            raise result.error
        cell = self._resolve(task.cell_id)
        self.search.assign(cell, result.value)
        self.steps += result.steps
        self.max_steps = max(self.max_steps, result.steps)
        self.log.append(
            TaskLog(task.task_id, task.cell_id, tuple(float(v) for v in task.point),
                    task.provisional, result.value, result.steps)
        )
        if task.division is not None:
            self._outstanding[task.division] -= 1
            if not self._outstanding[task.division]:
                del self._outstanding[task.division]
                if self.on_division is not None:
                    self.on_division(self)

    def close(self) -> None:
        self._gen.close()


def _worker(evaluate, tasks: "queue.Queue", results: "queue.Queue") -> None:
    while True:
        task = tasks.get()
        if task is None:
            return
        try:
            value, steps = evaluate(task)
            results.put(WorkerResult(task.task_id, float(value), int(steps)))
        except BaseException as exc:  # handed to the master, which re-raises
            results.put(WorkerResult(task.task_id, math.nan, 0, exc))


def drive(master: Master, evaluate: Callable[[EvalTask], Tuple[float, int]]) -> Master:
    """Run ``master`` to completion with ``master.k`` worker threads.

    ``evaluate(task)`` must be pure and return ``(value, steps)``.
    """
    tasks: "queue.Queue" = queue.Queue()
    results: "queue.Queue" = queue.Queue()
    threads = [
        threading.Thread(target=_worker, args=(evaluate, tasks, results), daemon=True, name=f"logo-worker-{i}")
        for i in range(master.k)
    ]
    for t in threads:
        t.start()
    try:
        while True:
            for task in master.schedule():
                tasks.put(task)
            if master.done or not master.in_flight:
                break
            master.commit(results.get())
    finally:
        for _ in threads:
            tasks.put(None)
        for t in threads:
            t.join()
        master.close()
    return master


@dataclass
class ParallelResult:
    best_point: Optional[np.ndarray]
    best_value: float
    trace: List[IterationRecord]
    divisions: List[DivisionRecord]
    steps: int
    max_steps: int
    evaluations: int
    tasks: List[TaskLog] = field(default_factory=list)
    discarded: int = 0
    search: Optional[Search] = None

    @property
    def n(self) -> int:
        return self.search.state.n


def _result(master: Master) -> ParallelResult:
    st = master.search.state
    return ParallelResult(
        st.best_point, st.best_value, st.trace, st.divisions, master.steps, master.max_steps,
        master.evaluations, master.log, master.discarded, master.search,
    )


def parallel_run(
    objective: Callable[[np.ndarray], float],
    domain: Domain,
    config: OptimizerConfig,
    workers: int,
    worst_value: Optional[float] = None,
    wall_time: Optional[float] = None,
    on_division: Optional[Callable[[Master], None]] = None,
) -> ParallelResult:
    """LOGO with ``workers`` evaluation threads; each evaluation counts one step."""
    master = Master(Search(domain, config), workers, worst_value, wall_time, on_division)
    drive(master, lambda task: (objective(task.point), 1))
    st = master.search.state
    log.info("parallel LOGO finished: k=%d n=%d evals=%d best=%.17g", workers, st.n, st.evals, st.best_value)
    return _result(master)


def plogo_op_run(
    mdp: DeterministicMDP,
    space: PolicySpace,
    config: OptimizerConfig,
    L: float,
    workers: int,
    worst_value: Optional[float] = None,
    wall_time: Optional[float] = None,
    on_division: Optional[Callable[[Master], None]] = None,
) -> ParallelResult:
    """LOGO-OP with ``workers`` rollout threads.

    Each task is pruned against the incumbent value at the moment the task
    was created, which is what the serial planner does for both siblings of
    a division.
    """
    master = Master(PlannerSearch(space.domain, config, L), workers, worst_value, wall_time, on_division)

    def evaluate(task):
        outcome = evaluate_policy_pruned(mdp, space.instantiate(task.point), task.v_plus, L)
        return outcome.value, outcome.steps_used

    drive(master, evaluate)
    st = master.search.state
    log.info("pLOGO-OP finished: k=%d n=%d steps=%d best=%.17g", workers, st.n, master.steps, st.best_value)
    return _result(master)
