"""LOGO-OP: policy search on a deterministic MDP with horizon pruning.

Each candidate policy is rolled out from ``s0``.  The rollout is cut short
once its discounted return so far plus the largest reward it could still
collect falls below ``V+ - L``, where ``V+`` is the best return seen.  At
the end of every iteration stored values below ``V+ - L`` are raised to
that floor so early, loosely pruned rollouts do not look better than late
ones.  With ``L = inf`` nothing is pruned and the search is exactly LOGO
applied to the full return.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .geometry import Domain
from .objectives import ConfigurationError
from .optimizer import DivisionRecord, EvaluationError, IterationRecord, OptimizerConfig, Search

log = logging.getLogger(__name__)

State = Tuple[float, ...]
Policy = Callable[[State], int]


@dataclass(frozen=True)
class DeterministicMDP:
    """Deterministic planning problem.

    ``horizon=None`` selects the discounted infinite-horizon mode, in which
    a rollout stops once the remaining discounted weight times
    ``reward_bound`` drops below ``tol``.  ``reward_bound`` bounds
    ``|R|`` and defaults to ``|r_max|``.  ``step``, when given, must return
    ``(transition(s, a), reward(s, a))`` and is used as a fused fast path.
    ``rollout(policy, floor)``, when given, is a model-specific simulator
    that must reproduce the generic loop exactly; it may return ``None``
    for policies it does not recognize.
    """

    s0: State
    transition: Callable[[State, int], State]
    reward: Callable[[State, int], float]
    gamma: float
    r_max: float
    horizon: Optional[int] = None
    tol: float = 1e-9
    reward_bound: Optional[float] = None
    step: Optional[Callable[[State, int], Tuple[State, float]]] = None
    rollout: Optional[Callable[[Policy, float], Optional["EvaluationOutcome"]]] = None

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ConfigurationError(f"discount must lie in (0, 1], got {self.gamma}")
        if self.horizon is None and self.gamma >= 1:
            raise ConfigurationError("infinite-horizon mode needs gamma < 1")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigurationError("horizon must be a positive integer")

    @property
    def finite(self) -> bool:
        return self.horizon is not None


@dataclass(frozen=True)
class PolicySpace:
    domain: Domain
    instantiate: Callable[[np.ndarray], Policy]


class EvaluationOutcome(NamedTuple):
    value: float
    steps_used: int
    pruned: bool


def remaining_upper_bound(t: int, mdp: DeterministicMDP) -> float:
    """Largest return still collectable after step ``t`` has been simulated.

    Rewards are only bounded from above, so a negative ``r_max`` is
    treated as 0 to keep the bound valid.
    """
    r = max(mdp.r_max, 0.0)
    if mdp.finite:
        return max(mdp.horizon - t, 0) * r
    if mdp.gamma >= 1:
        raise ConfigurationError("tail bound undefined for gamma = 1 without a horizon")
    return mdp.gamma ** (t + 1) / (1 - mdp.gamma) * r


def _rollout(mdp: DeterministicMDP, policy: Policy, floor: float) -> EvaluationOutcome:
    if mdp.rollout is not None:
        outcome = mdp.rollout(policy, floor)
        if outcome is not None:
            return outcome
    return generic_rollout(mdp, policy, floor)


def generic_rollout(mdp: DeterministicMDP, policy: Policy, floor: float) -> EvaluationOutcome:
    """Step-by-step simulation through ``transition``/``reward`` (or ``step``)."""
    step = mdp.step
    transition, reward = mdp.transition, mdp.reward
    gamma = mdp.gamma
    horizon = mdp.horizon
    r_tail = max(mdp.r_max, 0.0)
    r_abs = abs(mdp.r_max) if mdp.reward_bound is None else mdp.reward_bound
    check = floor > -math.inf
    s = mdp.s0
    z1, z2 = 0.0, 1.0
    t = 0
    while True:
        a = policy(s)
        if step is not None:
            s_next, r = step(s, a)
        else:
            r = reward(s, a)
            s_next = transition(s, a)
        if not math.isfinite(r):
            raise EvaluationError(np.asarray(s, dtype=float), r)
        z1 += z2 * r
        z2 *= gamma
        s = s_next
        if horizon is not None:
            if t + 1 == horizon:
                return EvaluationOutcome(z1, t + 1, False)
            if check and z1 + (horizon - t) * r_tail < floor:
                return EvaluationOutcome(z1, t + 1, True)
        else:
            if check and z1 + z2 / (1 - gamma) * r_tail < floor:
                return EvaluationOutcome(z1, t + 1, True)
            if z2 / (1 - gamma) * r_abs < mdp.tol:
                return EvaluationOutcome(z1, t + 1, False)
        t += 1


def evaluate_policy_full(mdp: DeterministicMDP, policy: Policy) -> EvaluationOutcome:
    """Discounted return of ``policy`` over the whole horizon."""
    return _rollout(mdp, policy, -math.inf)


def evaluate_policy_pruned(
    mdp: DeterministicMDP, policy: Policy, v_plus: float, L: float
) -> EvaluationOutcome:
    """Rollout that exits once it provably cannot reach ``v_plus - L``.

    ``steps_used`` counts simulated transitions.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    return _rollout(mdp, policy, v_plus - L)


class PlannerSearch(Search):
    """LOGO loop plus the end-of-iteration value floor ``V+ - L``."""

    def __init__(self, domain: Domain, config: OptimizerConfig, L: float):
        super().__init__(domain, config)
        if not L >= 0:
            raise ValueError("L must be non-negative (inf disables pruning)")
        self.L = L

    @property
    def v_plus(self) -> float:
        return self.state.best_value

    def clamp(self) -> int:
        floor = self.v_plus - self.L
        if floor == -math.inf:
            return 0
        ledger = self.state.ledger
        low = [c for c in ledger if c.value < floor]
        for cell in low:
            ledger.set_value(cell, floor)
        return len(low)

    def end_iteration(self, divided: int) -> None:
        self.clamp()
        super().end_iteration(divided)


@dataclass
class PlanResult:
    best_point: np.ndarray
    best_value: float
    trace: List[IterationRecord]
    divisions: List[DivisionRecord]
    steps: int
    max_steps: int
    evaluations: List[Tuple[np.ndarray, float, float, EvaluationOutcome]] = field(default_factory=list)
    search: Optional[PlannerSearch] = None

    @property
    def n(self) -> int:
        return self.search.state.n


def logo_op_run(
    mdp: DeterministicMDP,
    space: PolicySpace,
    config: OptimizerConfig,
    L: float,
    on_division: Optional[Callable[[PlannerSearch, int], None]] = None,
) -> PlanResult:
    """Search the policy space with LOGO-OP.

    ``evaluations`` logs ``(x, v_plus, L, outcome)`` for every rollout so
    that pruning decisions can be audited.  ``on_division(search, steps)``
    fires after each division with the running step total.
    """
    search = PlannerSearch(space.domain, config, L)
    steps = 0
    max_steps = 0
    evaluations = []

    def evaluate(cell, v_plus):
        nonlocal steps, max_steps
        x = search.point_of(cell)
        outcome = evaluate_policy_pruned(mdp, space.instantiate(x), v_plus, L)
        steps += outcome.steps_used
        max_steps = max(max_steps, outcome.steps_used)
        evaluations.append((x, v_plus, L, outcome))
        return outcome.value

    for event in search.steps():
        if event[0] == "root":
            cell = event[1]
            search.assign(cell, evaluate(cell, -math.inf))
        elif event[0] == "divide":
            left, _, right = event[2]
            v_plus = search.v_plus  # both siblings are pruned against the same V+
            values = [evaluate(left, v_plus), evaluate(right, v_plus)]
            for child, value in zip((left, right), values):
                search.assign(child, value)
            if on_division is not None:
                on_division(search, steps)
        else:
            raise RuntimeError("serial search stalled; all stored values are final")
    st = search.state
    log.info("LOGO-OP finished: n=%d steps=%d best=%.17g", st.n, steps, st.best_value)
    return PlanResult(st.best_point, st.best_value, st.trace, st.divisions, steps, max_steps, evaluations, search)


# -- bundled MDPs ---------------------------------------------------------


@dataclass(frozen=True)
class VentWorldConfig:
    """Constants of the containment-venting toy plant.

    Pressure grows by ``growth`` per step.  A vent step relieves a
    ``relief`` fraction of the overpressure and releases ``vent_release`` of
    the airborne inventory.  Above ``pressure_cap`` venting is forced: it
    relieves ``forced_relief`` of the overpressure and releases
    ``forced_release`` of the inventory.  Inventory settles at rate
    ``settling`` and is replenished by ``source`` per step.

    With the defaults the relief of an ordinary vent cannot hold the
    pressure below the cap for ever (``growth / relief`` exceeds the cap's
    overpressure), so starting to vent early buys time before the forced
    phase at the price of releasing inventory that had not yet settled.
    """

    horizon: int = 10_000
    p0: float = 1.0
    inventory0: float = 100.0
    growth: float = 0.002
    pressure_cap: float = 5.0
    relief: float = 0.0004
    forced_relief: float = 0.001
    settling: float = 0.0006
    source: float = 0.0
    vent_release: float = 0.0005
    forced_release: float = 0.05
    inventory_range: Tuple[float, float] = (0.0, 100.0)
    pressure_range: Tuple[float, float] = (1.0, 5.0)

    def __post_init__(self):
        positive = ("horizon", "p0", "growth", "relief", "forced_relief", "settling", "pressure_cap")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"vent-world {name} must be positive")
        for name in ("inventory0", "source", "vent_release", "forced_release"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"vent-world {name} must be non-negative")
        if not (self.relief < 1 and self.forced_relief < 1):
            raise ConfigurationError("vent-world relief fractions must be below 1")
        if not self.settling + max(self.vent_release, self.forced_release) < 1:
            raise ConfigurationError("vent-world rates must keep the inventory positive")
        if self.p0 > self.pressure_cap:
            raise ConfigurationError("initial pressure above the cap")
        for lo, hi in (self.inventory_range, self.pressure_range):
            if not lo < hi:
                raise ConfigurationError("vent-world policy ranges must be non-empty")


@dataclass(frozen=True)
class ThresholdPolicy:
    """Vent when ``inventory <= inventory_cap`` and ``pressure >= pressure_floor``,
    and always above ``pressure_cap``."""

    inventory_cap: float
    pressure_floor: float
    pressure_cap: float

    def __call__(self, s: State) -> int:
        p, inv = s
        return 1 if (inv <= self.inventory_cap and p >= self.pressure_floor) or p > self.pressure_cap else 0


def vent_world(config: VentWorldConfig = VentWorldConfig()) -> Tuple[DeterministicMDP, PolicySpace]:
    """Two-variable venting plant and its two-threshold policy family.

    State is ``(pressure, inventory)``.  Action 1 vents; above the pressure
    cap the plant vents whatever the action.  Rewards are minus the
    inventory released to the environment, so ``r_max = 0`` and a policy
    that never vents collects nothing until the cap forces venting.  The
    policy with parameters ``x = (inventory_cap, pressure_floor)`` vents
    when ``inventory <= x[0]`` and ``pressure >= x[1]``.
    """
    c = config
    p_atm = 1.0

    def step(s, a):
        p, inv = s
        if p > c.pressure_cap:
            released = c.forced_release * inv
            p = p - c.forced_relief * (p - p_atm)
        elif a:
            released = c.vent_release * inv
            p = p - c.relief * (p - p_atm)
        else:
            released = 0.0
        return (p + c.growth, inv + c.source - c.settling * inv - released), -released

    def transition(s, a):
        return step(s, a)[0]

    def reward(s, a):
        return step(s, a)[1]

    def rollout(policy, floor):
        # same arithmetic as step() in the same order, with the policy inlined
        if not isinstance(policy, ThresholdPolicy) or policy.pressure_cap != c.pressure_cap:
            return None
        inv_cap, p_floor = policy.inventory_cap, policy.pressure_floor
        cap, growth, src, settle = c.pressure_cap, c.growth, c.source, c.settling
        kv, rv, kf, rf = c.vent_release, c.relief, c.forced_release, c.forced_relief
        horizon = c.horizon
        check = floor > -math.inf
        p, inv = c.p0, c.inventory0
        z1 = 0.0
        for t in range(horizon):
            if p > cap:
                released = kf * inv
                p = p - rf * (p - p_atm)
            elif inv <= inv_cap and p >= p_floor:
                released = kv * inv
                p = p - rv * (p - p_atm)
            else:
                released = 0.0
            p = p + growth
            inv = inv + src - settle * inv - released
            z1 += -released
            if check and t + 1 < horizon and z1 < floor:
                return EvaluationOutcome(z1, t + 1, True)
        return EvaluationOutcome(z1, horizon, False)

    mdp = DeterministicMDP(
        s0=(c.p0, c.inventory0), transition=transition, reward=reward,
        gamma=1.0, r_max=0.0, horizon=c.horizon, step=step, rollout=rollout,
    )

    def instantiate(x):
        return ThresholdPolicy(float(x[0]), float(x[1]), c.pressure_cap)

    domain = Domain((c.inventory_range[0], c.pressure_range[0]), (c.inventory_range[1], c.pressure_range[1]))
    return mdp, PolicySpace(domain, instantiate)


def vent_world_grid_values(x1: np.ndarray, x2: np.ndarray, config: VentWorldConfig = VentWorldConfig()) -> np.ndarray:
    """Full returns of many vent-world policies at once (vectorized rollout)."""
    c = config
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    p = np.full(x1.shape, c.p0)
    inv = np.full(x1.shape, c.inventory0)
    value = np.zeros(x1.shape)
    for _ in range(c.horizon):
        forced = p > c.pressure_cap
        vent = (inv <= x1) & (p >= x2) & ~forced
        released = np.where(forced, c.forced_release * inv, np.where(vent, c.vent_release * inv, 0.0))
        value -= released
        inv = inv + c.source - c.settling * inv - released
        relieved = np.where(forced, p - c.forced_relief * (p - 1.0), np.where(vent, p - c.relief * (p - 1.0), p))
        p = relieved + c.growth
    return value


def geometric(reward: float = 1.0, gamma: float = 0.5, horizon: Optional[int] = 3) -> Tuple[DeterministicMDP, PolicySpace]:
    """Single-state MDP paying ``reward * x[0]`` each step; for tests."""

    def instantiate(x):
        scale = float(x[0])
        return lambda s: scale

    mdp = DeterministicMDP(
        s0=(0.0,), transition=lambda s, a: s, reward=lambda s, a: reward * a,
        gamma=gamma, r_max=max(reward, 0.0), horizon=horizon,
    )
    return mdp, PolicySpace(Domain((0.0,), (1.0,)), instantiate)


MDPS = {"vent-world": vent_world, "geometric": geometric}


def get_mdp(name: str):
    try:
        return MDPS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown MDP {name!r}; known: {', '.join(MDPS)}") from None
