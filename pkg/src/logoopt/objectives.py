"""Benchmark objectives in the maximization convention.

Every evaluator accepts a single point of shape ``(D,)`` or a batch of
shape ``(m, D)`` and returns a float or an ``(m,)`` array.  Classical
minimization benchmarks are negated, so each optimum is a maximum and
``f_star`` is the negated textbook minimum.

The ``f_star`` constants not available in closed form were obtained by
``tests/oracles.py`` (dense sampling followed by local refinement) and are
rechecked by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .geometry import Domain


class ConfigurationError(KeyError):
    """Unknown objective name or inconsistent objective settings."""


def _batch(x):
    x = np.asarray(x, dtype=float)
    return x if x.ndim > 1 else x[None, :], x.ndim == 1


def _out(values, single):
    return float(values[0]) if single else values


def sin1_scalar(x: float) -> float:
    return (math.sin(13 * x) * math.sin(27 * x) + 1) / 2


def eval_sin1(x):
    x, single = _batch(x)
    t = x[:, 0]
    return _out((np.sin(13 * t) * np.sin(27 * t) + 1) / 2, single)


def eval_sin2(x):
    x, single = _batch(x)
    a = (np.sin(13 * x[:, 0]) * np.sin(27 * x[:, 0]) + 1) / 2
    b = (np.sin(13 * x[:, 1]) * np.sin(27 * x[:, 1]) + 1) / 2
    return _out(a * b, single)


def peaks(x):
    """The three-Gaussian 'peaks' surface on [-3, 3]^2 (not negated)."""
    x, single = _batch(x)
    u, v = x[:, 0], x[:, 1]
    z = (
        3 * (1 - u) ** 2 * np.exp(-(u**2) - (v + 1) ** 2)
        - 10 * (u / 5 - u**3 - v**5) * np.exp(-(u**2) - v**2)
        - np.exp(-((u + 1) ** 2) - v**2) / 3
    )
    return _out(z, single)


def branin(x):
    x, single = _batch(x)
    u, v = x[:, 0], x[:, 1]
    b = 5.1 / (4 * math.pi**2)
    c = 5 / math.pi
    t = 1 / (8 * math.pi)
    f = (v - b * u**2 + c * u - 6) ** 2 + 10 * (1 - t) * np.cos(u) + 10
    return _out(-f, single)


def rosenbrock(x):
    x, single = _batch(x)
    f = np.sum(100 * (x[:, 1:] - x[:, :-1] ** 2) ** 2 + (1 - x[:, :-1]) ** 2, axis=1)
    return _out(-f, single)


HARTMAN3_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMAN3_A = np.array([[3.0, 10, 30], [0.1, 10, 35], [3.0, 10, 30], [0.1, 10, 35]])
HARTMAN3_P = 1e-4 * np.array(
    [[3689, 1170, 2673], [4699, 4387, 7470], [1091, 8732, 5547], [381, 5743, 8828]]
)

HARTMAN6_ALPHA = HARTMAN3_ALPHA
HARTMAN6_A = np.array(
    [
        [10, 3, 17, 3.5, 1.7, 8],
        [0.05, 10, 17, 0.1, 8, 14],
        [3, 3.5, 1.7, 10, 17, 8],
        [17, 8, 0.05, 10, 0.1, 14],
    ]
)
HARTMAN6_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)

SHEKEL_BETA = 0.1 * np.array([1, 2, 2, 4, 4, 6, 3, 7, 5, 5], dtype=float)
SHEKEL_C = np.array(
    [
        [4, 1, 8, 6, 3, 2, 5, 8, 6, 7],
        [4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6],
        [4, 1, 8, 6, 3, 2, 5, 8, 6, 7],
        [4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6],
    ],
    dtype=float,
)


def _hartman(x, alpha, a, p):
    x, single = _batch(x)
    inner = np.sum(a[None, :, :] * (x[:, None, :] - p[None, :, :]) ** 2, axis=2)
    return _out(np.sum(alpha * np.exp(-inner), axis=1), single)


def hartman3(x):
    return _hartman(x, HARTMAN3_ALPHA, HARTMAN3_A, HARTMAN3_P)


def hartman6(x):
    return _hartman(x, HARTMAN6_ALPHA, HARTMAN6_A, HARTMAN6_P)


def _shekel(x, m):
    x, single = _batch(x)
    c = SHEKEL_C[:, :m]
    sq = np.sum((x[:, :, None] - c[None, :, :]) ** 2, axis=1)
    return _out(np.sum(1.0 / (sq + SHEKEL_BETA[:m]), axis=1), single)


def shekel5(x):
    return _shekel(x, 5)


def shekel7(x):
    return _shekel(x, 7)


def shekel10(x):
    return _shekel(x, 10)


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str
    domain: Domain
    evaluator: Callable
    f_star: float
    x_star: tuple
    note: str = ""

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __call__(self, x):
        return self.evaluator(x)


class CountingObjective:
    """Wraps an objective and counts calls (one per point)."""

    def __init__(self, inner: Callable):
        self.inner = inner
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.inner(x)


# x_star and f_star pairs; the refined values come from tests/oracles.py
REGISTRY: Dict[str, ObjectiveSpec] = {
    spec.name: spec
    for spec in [
        ObjectiveSpec(
            "sin1", Domain((0.0,), (1.0,)), eval_sin1,
            0.9755991438115746, (0.8675262082538089,), "grid + bounded scalar refinement",
        ),
        ObjectiveSpec(
            "sin2", Domain.cube(0.0, 1.0, 2), eval_sin2,
            0.9755991438115746**2, (0.8675262082538089, 0.8675262082538089), "square of sin1 optimum",
        ),
        ObjectiveSpec(
            "peaks", Domain.cube(-3.0, 3.0, 2), peaks,
            8.10621358944234, (-0.00931758, 1.58136796), "grid + Nelder-Mead refinement",
        ),
        ObjectiveSpec(
            "branin", Domain((-5.0, 0.0), (10.0, 15.0)), branin,
            -0.39788735772973816, (math.pi, 2.275), "closed form: minimum 5/(4 pi)",
        ),
        ObjectiveSpec("rosenbrock2", Domain.cube(-5.0, 10.0, 2), rosenbrock, 0.0, (1.0, 1.0), "exact"),
        ObjectiveSpec("rosenbrock10", Domain.cube(-5.0, 10.0, 10), rosenbrock, 0.0, (1.0,) * 10, "exact"),
        ObjectiveSpec(
            "hartman3", Domain.cube(0.0, 1.0, 3), hartman3,
            3.862779787332663, (0.11458888, 0.55564889, 0.85254698), "refined from the published minimizer",
        ),
        ObjectiveSpec(
            "hartman6", Domain.cube(0.0, 1.0, 6), hartman6,
            3.3223680114155147, (0.20168951, 0.15001069, 0.47687397, 0.27533243, 0.31165162, 0.65730053),
            "refined from the published minimizer",
        ),
        ObjectiveSpec(
            "shekel5", Domain.cube(0.0, 10.0, 4), shekel5,
            10.153199679058229, (4.00003715, 4.00013327, 4.00003715, 4.00013328), "refined near (4, 4, 4, 4)",
        ),
        ObjectiveSpec(
            "shekel7", Domain.cube(0.0, 10.0, 4), shekel7,
            10.402915336777745, (4.00057282, 3.99960621, 4.00057282, 3.99960621), "refined near (4, 4, 4, 4)",
        ),
        ObjectiveSpec(
            "shekel10", Domain.cube(0.0, 10.0, 4), shekel10,
            10.53644315348353, (4.00074687, 3.99950948, 4.00074687, 3.99950948), "refined near (4, 4, 4, 4)",
        ),
    ]
}


def get_objective(name: str) -> ObjectiveSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown objective {name!r}; known: {', '.join(REGISTRY)}") from None


def eval_standard(name: str, point):
    return get_objective(name).evaluator(point)


def error_metric(f_star: float, f_plus: float) -> float:
    """Relative gap ``|(f* - f+)/f*|``, or the absolute gap when ``f* == 0``."""
    if f_star != 0:
        return abs((f_star - f_plus) / f_star)
    return abs(f_star - f_plus)
