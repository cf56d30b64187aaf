"""Closed-form loss bounds for LOGO under a power-law semi-metric.

With smoothness ``l(x, y) = b * ||x - y||_p ** alpha`` and the ternary
division used by the optimizer, cells at depth ``h`` have l-diameter at
most ``delta(h) = c * gamma**(h / D)`` with ``gamma = 3**-alpha`` and
``c = b * 3**alpha * D**(alpha / p)``.  The functions below evaluate that
diameter, the ball-volume ratio between depths ``h - w + 1`` and ``h``, the
worst-case finite-time loss bound and the two ratios used to compare a
width ``w`` against ``w = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SmoothnessParams:
    b: float
    alpha: float
    p: float
    D: int

    def __post_init__(self):
        if self.b <= 0 or self.alpha <= 0:
            raise ValueError("b and alpha must be positive")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.D < 1:
            raise ValueError("D must be a positive integer")

    @property
    def gamma(self) -> float:
        return 3.0 ** -self.alpha

    @property
    def c(self) -> float:
        return self.b * 3.0**self.alpha * self.D ** (self.alpha / self.p)

    @property
    def nu(self) -> float:
        return 3.0 ** (-2 * self.alpha) * self.D ** (-self.alpha / self.p)


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the worst-case loss bound.

    ``w_prime`` is 1 for the depth cap ``sqrt(n) - w`` and ``w`` for
    ``w*sqrt(n) - w``.  ``C`` defaults to ``nu**-D``.
    """

    smoothness: SmoothnessParams
    w: int = 1
    w_prime: int = 1
    C: Optional[float] = None
    d: float = 0.0

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("w must be a positive integer")
        if self.w_prime not in (1, self.w):
            raise ValueError("w_prime must be 1 or w")
        if self.C is None:
            object.__setattr__(self, "C", self.smoothness.nu ** -self.smoothness.D)
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.d < 0:
            raise ValueError("d must be non-negative")

    @classmethod
    def for_hmax(cls, smoothness: SmoothnessParams, w: int, hmax: str, **kwargs) -> "BoundParams":
        return cls(smoothness, w=w, w_prime=w if hmax == "wsqrt" else 1, **kwargs)


def delta(h: float, params: SmoothnessParams) -> float:
    if h < 0:
        raise ValueError("depth must be non-negative")
    return params.c * params.gamma ** (h / params.D)


def ball_ratio(h: float, w: int, params: SmoothnessParams) -> float:
    """``(delta(h - w + 1) / delta(h))**D``, which equals ``gamma**-(w - 1)``."""
    if h < w - 1:
        raise ValueError(f"ball ratio needs h >= w - 1, got h={h}, w={w}")
    return (delta(h - w + 1, params) / delta(h, params)) ** params.D


def _width_sum(w: int, gamma: float) -> float:
    # (gamma**-w - 1) / (gamma**-1 - 1) = sum_{l<w} gamma**-l, written as the sum
    # so that gamma close to 1 does not cancel
    return math.fsum(gamma**-l for l in range(w))


def worst_case_bound(n: float, params: BoundParams, best_case: bool = False) -> float:
    """Worst-case loss bound after ``n`` divisions.

    ``best_case=True`` drops the width penalty factor, giving the
    optimistic variant that assumes dominating cells lie in the optimal
    branch.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s = params.smoothness
    w, wp = params.w, params.w_prime
    penalty = 1.0 if best_case else _width_sum(w, s.gamma)
    first = math.sqrt(n) * (w / (wp * params.C)) / penalty - 2
    second = wp * math.sqrt(n) - w
    exponent = -min(first, second) * (w / s.D) * math.log(1 / s.gamma)
    return s.c * math.exp(exponent)


def w_effect_ratio_d0(w: int, gamma: float) -> float:
    """``w**2 * (1/gamma - 1) / (gamma**-w - 1)``; at most ``w``."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if w < 1:
        raise ValueError("w must be a positive integer")
    return w**2 / _width_sum(w, gamma)


def log_w_effect_ratio_dpos(w: int, gamma: float, d: float, D: int) -> float:
    """Natural log of :func:`w_effect_ratio_dpos`.

    For small ``d`` the ratio easily exceeds the double range (the
    ``-1/d`` power), while its logarithm stays moderate.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if w < 1:
        raise ValueError("w must be a positive integer")

    def log_term(width):
        e = width * d / D
        # gamma**e - gamma**(2e) = gamma**e * (1 - gamma**e), with expm1 for small e
        log_gap = e * math.log(gamma) + math.log(-math.expm1(e * math.log(gamma)))
        return 2 * math.log(width) + log_gap - math.log(_width_sum(width, gamma))

    return -(log_term(w) - log_term(1)) / d


def w_effect_ratio_dpos(w: int, gamma: float, d: float, D: int) -> float:
    """Ratio of the polynomial-rate bound terms at width ``w`` and at ``w = 1``.

    Evaluates ``X(w)**(-1/d) / X(1)**(-1/d)`` with
    ``X(w) = w**2 * (gamma**(w d/D) - gamma**(2 w d/D)) / sum_{l<w} gamma**-l``.
    Returns ``inf`` when the ratio exceeds the double range; use
    :func:`log_w_effect_ratio_dpos` there.
    """
    log_ratio = log_w_effect_ratio_dpos(w, gamma, d, D)
    return math.exp(log_ratio) if log_ratio < 709.0 else math.inf
