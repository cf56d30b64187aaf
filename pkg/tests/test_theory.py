import math

import numpy as np
import pytest

from logoopt.theory import (
    BoundParams, SmoothnessParams, ball_ratio, delta, log_w_effect_ratio_dpos, worst_case_bound, w_effect_ratio_d0, w_effect_ratio_dpos,
)

S = SmoothnessParams(b=1.0, alpha=1.0, p=2.0, D=1)


def test_derived_constants():
    s = SmoothnessParams(b=2.0, alpha=0.5, p=2.0, D=4)
    assert s.gamma == 3 ** -0.5
    assert s.c == pytest.approx(2.0 * 3**0.5 * 4**0.25)
    assert s.nu == pytest.approx(3**-1 * 4**-0.25)
    assert BoundParams(s).C == pytest.approx(s.nu**-4)
    for bad in [dict(b=0, alpha=1, p=2, D=1), dict(b=1, alpha=1, p=0.5, D=1), dict(b=1, alpha=1, p=2, D=0)]:
        with pytest.raises(ValueError):
            SmoothnessParams(**bad)


def test_delta():
    s = SmoothnessParams(b=1.5, alpha=1.0, p=2.0, D=3)
    assert delta(0, s) == s.c
    assert delta(3, s) == pytest.approx(s.c * s.gamma)
    values = [delta(h, s) for h in range(101)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        delta(-1, s)


def test_ball_ratio():
    s = SmoothnessParams(b=1.0, alpha=1.0, p=2.0, D=2)
    assert ball_ratio(7, 1, s) == 1.0
    assert ball_ratio(5, 2, S) == pytest.approx(3.0, rel=1e-14)
    ratios = [ball_ratio(10, w, s) for w in range(1, 8)]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert ratios[3] == pytest.approx(s.gamma ** -3, rel=1e-12)
    with pytest.raises(ValueError):
        ball_ratio(1, 3, s)


def test_w1_bound_reduces_to_plain_form():
    params = BoundParams(S, w=1, w_prime=1)
    for n in [1, 2, 10, 100, 1000]:
        expected = S.c * math.exp(-min(math.sqrt(n) / params.C - 2, math.sqrt(n) - 1) * math.log(3))
        assert worst_case_bound(n, params) == pytest.approx(expected, rel=1e-13)


def test_bound_spreadsheet_values():
    # independent evaluation of the formula with w = 3, w' = 3
    params = BoundParams(S, w=3, w_prime=3)
    g = S.gamma
    width = (g**-3 - 1) / (g**-1 - 1)
    for n in [1, 5, 17, 64, 250, 999, 1234, 2000, 4096, 10_000]:
        first = math.sqrt(n) * (3 / (3 * params.C)) / width - 2
        second = 3 * math.sqrt(n) - 3
        expected = S.c * math.exp(-min(first, second) * 3 * math.log(1 / g))
        assert worst_case_bound(n, params) == pytest.approx(expected, rel=1e-12)


def test_bound_non_increasing_and_vanishing():
    params = BoundParams.for_hmax(S, 3, "wsqrt")
    values = np.array([worst_case_bound(n, params) for n in range(1, 10_001)])
    assert np.all(np.diff(values) <= 0)
    assert worst_case_bound(10**12, params) < 1e-100


def test_best_case_drops_width_penalty():
    params = BoundParams(S, w=4, w_prime=1)
    assert worst_case_bound(500, params, best_case=True) <= worst_case_bound(500, params)
    with pytest.raises(ValueError):
        worst_case_bound(0, params)


def test_bound_params_validation():
    with pytest.raises(ValueError):
        BoundParams(S, w=3, w_prime=2)
    with pytest.raises(ValueError):
        BoundParams(S, C=-1.0)
    with pytest.raises(ValueError):
        BoundParams(S, d=-0.5)
    assert BoundParams.for_hmax(S, 3, "sqrt").w_prime == 1


def test_w_effect_ratio_d0():
    assert w_effect_ratio_d0(1, 0.3) == 1.0
    assert w_effect_ratio_d0(2, 0.5) == pytest.approx(4 / 3)
    for w in range(1, 40):
        for g in np.linspace(0.01, 0.99, 50):
            closed = w**2 * (1 / g - 1) / (g**-w - 1)
            assert w_effect_ratio_d0(w, g) == pytest.approx(closed, rel=1e-9)
            assert w_effect_ratio_d0(w, g) <= w * (1 + 1e-12)
    with pytest.raises(ValueError):
        w_effect_ratio_d0(2, 1.0)


def test_w_effect_ratio_dpos():
    assert w_effect_ratio_dpos(1, 0.4, 0.5, 1) == pytest.approx(1.0)
    for w in range(2, 21):
        for g in np.linspace(0.05, 0.95, 10):
            for d in (0.01, 0.5, 1.0):
                log_v = log_w_effect_ratio_dpos(w, g, d, 1)
                assert np.isfinite(log_v)
                v = w_effect_ratio_dpos(w, g, d, 1)
                assert v > 0
                if log_v < 700:
                    assert np.isfinite(v) and math.log(v) == pytest.approx(log_v, rel=1e-12, abs=1e-12)
    # direct evaluation of the caption formula where it fits in a double
    for w, g, d in [(2, 0.5, 1.0), (5, 0.3, 0.5), (9, 0.8, 1.0)]:
        def x(width):
            e = width * d
            return width**2 * (g**e - g ** (2 * e)) / sum(g**-l for l in range(width))
        assert w_effect_ratio_dpos(w, g, d, 1) == pytest.approx((x(w) / x(1)) ** (-1 / d), rel=1e-10)
    for w in (3, 7):
        for g in (0.2, 0.5, 0.8):
            a = w_effect_ratio_dpos(w, g, 0.5, 1)
            b = w_effect_ratio_dpos(w, g, 0.5 * 1.001, 1)
            assert abs(a - b) / a < 0.01
    with pytest.raises(ValueError):
        w_effect_ratio_dpos(3, 0.5, 0.0, 1)
