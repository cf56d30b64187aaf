import math

import numpy as np
import pytest

import oracles
from logoopt.objectives import (
    REGISTRY, ConfigurationError, CountingObjective, error_metric, eval_sin1, eval_sin2, eval_standard, get_objective,
)
from logoopt.optimizer import OptimizerConfig, run


def test_sin1_values():
    assert eval_sin1(np.array([0.0])) == 0.5
    assert eval_sin1(np.array([0.5])) == pytest.approx((math.sin(6.5) * math.sin(13.5) + 1) / 2, abs=1e-15)
    assert eval_sin1(np.array([0.5])) == pytest.approx(0.58646, abs=1e-5)


def test_sin2_values_and_symmetry():
    assert eval_sin2(np.array([0.0, 0.0])) == 0.25
    rng = np.random.default_rng(3)
    for a, b in rng.random((20, 2)):
        assert eval_sin2(np.array([a, b])) == eval_sin2(np.array([b, a]))


def test_batch_matches_pointwise():
    rng = np.random.default_rng(0)
    for spec in REGISTRY.values():
        lo, hi = np.array(spec.domain.lower), np.array(spec.domain.upper)
        x = lo + (hi - lo) * rng.random((5, spec.dim))
        batch = spec.evaluator(x)
        assert batch.shape == (5,)
        assert [spec.evaluator(p) for p in x] == batch.tolist()


def test_sin_optima_against_oracle():
    x, v = oracles.sin1_optimum()
    spec = get_objective("sin1")
    assert spec.f_star == pytest.approx(v, abs=1e-13)
    assert spec.x_star[0] == pytest.approx(x, abs=1e-7)
    assert get_objective("sin2").f_star == pytest.approx(v * v, abs=1e-13)
    assert spec.f_star == pytest.approx(0.975599, abs=1e-6)


def test_branin_minimizers():
    for x in [(-math.pi, 12.275), (math.pi, 2.275), (9.42478, 2.475)]:
        assert eval_standard("branin", np.array(x)) == pytest.approx(-0.397887, abs=1e-6)
    x, v = oracles.refine_max(get_objective("branin").evaluator, (math.pi, 2.275), [(-5, 10), (0, 15)])
    assert v == pytest.approx(-5 / (4 * math.pi), abs=1e-13)


def test_standard_points():
    assert eval_standard("rosenbrock2", np.array([1.0, 1.0])) == 0.0
    assert eval_standard("rosenbrock10", np.ones(10)) == 0.0
    assert eval_standard("shekel5", np.full(4, 4.0)) == pytest.approx(10.1532, abs=1e-4)
    with pytest.raises(ConfigurationError):
        eval_standard("himmelblau", np.zeros(2))


@pytest.mark.parametrize("name", ["peaks", "hartman3", "hartman6", "shekel5", "shekel7", "shekel10"])
def test_registered_optimum_matches_refinement(name):
    _, v = oracles.sampled_max(name, samples=20_000)
    assert get_objective(name).f_star == pytest.approx(v, abs=1e-9)


@pytest.mark.parametrize("name", list(REGISTRY))
def test_random_probe_never_beats_f_star(name):
    spec = REGISTRY[name]
    lo, hi = np.array(spec.domain.lower), np.array(spec.domain.upper)
    rng = np.random.default_rng(11)
    best = -np.inf
    for _ in range(5):
        x = lo + (hi - lo) * rng.random((200_000, spec.dim))
        best = max(best, float(np.max(spec.evaluator(x))))
    assert best <= spec.f_star + 1e-9
    assert np.isfinite(best)


def test_x_star_attains_f_star():
    for spec in REGISTRY.values():
        assert spec.evaluator(np.array(spec.x_star)) == pytest.approx(spec.f_star, abs=1e-6)


def test_error_metric():
    assert error_metric(1.0, 0.9999) == pytest.approx(1e-4, rel=1e-9)
    assert error_metric(0.0, -0.002) == 0.002
    assert error_metric(-2.0, -2.0) == 0.0
    assert error_metric(-0.4, -0.5) == pytest.approx(0.25)


def test_counting_objective_matches_reported_evals():
    spec = get_objective("branin")
    counted = CountingObjective(spec.evaluator)
    result = run(counted, spec.domain, OptimizerConfig.adaptive_schedule(max_divisions=40))
    assert counted.calls == result.state.evals == 2 * result.state.n + 1


def test_unknown_objective():
    with pytest.raises(ConfigurationError):
        get_objective("sphere")
