import math

import numpy as np
import pytest

from signbridge import BridgeProblem, ConvergenceTrace, RateUndefined, estimate_rate, validate_fixture
from signbridge import fixtures, io
from signbridge.diagnostics import residuals
from signbridge.oracle import brute_force_marginal_check


def _load(name):
    doc = io.load_json(fixtures.path(name))
    problem, _ = io.problem_from_document(doc)
    return problem, io.read_posterior(doc, problem.shape)


def _geometric_trace(n=12, modes=1):
    trace = ConvergenceTrace()
    for s in range(1, n + 1):
        for m in range(modes):
            trace.append(s, m, 10.0 ** -s, 10.0 ** -s, -1.0 / s)
    return trace


def test_printed_synthetic_residuals_small():
    problem, printed = _load("synthetic_4x4.json")
    assert max(np.max(np.abs(r)) for r in residuals(printed, problem)) <= 1e-3


def test_zero_posterior_zero_marginals():
    problem = BridgeProblem(np.ones((2, 2)), (np.ones((2, 2)),) * 2, ([0.0, 0.0], [0.0, 0.0]))
    assert all(not r.any() for r in residuals(np.zeros((2, 2)), problem))
    assert validate_fixture(np.zeros((2, 2)), problem, 1e-15).passed


def test_printed_eco_residual_pattern():
    problem, printed = _load("eco_10.json")
    r0, r1 = residuals(printed, problem)
    assert np.max(np.abs(r0)) <= 1e-3
    assert np.max(np.abs(r1[3:])) <= 1e-3
    assert np.all(np.abs(r1[:3]) > 1e-3)


def test_validate_fixture_reports():
    problem, printed = _load("synthetic_4x4.json")
    assert validate_fixture(printed, problem, 1e-3).passed
    problem, printed = _load("eco_10.json")
    report = validate_fixture(printed, problem, 1e-3)
    assert not report.passed
    assert [(m, i) for m, i, _ in report.failures] == [(1, 0), (1, 1), (1, 2)]


def test_residuals_match_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        k = int(rng.integers(1, 4))
        shape = tuple(int(n) for n in rng.integers(1, 4, size=k))
        templates = tuple(rng.integers(-1, 2, size=shape) for _ in range(k))
        marginals = tuple(rng.normal(size=n) for n in shape)
        problem = BridgeProblem(np.ones(shape), templates, marginals)
        t = rng.normal(size=shape)
        for a, b in zip(residuals(t, problem), brute_force_marginal_check(t, problem)):
            np.testing.assert_allclose(a, b, atol=1e-12, rtol=0)


def test_rate_of_exact_geometric_decay():
    est = estimate_rate(_geometric_trace(), 0, burn_in=5)
    assert est.slope == pytest.approx(-math.log(10), abs=1e-12)
    assert est.r_squared == pytest.approx(1.0)
    assert est.contraction == pytest.approx(0.1)


def test_rate_of_constant_residual():
    trace = ConvergenceTrace()
    for s in range(1, 10):
        trace.append(s, 0, 0.5, 0.5, 0.0)
    est = estimate_rate(trace, 0, burn_in=2)
    assert est.slope == pytest.approx(0.0, abs=1e-12)


def test_rate_errors():
    trace = _geometric_trace(n=6)
    with pytest.raises(ValueError):
        estimate_rate(trace, 0, burn_in=5)
    zero = ConvergenceTrace()
    for s in range(1, 10):
        zero.append(s, 0, 0.0 if s == 9 else 1.0 / s, 1.0, 0.0)
    with pytest.raises(RateUndefined):
        estimate_rate(zero, 0, burn_in=2)
    with pytest.raises(ValueError):
        estimate_rate(_geometric_trace(), 0, norm="l1")


def test_rate_selects_mode_rows():
    trace = _geometric_trace(modes=2)
    assert len(trace.for_mode(1)) == 12
    assert estimate_rate(trace, 1, burn_in=3, norm="l2").slope == pytest.approx(-math.log(10))
