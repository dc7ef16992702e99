import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signbridge import (
    BridgeProblem,
    GenerationError,
    ProblemValidationError,
    SolveOptions,
    generate_feasible,
    partition,
    signed_marginal,
    solve_generalized,
    validate,
)
from signbridge import fixtures, io
from signbridge.oracle import brute_force_marginal_check
from signbridge.problem import forced_zero_mask


def _load(name):
    problem, _ = io.problem_from_document(io.load_json(fixtures.path(name)))
    return problem


def test_synthetic_instance_is_valid():
    assert validate(_load("synthetic_4x4.json")).ok


def test_template_domain_violation():
    p = _load("synthetic_4x4.json")
    x = np.array(p.templates[0])
    x[0, 1] = 2
    report = validate(BridgeProblem(p.prior, (x, p.templates[1]), p.marginals))
    assert not report.ok
    assert any("outside {-1, 0, 1}" in s for s in report.violations)


def test_partially_active_entry():
    p = _load("synthetic_4x4.json")
    x = np.array(p.templates[0])
    x[0, 1] = 0
    report = validate(BridgeProblem(p.prior, (x, p.templates[1]), p.marginals))
    assert any("partially active entry" in s for s in report.violations)
    with pytest.raises(ProblemValidationError):
        report.raise_if_invalid()


def test_slice_sign_requirements():
    ones = np.ones((2, 2))
    neg = -np.ones((2, 2), dtype=int)
    # only negative signs along rows need negative row targets
    bad = BridgeProblem(ones, (neg, np.ones((2, 2))), ([1.0, 1.0], [1.0, 1.0]))
    assert len(validate(bad).violations) == 2
    good = BridgeProblem(ones, (neg, np.ones((2, 2))), ([-1.0, -1.0], [1.0, 1.0]))
    assert validate(good).ok
    empty_row = BridgeProblem([[1.0, 1.0], [0.0, 0.0]], (np.ones((2, 2)),) * 2, ([2.0, 0.5], [1.0, 1.0]))
    assert any("no active entries" in s for s in validate(empty_row).violations)


def test_length_mismatch_reported():
    report = validate(BridgeProblem(np.ones((2, 3)), (np.ones((2, 3)),) * 2, ([1.0, 1.0], [1.0, 1.0])))
    assert any("marginals[1]" in s for s in report.violations)


def test_partition_synthetic():
    p = _load("synthetic_4x4.json")
    part = partition(p.prior, p.templates)
    off = ~np.eye(4, dtype=bool)
    pm = np.zeros((4, 4), bool)
    pm[0, 2] = pm[2, 0] = True
    mp = np.zeros((4, 4), bool)
    mp[0, 1] = mp[1, 0] = True
    np.testing.assert_array_equal(part.q_pp > 0, off & ~pm & ~mp)
    np.testing.assert_array_equal(part.q_pm > 0, pm)
    np.testing.assert_array_equal(part.q_mp > 0, mp)
    assert not part.q_mm.any()
    np.testing.assert_array_equal(part.total(), p.prior)


def test_partition_all_positive_and_higher_order():
    q = np.arange(1.0, 10.0).reshape(3, 3)
    part = partition(q, [np.ones((3, 3))] * 2)
    np.testing.assert_array_equal(part.q_pp, q)
    assert not (part.q_pm.any() or part.q_mp.any() or part.q_mm.any())
    t = np.ones((2, 2, 2), dtype=int)
    t[0, 1, 1] = -1
    masks = partition(np.ones((2, 2, 2)), [t, np.ones((2, 2, 2)), t])
    assert len(masks) == 3
    assert masks[0][1][0, 1, 1] and not masks[0][0][0, 1, 1]


def test_generate_classical_instance():
    problem, witness = generate_feasible([2, 2], 1.0, 0.0, seed=3, return_witness=True)
    assert all((t == 1).all() for t in problem.templates)
    np.testing.assert_allclose(problem.marginals[0], witness.sum(axis=1))
    np.testing.assert_allclose(problem.marginals[1], witness.sum(axis=0))


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.integers(1, 5), min_size=1, max_size=3),
    st.floats(0.2, 1.0),
    st.floats(0.0, 1.0),
    st.integers(0, 2**31 - 1),
)
def test_generated_problems_validate(shape, density, neg, seed):
    problem = generate_feasible(shape, density, neg, seed)
    assert validate(problem).ok


def test_generated_order3_is_solvable():
    problem, witness = generate_feasible([3, 3, 3], 0.5, 0.3, seed=11, return_witness=True)
    for ell, r in enumerate(brute_force_marginal_check(witness, problem)):
        assert np.max(np.abs(r)) <= 1e-12, ell
    sol = solve_generalized(problem)
    assert sol.converged and max(sol.final_residuals) < 1e-9


def test_generate_is_deterministic():
    a = generate_feasible([3, 4], 0.6, 0.4, seed=9)
    b = generate_feasible([3, 4], 0.6, 0.4, seed=9)
    np.testing.assert_array_equal(a.prior, b.prior)
    for x, y in zip(a.marginals, b.marginals):
        np.testing.assert_array_equal(x, y)


def test_generate_rejects_bad_arguments():
    with pytest.raises(ValueError):
        generate_feasible([2, 2], 0.0)
    with pytest.raises(ValueError):
        generate_feasible([2, 2], 1.0, 1.5)
    with pytest.raises(GenerationError):
        generate_feasible([1, 1], 1e-9, max_retries=3)


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(tolerance=0)
    with pytest.raises(ValueError):
        SolveOptions(entropy="renyi")
    assert SolveOptions(unconstrained=((2, 1, 2),)).unconstrained_for(0) == (1, 2)
    assert SolveOptions().unconstrained_for(3) == ()


def test_problem_arrays_are_read_only():
    p = _load("synthetic_4x4.json")
    with pytest.raises(ValueError):
        p.prior[0, 0] = 5.0


def test_forced_zero_mask_eco():
    mask = forced_zero_mask(_load("eco_10.json"))
    assert sorted(map(tuple, np.argwhere(mask).tolist())) == [(0, 8), (8, 0), (8, 9), (9, 8)]


def test_forced_zero_mask_empty_for_interior_instance():
    assert not forced_zero_mask(generate_feasible([3, 3], 1.0, 0.3, seed=1)).any()


def test_signed_marginals_of_witness_are_targets():
    problem, witness = generate_feasible([4, 3, 2], 0.8, 0.5, seed=2, return_witness=True)
    for ell in range(3):
        np.testing.assert_allclose(signed_marginal(witness, problem.templates[ell], ell), problem.marginals[ell])
