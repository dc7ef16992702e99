import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signbridge import (
    Hyperedge,
    Hypergraph,
    HypergraphError,
    ShapeError,
    UniformityError,
    adjacency_tensor,
    problem_from_hypergraph,
    solve_generalized,
    uniformize,
)
from signbridge import fixtures, io

FIGURE2 = Hypergraph(4, (Hyperedge((0, 1, 2)), Hyperedge((0, 3)), Hyperedge((2, 3))))


def test_figure2_uniformization():
    result = uniformize(FIGURE2)
    assert result.virtual_node_ids == (4,)
    assert result.hypergraph.node_count == 5
    assert [e.nodes for e in result.hypergraph.hyperedges] == [(0, 1, 2), (0, 3, 4), (2, 3, 4)]
    assert [a.nodes for a, _ in result.edge_map] == [(0, 1, 2), (0, 3), (2, 3)]


def test_uniform_input_unchanged():
    h = Hypergraph(4, (Hyperedge((0, 1, 2)), Hyperedge((1, 2, 3), -1)))
    result = uniformize(h)
    assert result.hypergraph == h and result.virtual_node_ids == ()


def test_mixed_cardinalities_pad_with_shared_pool():
    h = Hypergraph(5, (Hyperedge((0, 1)), Hyperedge((1, 2, 3, 4))))
    result = uniformize(h)
    assert result.virtual_node_ids == (5, 6)
    assert result.hypergraph.hyperedges[0].nodes == (0, 1, 5, 6)
    h = Hypergraph(5, (Hyperedge((0, 1)), Hyperedge((0, 1, 2)), Hyperedge((1, 2, 3, 4))))
    result = uniformize(h)
    assert result.virtual_node_ids == (5, 6)
    assert [e.nodes for e in result.hypergraph.hyperedges] == [(0, 1, 5, 6), (0, 1, 2, 5), (1, 2, 3, 4)]


def test_hypergraph_validation():
    with pytest.raises(HypergraphError):
        Hypergraph(3, (Hyperedge((0,)),))
    with pytest.raises(HypergraphError):
        Hypergraph(3, (Hyperedge((0, 0)),))
    with pytest.raises(HypergraphError):
        Hypergraph(3, (Hyperedge((0, 3)),))
    with pytest.raises(HypergraphError):
        Hypergraph(3, (Hyperedge((0, 1)), Hyperedge((1, 0))))
    with pytest.raises(HypergraphError):
        Hyperedge((0, 1), 0)


def test_adjacency_single_positive_edge():
    a = adjacency_tensor(Hypergraph(3, (Hyperedge((0, 1, 2)),)), 3)
    perms = set(itertools.permutations((0, 1, 2)))
    for idx in itertools.product(range(3), repeat=3):
        assert a[idx] == (1 if idx in perms else 0)
    assert int((a == 0).sum()) == 27 - 6


def test_adjacency_empty_and_negative():
    assert not adjacency_tensor(Hypergraph(3), 2).any()
    np.testing.assert_array_equal(adjacency_tensor(Hypergraph(2, (Hyperedge((0, 1), -1),)), 2), [[0, -1], [-1, 0]])


def test_adjacency_rejects_non_uniform():
    with pytest.raises(UniformityError):
        adjacency_tensor(FIGURE2, 3)


@st.composite
def uniform_hypergraphs(draw):
    n = draw(st.integers(3, 5))
    k = draw(st.integers(2, 3))
    combos = list(itertools.combinations(range(n), k))
    chosen = draw(st.lists(st.sampled_from(combos), unique=True, max_size=len(combos)))
    signs = draw(st.lists(st.sampled_from([-1, 1]), min_size=len(chosen), max_size=len(chosen)))
    return Hypergraph(n, tuple(Hyperedge(c, s) for c, s in zip(chosen, signs))), k


@settings(max_examples=40, deadline=None)
@given(uniform_hypergraphs())
def test_adjacency_is_fully_symmetric(case):
    h, k = case
    a = adjacency_tensor(h, k)
    for perm in itertools.permutations(range(k)):
        np.testing.assert_array_equal(a, np.transpose(a, perm))
    assert int(np.abs(a).sum()) == len(h.hyperedges) * len(list(itertools.permutations(range(k))))


def test_problem_from_figure2():
    marginals = [[1.0, 2.0, 1.5, 0.5]] * 3
    problem = problem_from_hypergraph(FIGURE2, marginals)
    assert problem.shape == (5, 5, 5)
    for ell in range(3):
        assert problem.options.unconstrained_for(ell) == (4,)
        assert not problem.constrained_mask(ell)[4]
    pinned = problem_from_hypergraph(FIGURE2, marginals, virtual_marginal=0.25)
    assert pinned.options.unconstrained_for(0) == ()
    assert pinned.marginals[0][4] == 0.25


def test_problem_from_two_uniform_graph():
    h = Hypergraph(3, (Hyperedge((0, 1)), Hyperedge((1, 2))))
    problem = problem_from_hypergraph(h, [[1.0, 2.0, 1.0]] * 2)
    assert problem.order == 2
    sol = solve_generalized(problem)
    assert sol.converged


def test_problem_from_hypergraph_marginal_length():
    with pytest.raises(ShapeError):
        problem_from_hypergraph(FIGURE2, [[1.0, 1.0, 1.0]] * 3)


def test_ecological_instance_from_signed_graph():
    fixture, _ = io.problem_from_document(io.load_json(fixtures.path("eco_10.json")))
    x, y = fixture.templates
    edges = tuple(Hyperedge((i, j), int(x[i, j])) for i in range(10) for j in range(i + 1, 10) if x[i, j])
    # self-loops on the diagonal cannot be hyperedges, so the templates are passed through
    problem = problem_from_hypergraph(Hypergraph(10, edges), fixture.marginals, templates=[x, y], options=fixture.options)
    np.testing.assert_array_equal(problem.prior, fixture.prior)
    for a, b in zip(problem.marginals, fixture.marginals):
        np.testing.assert_array_equal(a, b)
    offdiag = ~np.eye(10, dtype=bool)
    np.testing.assert_array_equal(adjacency_tensor(Hypergraph(10, edges), 2)[offdiag], x[offdiag])
