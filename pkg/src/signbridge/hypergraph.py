"""Signed hypergraphs, uniformization by virtual nodes, adjacency tensors."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import HypergraphError, ShapeError, UniformityError
from .problem import BridgeProblem, SolveOptions, require_valid

__all__ = [
    "Hyperedge",
    "Hypergraph",
    "UniformizationResult",
    "adjacency_tensor",
    "problem_from_hypergraph",
    "uniformize",
]


@dataclass(frozen=True)
class Hyperedge:
    nodes: tuple[int, ...]
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))
        if self.sign not in (-1, 1):
            raise HypergraphError(f"hyperedge {self.nodes}: sign must be -1 or +1, got {self.sign!r}")
        object.__setattr__(self, "sign", int(self.sign))

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True)
class Hypergraph:
    node_count: int
    hyperedges: tuple[Hyperedge, ...] = ()

    def __post_init__(self):
        edges = tuple(e if isinstance(e, Hyperedge) else Hyperedge(*e) for e in self.hyperedges)
        object.__setattr__(self, "hyperedges", edges)
        if int(self.node_count) < 1:
            raise HypergraphError("node_count must be >= 1")
        seen = set()
        for e in edges:
            if len(e.nodes) < 2:
                raise HypergraphError(f"hyperedge {e.nodes}: needs at least 2 nodes")
            if len(set(e.nodes)) != len(e.nodes):
                raise HypergraphError(f"hyperedge {e.nodes}: repeated node")
            bad = [v for v in e.nodes if not 0 <= v < self.node_count]
            if bad:
                raise HypergraphError(f"hyperedge {e.nodes}: node ids {bad} outside [0, {self.node_count})")
            key = frozenset(e.nodes)
            if key in seen:
                raise HypergraphError(f"duplicate hyperedge {sorted(key)}")
            seen.add(key)

    @property
    def cardinalities(self) -> set[int]:
        return {len(e) for e in self.hyperedges}

    def is_uniform(self) -> bool:
        return len(self.cardinalities) <= 1


@dataclass(frozen=True)
class UniformizationResult:
    hypergraph: Hypergraph
    virtual_node_ids: tuple[int, ...]
    edge_map: tuple[tuple[Hyperedge, Hyperedge], ...] = field(default=())


def uniformize(h: Hypergraph) -> UniformizationResult:
    """Pad every hyperedge up to the largest cardinality with shared virtual nodes.

    The pool holds as many virtual nodes as the largest deficiency; an edge
    short by ``d`` nodes takes the first ``d`` of them.
    """
    if not h.hyperedges:
        return UniformizationResult(h, (), ())
    k_max = max(len(e) for e in h.hyperedges)
    d_max = max(k_max - len(e) for e in h.hyperedges)
    pool = tuple(range(h.node_count, h.node_count + d_max))
    padded = []
    for e in h.hyperedges:
        d = k_max - len(e)
        padded.append(Hyperedge(e.nodes + pool[:d], e.sign))
    out = Hypergraph(h.node_count + d_max, tuple(padded))
    return UniformizationResult(out, pool, tuple(zip(h.hyperedges, padded)))


def adjacency_tensor(h: Hypergraph, k: int | None = None) -> np.ndarray:
    """Order-``k`` symmetric sign tensor of a ``k``-uniform hypergraph.

    Every permutation of each hyperedge's node tuple carries the edge sign.
    """
    if k is None:
        if not h.hyperedges:
            raise UniformityError("cannot infer the order of an empty hypergraph; pass k")
        k = len(h.hyperedges[0])
    if k < 1:
        raise ValueError("k must be >= 1")
    bad = [e.nodes for e in h.hyperedges if len(e) != k]
    if bad:
        raise UniformityError(f"hypergraph is not {k}-uniform (e.g. {bad[0]})")
    out = np.zeros((h.node_count,) * k, dtype=np.int8)
    for e in h.hyperedges:
        for perm in itertools.permutations(e.nodes):
            out[perm] = e.sign
    return out


def problem_from_hypergraph(
    h: Hypergraph,
    marginals: Sequence[Sequence[float]],
    prior="unsigned",
    templates: Sequence[np.ndarray] | None = None,
    virtual_marginal: float | None = None,
    options: SolveOptions | None = None,
) -> BridgeProblem:
    """Build an order-``k_max`` problem on the uniformized hypergraph.

    Parameters
    ----------
    marginals
        One vector per mode over the original nodes.
    prior
        ``"unsigned"`` for ``|template|``, or an explicit array over the
        uniformized index set.
    templates
        Per-mode templates over the uniformized index set; defaults to the
        adjacency tensor for every mode.
    virtual_marginal
        ``None`` drops the constraints of virtual nodes; a number pins them
        to that value instead.
    """
    uni = uniformize(h)
    hu = uni.hypergraph
    if not hu.hyperedges and templates is None:
        raise UniformityError("empty hypergraph: pass templates explicitly")
    k = len(hu.hyperedges[0]) if templates is None else len(templates)
    if templates is None:
        adj = adjacency_tensor(hu, k)
        templates = [adj] * k
    templates = [np.asarray(t).astype(np.int8) for t in templates]
    n = hu.node_count
    for ell, t in enumerate(templates):
        if t.shape != (n,) * k:
            raise ShapeError(f"templates[{ell}]: shape {t.shape}, expected {(n,) * k}")
    if len(marginals) != k:
        raise ShapeError(f"need {k} marginal vectors, got {len(marginals)}")
    padded = []
    for ell, m in enumerate(marginals):
        m = np.asarray(m, dtype=float).reshape(-1)
        if m.size != h.node_count:
            raise ShapeError(f"marginals[{ell}]: length {m.size} != node count {h.node_count}")
        fill = 0.0 if virtual_marginal is None else float(virtual_marginal)
        padded.append(np.concatenate([m, np.full(len(uni.virtual_node_ids), fill)]))
    if isinstance(prior, str):
        if prior != "unsigned":
            raise ValueError(f"unknown prior rule {prior!r}")
        prior_arr = np.abs(templates[0]).astype(float)
    else:
        prior_arr = np.asarray(prior, dtype=float)
    opts = options or SolveOptions()
    if virtual_marginal is None and uni.virtual_node_ids:
        merged = []
        for ell in range(k):
            merged.append(tuple(opts.unconstrained_for(ell)) + uni.virtual_node_ids)
        opts = replace(opts, unconstrained=tuple(merged))
    return require_valid(BridgeProblem(prior_arr, tuple(templates), tuple(padded), opts))
