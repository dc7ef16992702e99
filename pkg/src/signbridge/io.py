"""JSON problem/solution/hypergraph documents and the trace CSV.

All indices in files are zero-based.  Floats are written with Python's
shortest round-trip representation, so parse -> serialize is value-identical.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .diagnostics import ConvergenceTrace
from .hypergraph import Hyperedge, Hypergraph, UniformizationResult
from .problem import BridgeProblem, SolveOptions
from .solver import BridgeSolution
from .tensor import SparseEntry, dense_from_sparse, sparse_from_dense

FORMAT_VERSION = "1.0"
TRACE_HEADER = ("sweep", "mode", "residual_inf", "residual_l2", "dual_value")
_OPTION_FIELDS = ("tolerance", "max_iterations", "overflow_guard", "record_trace", "entropy", "reduce_support")

__all__ = [
    "DocumentError",
    "dump_json",
    "hypergraph_from_document",
    "hypergraph_to_document",
    "load_json",
    "problem_from_document",
    "problem_to_document",
    "read_posterior",
    "read_trace_csv",
    "solution_to_document",
    "uniformization_to_document",
    "write_trace_csv",
]


class DocumentError(ValueError):
    """Malformed document; ``field`` names the offending path when known."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise DocumentError(f"{path}: top level must be a JSON object")
    return doc


def dump_json(doc: dict, path=None) -> str:
    text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _require(doc, key, where=""):
    if key not in doc:
        raise DocumentError("missing required field", f"{where}{key}")
    return doc[key]


def _array(value, field, shape=None, dtype=float):
    try:
        arr = np.array(value, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"not a numeric array ({exc})", field) from exc
    if shape is not None and arr.shape != tuple(shape):
        raise DocumentError(f"shape {arr.shape}, expected {tuple(shape)}", field)
    return arr


def _is_sparse(prior) -> bool:
    return isinstance(prior, list) and (not prior or isinstance(prior[0], dict))


def _float_list(arr):
    return np.asarray(arr, dtype=float).tolist()


def problem_from_document(doc: dict) -> tuple[BridgeProblem, bool]:
    """Parse a problem document.

    Returns ``(problem, sparse)`` where ``sparse`` records the prior encoding.
    """
    order = _require(doc, "order")
    shape = _require(doc, "shape")
    if not isinstance(order, int) or order < 1:
        raise DocumentError("must be a positive integer", "order")
    if not isinstance(shape, list) or len(shape) != order or not all(isinstance(d, int) and d >= 1 for d in shape):
        raise DocumentError(f"must list {order} positive integers", "shape")
    prior_doc = _require(doc, "prior")
    sparse = _is_sparse(prior_doc)
    if sparse:
        if "templates" in doc:
            raise DocumentError("must be omitted when the prior is a sparse entry list", "templates")
        entries = []
        for e, item in enumerate(prior_doc):
            where = f"prior[{e}]."
            try:
                entries.append(SparseEntry(
                    tuple(_require(item, "idx", where)),
                    _require(item, "prior_value", where),
                    tuple(_require(item, "signs", where)),
                ))
            except (TypeError, ValueError) as exc:
                if isinstance(exc, DocumentError):
                    raise
                raise DocumentError(str(exc), f"prior[{e}]") from exc
        try:
            prior, templates = dense_from_sparse(shape, entries)
        except ValueError as exc:
            raise DocumentError(str(exc), "prior") from exc
    else:
        prior = _array(prior_doc, "prior", shape)
        tdoc = _require(doc, "templates")
        if not isinstance(tdoc, list) or len(tdoc) != order:
            raise DocumentError(f"must hold {order} arrays", "templates")
        templates = [_array(t, f"templates[{ell}]", shape) for ell, t in enumerate(tdoc)]
        for ell, t in enumerate(templates):
            if not np.all(np.isin(t, (-1, 0, 1))):
                raise DocumentError("entries must be -1, 0 or 1", f"templates[{ell}]")
    mdoc = _require(doc, "marginals")
    if not isinstance(mdoc, list) or len(mdoc) != order:
        raise DocumentError(f"must hold {order} vectors", "marginals")
    marginals = [_array(m, f"marginals[{ell}]", (shape[ell],)) for ell, m in enumerate(mdoc)]

    unconstrained = doc.get("unconstrained", [[] for _ in range(order)])
    if not isinstance(unconstrained, list) or len(unconstrained) != order:
        raise DocumentError(f"must hold {order} integer lists", "unconstrained")
    for ell, lst in enumerate(unconstrained):
        if not isinstance(lst, list) or not all(isinstance(i, int) and 0 <= i < shape[ell] for i in lst):
            raise DocumentError(f"must be integers in [0, {shape[ell]})", f"unconstrained[{ell}]")
    opts_doc = doc.get("options") or {}
    unknown = set(opts_doc) - set(_OPTION_FIELDS)
    if unknown:
        raise DocumentError(f"unknown option(s) {sorted(unknown)}", "options")
    try:
        options = SolveOptions(**opts_doc, unconstrained=tuple(tuple(x) for x in unconstrained))
    except (TypeError, ValueError) as exc:
        raise DocumentError(str(exc), "options") from exc
    return BridgeProblem(prior, tuple(templates), tuple(marginals), options), sparse


def problem_to_document(problem: BridgeProblem, sparse: bool = False, extra: dict | None = None) -> dict:
    k = problem.order
    doc = {"format_version": FORMAT_VERSION, "order": k, "shape": list(problem.shape)}
    if sparse:
        doc["prior"] = [
            {"idx": list(e.idx), "prior_value": e.prior_value, "signs": list(e.signs)}
            for e in sparse_from_dense(problem.prior, problem.templates)
        ]
    else:
        doc["prior"] = _float_list(problem.prior)
        doc["templates"] = [np.asarray(t, dtype=int).tolist() for t in problem.templates]
    doc["marginals"] = [_float_list(m) for m in problem.marginals]
    doc["unconstrained"] = [list(problem.options.unconstrained_for(ell)) for ell in range(k)]
    o = problem.options
    doc["options"] = {
        "tolerance": o.tolerance,
        "max_iterations": o.max_iterations,
        "overflow_guard": o.overflow_guard,
        "record_trace": o.record_trace,
        "entropy": o.entropy,
        "reduce_support": o.reduce_support,
    }
    if extra:
        doc.update(extra)
    return doc


def solution_to_document(solution: BridgeSolution, sparse: bool = False, trace_path=None, extra: dict | None = None) -> dict:
    post = np.asarray(solution.posterior, dtype=float)
    if sparse:
        posterior = [{"idx": [int(i) for i in idx], "value": float(post[idx])} for idx in zip(*np.nonzero(post))]
    else:
        posterior = post.tolist()
    doc = {
        "format_version": FORMAT_VERSION,
        "status": solution.status.value,
        "iterations_used": int(solution.iterations_used),
        "final_residuals": [float(r) for r in solution.final_residuals],
        "factors": [_float_list(f) for f in solution.factors.factors],
        "posterior": posterior,
        "trace": None if trace_path is None else str(trace_path),
    }
    if extra:
        doc.update(extra)
    return doc


def read_posterior(doc: dict, shape) -> np.ndarray:
    """Posterior from a solution document (dense or sparse).

    Problem documents that carry a ``reference_posterior`` are accepted too.
    """
    key = "posterior" if "posterior" in doc else "reference_posterior"
    value = _require(doc, key)
    if _is_sparse(value):
        out = np.zeros(shape)
        for e, item in enumerate(value):
            idx = tuple(_require(item, "idx", f"{key}[{e}]."))
            if len(idx) != len(shape) or any(not 0 <= i < d for i, d in zip(idx, shape)):
                raise DocumentError(f"index {list(idx)} out of bounds for shape {list(shape)}", f"{key}[{e}]")
            out[idx] = float(_require(item, "value", f"{key}[{e}]."))
        return out
    return _array(value, key, shape)


def hypergraph_from_document(doc: dict) -> Hypergraph:
    n = _require(doc, "node_count")
    edges = _require(doc, "hyperedges")
    if not isinstance(edges, list):
        raise DocumentError("must be a list", "hyperedges")
    parsed = []
    for e, item in enumerate(edges):
        nodes = _require(item, "nodes", f"hyperedges[{e}].")
        sign = item.get("sign", 1)
        parsed.append(Hyperedge(tuple(nodes), sign))
    return Hypergraph(n, tuple(parsed))


def hypergraph_to_document(h: Hypergraph) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "node_count": h.node_count,
        "hyperedges": [{"nodes": list(e.nodes), "sign": e.sign} for e in h.hyperedges],
    }


def uniformization_to_document(result: UniformizationResult) -> dict:
    doc = hypergraph_to_document(result.hypergraph)
    doc["virtual_node_ids"] = list(result.virtual_node_ids)
    return doc


def write_trace_csv(trace: ConvergenceTrace, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in trace.rows:
            w.writerow([r.sweep, r.mode, repr(r.residual_inf), repr(r.residual_l2), repr(r.dual_value)])


def read_trace_csv(path) -> ConvergenceTrace:
    trace = ConvergenceTrace()
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
            raise DocumentError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_HEADER):
                raise DocumentError(f"{path}: line {lineno}: expected {len(TRACE_HEADER)} columns, got {len(row)}")
            try:
                trace.append(int(row[0]), int(row[1]), float(row[2]), float(row[3]), float(row[4]))
            except ValueError as exc:
                raise DocumentError(f"{path}: line {lineno}: {exc}") from exc
    return trace
