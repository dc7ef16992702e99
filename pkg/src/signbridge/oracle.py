"""Slow, independent reference optimizer for cross-checking the scaling solver.

Nothing here goes through the tensor kernels used by the main solver: the
active entries are enumerated explicitly and every marginal is a plain Python
loop over them.  The dual is maximized by full-gradient ascent (all
multipliers at once) with a halving line search.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import OracleFailed, ShapeError
from .problem import BridgeProblem, require_valid
from .solver import BridgeSolution, ScalingState, Status

__all__ = ["OracleOptions", "brute_force_marginal_check", "oracle_solve", "sample_feasible"]

MAX_TOTAL_INDICES = 64


@dataclass(frozen=True)
class OracleOptions:
    step_tolerance: float = 1e-20
    gradient_tolerance: float = 1e-11
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.step_tolerance > 0 and self.gradient_tolerance > 0 and self.max_steps > 0):
            raise ValueError("oracle options must all be positive")


def brute_force_marginal_check(posterior, problem: BridgeProblem) -> list[np.ndarray]:
    """Residuals by full enumeration of the index set."""
    posterior = np.asarray(posterior, dtype=float)
    shape = problem.prior.shape
    if posterior.shape != shape:
        raise ShapeError(f"posterior shape {posterior.shape} != problem shape {shape}")
    k = len(shape)
    sums = [[0.0] * shape[ell] for ell in range(k)]
    for idx in itertools.product(*(range(n) for n in shape)):
        value = float(posterior[idx])
        for ell in range(k):
            sums[ell][idx[ell]] += int(problem.templates[ell][idx]) * value
    out = []
    for ell in range(k):
        skip = set(problem.options.unconstrained_for(ell))
        out.append(np.array([
            0.0 if t in skip else sums[ell][t] - float(problem.marginals[ell][t])
            for t in range(shape[ell])
        ]))
    return out


class _Dual:
    """Dual function over a flat vector of the constrained multipliers."""

    def __init__(self, problem: BridgeProblem):
        shape = problem.prior.shape
        k = len(shape)
        self.shape = shape
        self.k = k
        self.slots = {}  # (mode, index) -> position in the flat multiplier vector
        for ell in range(k):
            skip = set(problem.options.unconstrained_for(ell))
            for t in range(shape[ell]):
                if t not in skip:
                    self.slots[(ell, t)] = len(self.slots)
        self.targets = np.zeros(len(self.slots))
        for (ell, t), pos in self.slots.items():
            self.targets[pos] = float(problem.marginals[ell][t])
        # active entries: (index tuple, prior value, [(slot or None, sign), ...])
        scale = float(np.exp(-1.0)) if problem.options.entropy == "standard" else 1.0
        self.entries = []
        for idx in itertools.product(*(range(n) for n in shape)):
            qv = float(problem.prior[idx]) * scale
            signs = [int(problem.templates[ell][idx]) for ell in range(k)]
            if qv > 0 and all(signs):
                self.entries.append((idx, qv, [(self.slots.get((ell, idx[ell])), signs[ell]) for ell in range(k)]))
        self.rows = np.array([[s for _, s in links] for _, _, links in self.entries], dtype=float).reshape(len(self.entries), k)
        self.cols = [[slot for slot, _ in links] for _, _, links in self.entries]
        self.q = np.array([qv for _, qv, _ in self.entries])

    def entry_values(self, mu):
        exps = np.empty(len(self.entries))
        for e, links in enumerate(self.cols):
            s = 0.0
            for ell, slot in enumerate(links):
                if slot is not None:
                    s += mu[slot] * self.rows[e, ell]
            exps[e] = -s
        return self.q * np.exp(exps)

    def value_and_grad(self, mu):
        vals = self.entry_values(mu)
        h = -float(vals.sum()) - float(mu @ self.targets)
        grad = -self.targets.copy()
        for e, links in enumerate(self.cols):
            for ell, slot in enumerate(links):
                if slot is not None:
                    grad[slot] += self.rows[e, ell] * vals[e]
        return h, grad, vals

    def dense(self, vals):
        out = np.zeros(self.shape)
        for (idx, _, _), v in zip(self.entries, vals):
            out[idx] = v
        return out

    def factors(self, mu):
        factors = [np.ones(n) for n in self.shape]
        for (ell, t), pos in self.slots.items():
            factors[ell][t] = np.exp(-mu[pos])
        return ScalingState(tuple(factors))


def oracle_solve(problem: BridgeProblem, options: OracleOptions | None = None) -> BridgeSolution:
    """Maximize the dual by gradient ascent; desk-scale problems only.

    Step lengths start from a Barzilai-Borwein estimate and are halved until
    the ascent condition holds.

    Raises
    ------
    OracleFailed
        If the gradient tolerance is not reached within ``max_steps`` or the
        line search collapses below ``step_tolerance``.
    """
    opts = options or OracleOptions()
    require_valid(problem)
    if sum(problem.prior.shape) > MAX_TOTAL_INDICES:
        raise ValueError(f"oracle is limited to sum(shape) <= {MAX_TOTAL_INDICES}")
    dual = _Dual(problem)
    mu = np.zeros(len(dual.slots))
    h, g, vals = dual.value_and_grad(mu)
    step = 1.0 / max(1.0, float(np.abs(dual.q).sum()))
    prev = None
    for it in range(1, opts.max_steps + 1):
        gnorm = float(np.max(np.abs(g), initial=0.0))
        if gnorm <= opts.gradient_tolerance:
            return BridgeSolution(
                dual.dense(vals), dual.factors(mu), it - 1, _mode_maxima(dual, g), Status.CONVERGED
            )
        if prev is not None:
            dmu, dg = mu - prev[0], g - prev[1]
            curv = -float(dmu @ dg)
            if curv > 0:
                step = float(dmu @ dmu) / curv
        t = step
        g2 = float(g @ g)
        while True:
            cand = mu + t * g
            h_new, g_new, vals_new = dual.value_and_grad(cand)
            if h_new >= h + 1e-4 * t * g2:
                break
            # below floating resolution of h, accept any step that shrinks the gradient
            if h_new >= h - 1e-14 * (1.0 + abs(h)) and float(g_new @ g_new) < g2:
                break
            t *= 0.5
            if t < opts.step_tolerance:
                raise OracleFailed(f"line search collapsed at step {it} (gradient {gnorm:.3e})")
        prev = (mu, g)
        mu, h, g, vals = cand, h_new, g_new, vals_new
    raise OracleFailed(f"no convergence in {opts.max_steps} steps (gradient {float(np.max(np.abs(g))):.3e})")


def _mode_maxima(dual: _Dual, g) -> list[float]:
    out = [0.0] * dual.k
    for (ell, _), pos in dual.slots.items():
        out[ell] = max(out[ell], abs(float(g[pos])))
    return out


def sample_feasible(problem: BridgeProblem, center, rng, count: int = 1, max_scale: float = 0.5):
    """Random feasible points near ``center`` (itself assumed feasible and positive).

    Perturbations are projected onto the null space of the linear marginal
    constraints and shrunk so every active entry stays positive.
    """
    center = np.asarray(center, dtype=float)
    dual = _Dual(problem)
    n_entries = len(dual.entries)
    A = np.zeros((len(dual.slots), n_entries))
    for e, links in enumerate(dual.cols):
        for ell, slot in enumerate(links):
            if slot is not None:
                A[slot, e] += dual.rows[e, ell]
    _, sing, vt = np.linalg.svd(A)
    rank = int(np.sum(sing > 1e-10 * max(1.0, sing.max(initial=0.0))))
    null = vt[rank:]
    base = np.array([center[idx] for idx, _, _ in dual.entries])
    if np.any(base <= 0):
        raise ValueError("center must be positive on the active support")
    samples = []
    for _ in range(count):
        if null.shape[0] == 0:
            samples.append(center.copy())
            continue
        d = rng.standard_normal(null.shape[0]) @ null
        neg = d < 0
        limit = np.min(base[neg] / -d[neg]) if neg.any() else np.inf
        scale = min(max_scale * limit, 1.0 / max(np.abs(d).max(), 1e-300)) * rng.uniform(0.1, 1.0)
        samples.append(dual.dense(base + scale * d))
    return samples
