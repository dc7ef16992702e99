"""Scaling solvers: classical Sinkhorn and the signed-template generalization.

The posterior is parametrized by one positive scaling vector per mode::

    P = Q * prod_l factor_l[i_l] ** X_l[i]        (on the active support)

where ``factor = exp(-multiplier)``.  Updating mode ``l`` at index ``t`` with
the other modes frozen makes that marginal exact: collect the positively and
negatively signed mass ``a`` and ``b`` of the slice and solve
``a*x - b/x = marginal`` for ``x > 0``.  Each such update is an exact block
maximization of the concave dual, so the dual value never decreases.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AbsoluteContinuityError, InfeasibleStructureError, RootDomainError, ShapeError
from .problem import BridgeProblem, SolveOptions, active_mask, forced_zero_mask, require_valid
from .tensor import expand_along, mode_sum

__all__ = [
    "BridgeSolution",
    "ScalingState",
    "Status",
    "classical_sinkhorn",
    "dual_objective",
    "effective_prior",
    "kl_objective",
    "mode_update",
    "posterior_from_state",
    "solve_generalized",
    "solve_scaling_root",
]


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class ScalingState:
    """Per-mode positive scaling vectors (``factor = exp(-multiplier)``)."""

    factors: tuple[np.ndarray, ...]

    @classmethod
    def ones(cls, shape) -> "ScalingState":
        return cls(tuple(np.ones(n) for n in shape))

    @property
    def multipliers(self) -> tuple[np.ndarray, ...]:
        return tuple(-np.log(f) for f in self.factors)

    def replace_mode(self, mode: int, factor: np.ndarray) -> "ScalingState":
        factors = list(self.factors)
        factors[mode] = factor
        return ScalingState(tuple(factors))


@dataclass
class BridgeSolution:
    posterior: np.ndarray
    factors: ScalingState
    iterations_used: int
    final_residuals: list[float]
    status: Status
    trace: object = None  # diagnostics.ConvergenceTrace when recorded
    inactive: list[tuple[int, int]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def solve_scaling_root(a: float, b: float, c: float) -> float:
    """Unique ``x > 0`` with ``a*x - b/x = c``.

    Parameters
    ----------
    a, b : float
        Nonnegative masses of the positively / negatively signed part.
    c : float
        Target marginal value.

    Raises
    ------
    RootDomainError
        If no positive root exists (e.g. ``b = 0`` and ``c <= 0``).

    Notes
    -----
    ``a = b = c = 0`` returns 1 by convention (an inactive multiplier).
    """
    a = float(a)
    b = float(b)
    c = float(c)
    if a < 0 or b < 0 or not (math.isfinite(a) and math.isfinite(b) and math.isfinite(c)):
        raise RootDomainError(f"invalid coefficients a={a!r}, b={b!r}, c={c!r}")
    if a > 0 and b > 0:
        disc = math.sqrt(c * c + 4.0 * a * b)
        # pick the cancellation-free form for each sign of c
        if c >= 0:
            return (c + disc) / (2.0 * a)
        return 2.0 * b / (disc - c)
    if a > 0:
        if c > 0:
            return c / a
        raise RootDomainError(f"a*x = {c!r} has no positive root (a={a!r}, b=0)")
    if b > 0:
        if c < 0:
            return b / -c
        raise RootDomainError(f"-b/x = {c!r} has no positive root (a=0, b={b!r})")
    if c == 0:
        return 1.0
    raise RootDomainError(f"a = b = 0 cannot reach c = {c!r}")


def _signed_powers(shape, templates, state: ScalingState, skip: int | None = None) -> np.ndarray:
    """``prod_l factor_l ** template_l`` over all modes except ``skip``."""
    k = len(shape)
    out = np.ones(shape)
    for ell in range(k):
        if ell == skip:
            continue
        f = expand_along(state.factors[ell], ell, k)
        tpl = templates[ell]
        out = out * np.where(tpl > 0, f, np.where(tpl < 0, 1.0 / f, 1.0))
    return out


def effective_prior(problem: BridgeProblem) -> np.ndarray:
    """Prior for which the shifted objective equals the configured one (``Q/e`` for "standard")."""
    if problem.options.entropy == "standard":
        return problem.prior * math.exp(-1.0)
    return problem.prior


def posterior_from_state(problem: BridgeProblem, state: ScalingState) -> np.ndarray:
    """Assemble ``P = Q * prod factor**sign`` on the active support (0 elsewhere)."""
    active = active_mask(problem.prior, problem.templates)
    kernel = _signed_powers(problem.shape, problem.templates, state)
    return np.where(active, effective_prior(problem) * kernel, 0.0)


def _slice_masses(problem: BridgeProblem, state: ScalingState, mode: int):
    active = active_mask(problem.prior, problem.templates)
    w = np.where(active, effective_prior(problem), 0.0) * _signed_powers(problem.shape, problem.templates, state, skip=mode)
    tpl = problem.templates[mode]
    a = mode_sum(np.where(tpl > 0, w, 0.0), mode)
    b = mode_sum(np.where(tpl < 0, w, 0.0), mode)
    return a, b


def _mode_residual(a, b, factor, target, mask):
    r = a * factor - b / factor - target
    return np.where(mask, r, 0.0)


def mode_update(state: ScalingState, problem: BridgeProblem, mode: int) -> ScalingState:
    """Exactly re-solve every constrained marginal of ``mode``.

    All indices of the mode are updated from the same frozen cross-mode
    factors; unconstrained indices are reset to 1.

    Raises
    ------
    InfeasibleStructureError
        If some index has no positive root (carries ``mode`` and ``index``).
    """
    a, b = _slice_masses(problem, state, mode)
    target = problem.marginals[mode]
    mask = problem.constrained_mask(mode)
    new = np.ones_like(a)
    for t in np.flatnonzero(mask):
        try:
            new[t] = solve_scaling_root(a[t], b[t], target[t])
        except RootDomainError as exc:
            raise InfeasibleStructureError(
                f"mode {mode}, index {t}: {exc}", mode=mode, index=int(t)
            ) from exc
    return state.replace_mode(mode, new)


def residual_vectors(problem: BridgeProblem, posterior: np.ndarray) -> list[np.ndarray]:
    """Per-mode signed marginal minus target, with unconstrained indices zeroed."""
    out = []
    for ell, tpl in enumerate(problem.templates):
        r = mode_sum(posterior * tpl, ell) - problem.marginals[ell]
        out.append(np.where(problem.constrained_mask(ell), r, 0.0))
    return out


def dual_objective(state: ScalingState, problem: BridgeProblem) -> float:
    """Dual value ``-sum(P) - sum_l <multiplier_l, marginal_l>`` over constrained indices."""
    posterior = posterior_from_state(problem, state)
    total = -float(posterior.sum())
    for ell, f in enumerate(state.factors):
        mask = problem.constrained_mask(ell)
        # multiplier = -log(factor)
        total += float(np.sum(np.log(f[mask]) * problem.marginals[ell][mask]))
    return total


def kl_objective(posterior, prior, entropy: str = "shifted") -> float:
    """``sum P (log(P/Q) - 1)`` over the prior support, with ``0 log 0 = 0``.

    ``entropy="standard"`` drops the ``-1`` term.
    """
    p = np.asarray(posterior, dtype=float)
    q = np.asarray(prior, dtype=float)
    if p.shape != q.shape:
        raise ShapeError(f"posterior shape {p.shape} != prior shape {q.shape}")
    if np.any(p < 0):
        raise ValueError("posterior has negative entries")
    if np.any((q <= 0) & (p > 0)):
        raise AbsoluteContinuityError("posterior is positive where the prior is zero")
    pos = p > 0
    shift = 1.0 if entropy == "shifted" else 0.0
    return float(np.sum(p[pos] * (np.log(p[pos] / q[pos]) - shift)))


def _out_of_guard(state: ScalingState, guard: float) -> bool:
    lo = 1.0 / guard
    return any(np.any((f < lo) | (f > guard) | ~np.isfinite(f)) for f in state.factors)


def solve_generalized(problem: BridgeProblem, options: SolveOptions | None = None) -> BridgeSolution:
    """Cyclic block-coordinate ascent over modes ``0, 1, ..., k-1``.

    ``options`` overrides ``problem.options`` when given (the per-mode
    unconstrained lists always come from the problem unless set here).

    Trace rows, when recorded, hold the residual of each mode measured just
    before that mode is re-solved, and the dual value just after.
    """
    from .diagnostics import ConvergenceTrace  # local: diagnostics imports this module

    if options is not None:
        if not options.unconstrained and problem.options.unconstrained:
            options = replace(options, unconstrained=problem.options.unconstrained)
        problem = BridgeProblem(problem.prior, problem.templates, problem.marginals, options)
    require_valid(problem)
    problem = _working_problem(problem)
    opts = problem.options
    k = problem.order
    masks = [problem.constrained_mask(ell) for ell in range(k)]
    state = ScalingState.ones(problem.shape)
    trace = ConvergenceTrace() if opts.record_trace else None

    def max_residuals(st):
        post = posterior_from_state(problem, st)
        return post, [float(np.max(np.abs(r), initial=0.0)) for r in residual_vectors(problem, post)]

    posterior, final = max_residuals(state)
    status = Status.CONVERGED if max(final) <= opts.tolerance else Status.MAX_ITERATIONS
    sweeps = 0
    while status is not Status.CONVERGED and sweeps < opts.max_iterations:
        sweeps += 1
        for ell in range(k):
            if trace is not None:
                a, b = _slice_masses(problem, state, ell)
                r = _mode_residual(a, b, state.factors[ell], problem.marginals[ell], masks[ell])[masks[ell]]
            state = mode_update(state, problem, ell)
            if trace is not None:
                trace.append(
                    sweeps,
                    ell,
                    float(np.max(np.abs(r), initial=0.0)),
                    float(np.linalg.norm(r)),
                    dual_objective(state, problem),
                )
            if _out_of_guard(state, opts.overflow_guard):
                status = Status.DIVERGED
                break
        if status is Status.DIVERGED:
            break
        posterior, final = max_residuals(state)
        if max(final) <= opts.tolerance:
            status = Status.CONVERGED
    if status is Status.DIVERGED:
        posterior, final = max_residuals(state)

    inactive = []
    for ell in range(k):
        a, b = _slice_masses(problem, state, ell)
        for t in np.flatnonzero(masks[ell] & (a == 0) & (b == 0)):
            inactive.append((ell, int(t)))
    return BridgeSolution(posterior, state, sweeps, final, status, trace, inactive)


def _working_problem(problem: BridgeProblem) -> BridgeProblem:
    """Fold the entropy choice and support reduction into the prior."""
    opts = problem.options
    if opts.entropy == "shifted" and not opts.reduce_support:
        return problem
    prior = effective_prior(problem)
    if opts.reduce_support:
        prior = np.where(forced_zero_mask(problem), 0.0, prior)
    working = replace(opts, entropy="shifted", reduce_support=False)
    return BridgeProblem(prior, problem.templates, problem.marginals, working)


def classical_sinkhorn(prior, p, q, options: SolveOptions | None = None) -> BridgeSolution:
    """Alternating row/column scaling of a nonnegative matrix.

    Row sums are matched to ``p`` and column sums to ``q``.

    Raises
    ------
    InfeasibleStructureError
        If a zero row (column) is asked to carry positive mass.
    """
    opts = options or SolveOptions()
    Q = np.asarray(prior, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if Q.ndim != 2 or p.shape != (Q.shape[0],) or q.shape != (Q.shape[1],):
        raise ShapeError(f"prior {Q.shape} incompatible with marginals {p.shape}, {q.shape}")
    if np.any(Q < 0):
        raise ValueError("prior must be nonnegative")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("marginals must be nonnegative")
    row_mass = Q.sum(axis=1)
    col_mass = Q.sum(axis=0)
    for name, mass, target in (("row", row_mass, p), ("column", col_mass, q)):
        bad = np.flatnonzero((mass == 0) & (target > 0))
        if bad.size:
            raise InfeasibleStructureError(f"zero {name} {int(bad[0])} with positive marginal", index=int(bad[0]))
        bad = np.flatnonzero((mass > 0) & (target == 0))
        if bad.size:
            raise InfeasibleStructureError(f"{name} {int(bad[0])} has mass but zero marginal", index=int(bad[0]))

    u = np.ones(Q.shape[0])
    v = np.ones(Q.shape[1])

    def safe_div(target, mass):
        return np.divide(target, mass, out=np.ones_like(target), where=mass > 0)

    def residuals(u, v):
        P = u[:, None] * Q * v[None, :]
        return P, [float(np.max(np.abs(P.sum(axis=1) - p))), float(np.max(np.abs(P.sum(axis=0) - q)))]

    P, final = residuals(u, v)
    status = Status.CONVERGED if max(final) <= opts.tolerance else Status.MAX_ITERATIONS
    sweeps = 0
    while status is not Status.CONVERGED and sweeps < opts.max_iterations:
        sweeps += 1
        u = safe_div(p, Q @ v)
        v = safe_div(q, Q.T @ u)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))) or max(u.max(), v.max(), 1 / u.min(), 1 / v.min()) > opts.overflow_guard:
            status = Status.DIVERGED
            P, final = residuals(u, v)
            break
        P, final = residuals(u, v)
        if max(final) <= opts.tolerance:
            status = Status.CONVERGED
    return BridgeSolution(P, ScalingState((u, v)), sweeps, final, status)
