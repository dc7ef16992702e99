"""Problem instances: options, structural validation, sign partition, random feasible draws."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import GenerationError, ProblemValidationError, ShapeError
from .tensor import check_shape, mode_sum, signed_marginal

__all__ = [
    "BridgeProblem",
    "SignPartition",
    "SolveOptions",
    "ValidationReport",
    "active_mask",
    "forced_zero_mask",
    "generate_feasible",
    "partition",
    "validate",
]


@dataclass(frozen=True)
class SolveOptions:
    """Knobs for the scaling solvers.

    ``unconstrained`` holds, per mode, the indices whose marginal constraint is
    dropped (virtual nodes).  An empty tuple means every index is constrained.

    ``entropy`` selects the objective: ``"shifted"`` minimizes
    ``sum P (log(P/Q) - 1)``; ``"standard"`` minimizes ``sum P log(P/Q)``,
    which is the shifted objective for the prior ``Q / e``.

    ``reduce_support`` drops, before iterating, prior entries that are zero in
    every feasible point (see :func:`forced_zero_mask`).  Without it such
    instances converge only sublinearly.
    """

    tolerance: float = 1e-9
    max_iterations: int = 10_000
    overflow_guard: float = 1e150
    record_trace: bool = False
    unconstrained: tuple[tuple[int, ...], ...] = ()
    entropy: str = "shifted"
    reduce_support: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.overflow_guard > 1:
            raise ValueError("overflow_guard must be > 1")
        if self.entropy not in ("shifted", "standard"):
            raise ValueError("entropy must be 'shifted' or 'standard'")
        object.__setattr__(
            self, "unconstrained", tuple(tuple(sorted({int(i) for i in m})) for m in self.unconstrained)
        )

    def unconstrained_for(self, mode: int) -> tuple[int, ...]:
        return self.unconstrained[mode] if mode < len(self.unconstrained) else ()


@dataclass(frozen=True, eq=False)
class BridgeProblem:
    """Prior, one sign template and one target marginal per mode, plus options."""

    prior: np.ndarray
    templates: tuple[np.ndarray, ...]
    marginals: tuple[np.ndarray, ...]
    options: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        prior = np.array(self.prior, dtype=float)
        templates = tuple(np.array(t).astype(np.int8) for t in self.templates)
        marginals = tuple(np.array(m, dtype=float).reshape(-1) for m in self.marginals)
        for arr in (prior, *templates, *marginals):
            arr.setflags(write=False)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "templates", templates)
        object.__setattr__(self, "marginals", marginals)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.prior.shape

    @property
    def order(self) -> int:
        return self.prior.ndim

    def constrained_mask(self, mode: int) -> np.ndarray:
        """Boolean vector over the indices of ``mode``; False marks a dropped constraint."""
        mask = np.ones(self.shape[mode], dtype=bool)
        for i in self.options.unconstrained_for(mode):
            if 0 <= i < self.shape[mode]:
                mask[i] = False
        return mask

    def with_options(self, **changes) -> "BridgeProblem":
        return replace(self, options=replace(self.options, **changes))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_invalid(self):
        if self.violations:
            raise ProblemValidationError(self.violations)

    def __bool__(self):
        return self.ok


def active_mask(prior: np.ndarray, templates: Sequence[np.ndarray]) -> np.ndarray:
    """Entries with positive prior whose templates are all nonzero."""
    mask = np.asarray(prior) > 0
    for t in templates:
        mask &= np.asarray(t) != 0
    return mask


def validate(problem: BridgeProblem) -> ValidationReport:
    """Check structural well-formedness.

    An empty report does not certify feasibility: only shapes, sign domains,
    full/empty activity of every prior entry and per-slice solvability of the
    scaling update are checked.
    """
    report = ValidationReport()
    v = report.violations
    prior = problem.prior
    k = prior.ndim
    if k < 1 or prior.size == 0:
        v.append(f"prior: invalid shape {prior.shape}")
        return report
    if not np.all(np.isfinite(prior)):
        v.append("prior: non-finite entries")
    if np.any(prior < 0):
        v.append(f"prior: {int(np.sum(prior < 0))} negative entries")
    if len(problem.templates) != k:
        v.append(f"templates: expected {k}, got {len(problem.templates)}")
    if len(problem.marginals) != k:
        v.append(f"marginals: expected {k}, got {len(problem.marginals)}")
    if len(problem.options.unconstrained) > k:
        v.append(f"unconstrained: {len(problem.options.unconstrained)} mode lists for order {k}")
    for ell, idxs in enumerate(problem.options.unconstrained[:k]):
        bad = [i for i in idxs if not 0 <= i < prior.shape[ell]]
        if bad:
            v.append(f"unconstrained[{ell}]: indices {bad} out of range")
    if v:
        return report

    templates_ok = True
    for ell, tpl in enumerate(problem.templates):
        if tpl.shape != prior.shape:
            v.append(f"templates[{ell}]: shape {tpl.shape} != prior shape {prior.shape}")
            templates_ok = False
        elif not np.all(np.isin(tpl, (-1, 0, 1))):
            v.append(f"templates[{ell}]: template entry outside {{-1, 0, 1}}")
            templates_ok = False
    for ell, m in enumerate(problem.marginals):
        if m.shape != (prior.shape[ell],):
            v.append(f"marginals[{ell}]: length {m.size} != shape[{ell}] = {prior.shape[ell]}")
        elif not np.all(np.isfinite(m)):
            v.append(f"marginals[{ell}]: non-finite values")
    if v or not templates_ok:
        return report

    support = prior > 0
    nonzero = np.stack([tpl != 0 for tpl in problem.templates])
    n_active = nonzero.sum(axis=0)
    mixed = support & (n_active > 0) & (n_active < k)
    if np.any(mixed):
        first = tuple(int(i) for i in np.argwhere(mixed)[0])
        v.append(f"partially active entry: {int(mixed.sum())} prior entries (first at {first}) have some but not all template signs zero")

    active = active_mask(prior, problem.templates)
    for ell, tpl in enumerate(problem.templates):
        has_pos = mode_sum(active & (tpl > 0), ell) > 0
        has_neg = mode_sum(active & (tpl < 0), ell) > 0
        target = problem.marginals[ell]
        constrained = problem.constrained_mask(ell)
        for t in np.flatnonzero(constrained):
            c = target[t]
            if has_pos[t] and has_neg[t]:
                continue
            if has_pos[t] and not c > 0:
                v.append(f"marginals[{ell}][{t}] = {c!r}: slice has only positive signs, needs a value > 0")
            elif has_neg[t] and not c < 0:
                v.append(f"marginals[{ell}][{t}] = {c!r}: slice has only negative signs, needs a value < 0")
            elif not (has_pos[t] or has_neg[t]) and c != 0:
                v.append(f"marginals[{ell}][{t}] = {c!r}: slice has no active entries, needs 0")
    return report


@dataclass(frozen=True)
class SignPartition:
    """Prior split by the (X, Y) sign pair of a two-template matrix problem."""

    q_pp: np.ndarray
    q_pm: np.ndarray
    q_mp: np.ndarray
    q_mm: np.ndarray

    def total(self) -> np.ndarray:
        return self.q_pp + self.q_pm + self.q_mp + self.q_mm


def partition(prior, templates):
    """Split the active prior by template signs.

    For two templates, returns a :class:`SignPartition`. For higher order,
    returns one ``(positive_mask, negative_mask)`` pair per mode, each
    restricted to the active support.
    """
    prior = np.asarray(prior, dtype=float)
    active = active_mask(prior, templates)
    if len(templates) == 2:
        x, y = (np.asarray(t) for t in templates)
        q = np.where(active, prior, 0.0)
        return SignPartition(
            q_pp=np.where((x > 0) & (y > 0), q, 0.0),
            q_pm=np.where((x > 0) & (y < 0), q, 0.0),
            q_mp=np.where((x < 0) & (y > 0), q, 0.0),
            q_mm=np.where((x < 0) & (y < 0), q, 0.0),
        )
    return [(active & (np.asarray(t) > 0), active & (np.asarray(t) < 0)) for t in templates]


def generate_feasible(
    shape: Sequence[int],
    density: float = 1.0,
    negative_fraction: float | Sequence[float] = 0.0,
    seed: int = 0,
    *,
    options: SolveOptions | None = None,
    max_retries: int = 100,
    return_witness: bool = False,
):
    """Draw a random problem that is feasible by construction.

    A hidden positive tensor is drawn on a random support and the marginals
    are its signed sums, so the hidden tensor is a feasible point.  The prior
    is an independent log-normal perturbation of it on the same support.

    If ``return_witness`` is true, returns ``(problem, witness)``.
    """
    shape = check_shape(shape)
    k = len(shape)
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    neg = np.broadcast_to(np.asarray(negative_fraction, dtype=float), (k,))
    if np.any((neg < 0) | (neg > 1)):
        raise ValueError("negative_fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        support = rng.random(shape) < density
        if support.any():
            break
    else:
        raise GenerationError(f"empty support after {max_retries} draws (density={density})")

    witness = np.where(support, rng.uniform(0.5, 1.5, size=shape), 0.0)
    templates = []
    for ell in range(k):
        signs = np.where(rng.random(shape) < neg[ell], -1, 1)
        templates.append(np.where(support, signs, 0).astype(np.int8))
    prior = np.where(support, witness * np.exp(rng.normal(0.0, 0.5, size=shape)), 0.0)
    marginals = [signed_marginal(witness, templates[ell], ell) for ell in range(k)]
    problem = BridgeProblem(prior, tuple(templates), tuple(marginals), options or SolveOptions())
    if return_witness:
        return problem, witness
    return problem


def forced_zero_mask(problem: BridgeProblem) -> np.ndarray:
    """Active entries that vanish in every point satisfying the marginal constraints.

    Repeatedly solves ``max sum t_e`` subject to the signed marginal
    equalities, ``P >= 0`` and ``0 <= t_e <= min(P_e, 1)`` over the entries
    not yet seen positive; an optimum of zero proves the rest are forced to 0.
    Returns an all-False mask when the constraints are infeasible.
    """
    from scipy.optimize import linprog

    active = active_mask(problem.prior, problem.templates)
    entries = [tuple(int(i) for i in idx) for idx in np.argwhere(active)]
    m = len(entries)
    forced = np.zeros(problem.shape, dtype=bool)
    if m == 0:
        return forced
    rows, rhs = [], []
    for ell, tpl in enumerate(problem.templates):
        mask = problem.constrained_mask(ell)
        for t in np.flatnonzero(mask):
            row = np.zeros(m)
            for e, idx in enumerate(entries):
                if idx[ell] == t:
                    row[e] = tpl[idx]
            rows.append(row)
            rhs.append(problem.marginals[ell][t])
    A = np.array(rows).reshape(len(rows), m)
    b = np.array(rhs)
    unresolved = np.ones(m, dtype=bool)
    while unresolved.any():
        u = np.flatnonzero(unresolved)
        nu = u.size
        # variables: [P (m), t (nu)]
        c = np.concatenate([np.zeros(m), -np.ones(nu)])
        a_eq = np.hstack([A, np.zeros((A.shape[0], nu))])
        a_ub = np.zeros((nu, m + nu))
        a_ub[np.arange(nu), u] = -1.0
        a_ub[np.arange(nu), m + np.arange(nu)] = 1.0
        bounds = [(0, None)] * m + [(0, 1)] * nu
        res = linprog(c, A_ub=a_ub, b_ub=np.zeros(nu), A_eq=a_eq, b_eq=b, bounds=bounds, method="highs")
        if res.status != 0:
            return np.zeros(problem.shape, dtype=bool)
        positive = res.x[m:] > 1e-9
        if not positive.any():
            for e in u:
                forced[entries[e]] = True
            break
        unresolved[u[positive]] = False
    return forced


def require_valid(problem: BridgeProblem) -> BridgeProblem:
    validate(problem).raise_if_invalid()
    return problem


def check_problem_shapes(problem: BridgeProblem, posterior) -> np.ndarray:
    posterior = np.asarray(posterior, dtype=float)
    if posterior.shape != problem.shape:
        raise ShapeError(f"posterior shape {posterior.shape} != problem shape {problem.shape}")
    return posterior
