"""Residuals, convergence traces, linear-rate fits and fixture checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import RateUndefined
from .problem import BridgeProblem, check_problem_shapes
from .tensor import signed_marginal

__all__ = [
    "ConvergenceTrace",
    "FixtureReport",
    "RateEstimate",
    "TraceRow",
    "estimate_rate",
    "residuals",
    "validate_fixture",
]


class TraceRow(NamedTuple):
    sweep: int
    mode: int
    residual_inf: float
    residual_l2: float
    dual_value: float


@dataclass
class ConvergenceTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, sweep, mode, residual_inf, residual_l2, dual_value):
        self.rows.append(TraceRow(int(sweep), int(mode), float(residual_inf), float(residual_l2), float(dual_value)))

    def for_mode(self, mode: int) -> list[TraceRow]:
        return [r for r in self.rows if r.mode == mode]

    @property
    def dual_values(self) -> np.ndarray:
        return np.array([r.dual_value for r in self.rows])

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class RateEstimate:
    slope: float
    intercept: float
    r_squared: float
    burn_in: int

    @property
    def contraction(self) -> float:
        """Per-sweep residual contraction factor ``exp(slope)``."""
        return float(np.exp(self.slope))


def residuals(posterior, problem: BridgeProblem) -> list[np.ndarray]:
    """Per-mode ``signed_marginal(P, X_l, l) - p_l``; unconstrained indices read 0."""
    posterior = check_problem_shapes(problem, posterior)
    out = []
    for ell, tpl in enumerate(problem.templates):
        r = signed_marginal(posterior, tpl, ell) - problem.marginals[ell]
        out.append(np.where(problem.constrained_mask(ell), r, 0.0))
    return out


def estimate_rate(trace: ConvergenceTrace, mode: int, burn_in: int = 5, norm: str = "inf") -> RateEstimate:
    """Least-squares line through ``log(residual)`` against sweep index.

    The first ``burn_in`` rows recorded for ``mode`` are discarded. ``norm``
    selects the ``residual_inf`` or ``residual_l2`` column.
    """
    if norm not in ("inf", "l2"):
        raise ValueError("norm must be 'inf' or 'l2'")
    rows = trace.for_mode(mode)
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    if len(rows) < burn_in + 3:
        raise ValueError(f"mode {mode}: {len(rows)} trace rows, need at least burn_in + 3 = {burn_in + 3}")
    window = rows[burn_in:]
    x = np.array([r.sweep for r in window], dtype=float)
    y = np.array([r.residual_inf if norm == "inf" else r.residual_l2 for r in window])
    if np.any(y == 0):
        raise RateUndefined(f"mode {mode}: residual is exactly zero inside the fit window")
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise ValueError("residuals must be positive and finite")
    logy = np.log(y)
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, logy, rcond=None)
    fitted = design @ np.array([slope, intercept])
    ss_res = float(np.sum((logy - fitted) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return RateEstimate(float(slope), float(intercept), r2, burn_in)


@dataclass
class FixtureReport:
    tolerance: float
    residuals: list[np.ndarray]
    passed_mask: list[np.ndarray]

    @property
    def passed(self) -> bool:
        return all(bool(m.all()) for m in self.passed_mask)

    @property
    def failures(self) -> list[tuple[int, int, float]]:
        """``(mode, index, residual)`` for every failing constrained index."""
        out = []
        for ell, (r, ok) in enumerate(zip(self.residuals, self.passed_mask)):
            for t in np.flatnonzero(~ok):
                out.append((ell, int(t), float(r[t])))
        return out

    def max_residuals(self) -> list[float]:
        return [float(np.max(np.abs(r), initial=0.0)) for r in self.residuals]


def validate_fixture(posterior, problem: BridgeProblem, tolerance: float) -> FixtureReport:
    res = residuals(posterior, problem)
    return FixtureReport(float(tolerance), res, [np.abs(r) <= tolerance for r in res])
