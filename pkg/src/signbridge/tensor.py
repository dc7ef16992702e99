"""Dense/sparse tensor storage and signed mode marginals.

Tensors are plain row-major ``numpy.ndarray`` objects: priors and posteriors
are float arrays, sign templates are ``int8`` arrays with entries in
``{-1, 0, +1}``.  All indices are zero-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DuplicateEntryError, ModeError, ShapeError

__all__ = [
    "SparseEntry",
    "as_template",
    "check_shape",
    "dense_from_sparse",
    "elementwise_product",
    "expand_along",
    "mode_sum",
    "signed_marginal",
    "sparse_from_dense",
]


@dataclass(frozen=True)
class SparseEntry:
    """One nonzero prior entry together with its per-mode template signs."""

    idx: tuple[int, ...]
    prior_value: float
    signs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "idx", tuple(int(i) for i in self.idx))
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        object.__setattr__(self, "prior_value", float(self.prior_value))
        if len(self.idx) != len(self.signs):
            raise ShapeError(
                f"entry {self.idx}: {len(self.signs)} signs for an order-{len(self.idx)} index"
            )
        if self.prior_value <= 0:
            raise ValueError(f"entry {self.idx}: prior_value must be > 0 in sparse form")
        if any(s not in (-1, 0, 1) for s in self.signs):
            raise ValueError(f"entry {self.idx}: signs must be -1, 0 or +1")


def check_shape(shape: Sequence[int]) -> tuple[int, ...]:
    shape = tuple(int(d) for d in shape)
    if len(shape) < 1 or any(d < 1 for d in shape):
        raise ShapeError(f"invalid shape {shape}: need k >= 1 dimensions, each >= 1")
    return shape


def as_template(signs) -> np.ndarray:
    """Convert ``signs`` to an ``int8`` template, rejecting values outside {-1,0,1}."""
    arr = np.asarray(signs)
    if arr.ndim < 1:
        raise ShapeError("a sign template needs at least one mode")
    if not np.all(np.isin(arr, (-1, 0, 1))):
        raise ValueError("sign template entries must be -1, 0 or +1")
    return arr.astype(np.int8)


def _check_mode(mode: int, order: int) -> int:
    if not 0 <= mode < order:
        raise ModeError(f"mode {mode} out of range for an order-{order} tensor")
    return int(mode)


def mode_sum(t: np.ndarray, mode: int) -> np.ndarray:
    """Sum over every axis except ``mode``."""
    t = np.asarray(t)
    mode = _check_mode(mode, t.ndim)
    axes = tuple(ax for ax in range(t.ndim) if ax != mode)
    return t.sum(axis=axes) if axes else t.copy()


def signed_marginal(t: np.ndarray, s: np.ndarray, mode: int) -> np.ndarray:
    """Signed marginal of ``t`` along ``mode``.

    ``v[i] = sum(s * t)`` over every entry whose ``mode``-th index is ``i``.

    Raises
    ------
    ShapeError
        If ``t`` and ``s`` differ in shape.
    ModeError
        If ``mode`` is not a valid axis.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s)
    if t.shape != s.shape:
        raise ShapeError(f"tensor shape {t.shape} != template shape {s.shape}")
    return mode_sum(t * s, mode)


def elementwise_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def expand_along(vec: np.ndarray, mode: int, order: int) -> np.ndarray:
    """Reshape a 1-D vector so it broadcasts along axis ``mode`` of an order-``order`` array."""
    shape = [1] * order
    shape[mode] = -1
    return np.reshape(vec, shape)


def dense_from_sparse(shape: Sequence[int], entries: Sequence[SparseEntry]):
    """Scatter sparse entries into a dense prior and one template per mode.

    Returns
    -------
    prior : ndarray of float
    templates : list of int8 ndarray, one per mode
    """
    shape = check_shape(shape)
    k = len(shape)
    prior = np.zeros(shape)
    templates = [np.zeros(shape, dtype=np.int8) for _ in range(k)]
    seen = set()
    for e in entries:
        if len(e.idx) != k:
            raise ShapeError(f"entry {e.idx} has order {len(e.idx)}, expected {k}")
        if any(not 0 <= i < d for i, d in zip(e.idx, shape)):
            raise ShapeError(f"entry {e.idx} out of bounds for shape {shape}")
        if e.idx in seen:
            raise DuplicateEntryError(f"duplicate sparse entry at {e.idx}")
        seen.add(e.idx)
        prior[e.idx] = e.prior_value
        for ell in range(k):
            templates[ell][e.idx] = e.signs[ell]
    return prior, templates


def sparse_from_dense(prior: np.ndarray, templates: Sequence[np.ndarray]) -> list[SparseEntry]:
    """Inverse of :func:`dense_from_sparse` on the prior's support (row-major order)."""
    prior = np.asarray(prior, dtype=float)
    for tpl in templates:
        if np.shape(tpl) != prior.shape:
            raise ShapeError("template shape differs from prior shape")
    out = []
    for idx in zip(*np.nonzero(prior)):
        idx = tuple(int(i) for i in idx)
        out.append(SparseEntry(idx, float(prior[idx]), tuple(int(t[idx]) for t in templates)))
    return out
