"""Class-distribution estimation by inverting a confusion matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import InvalidInput, MissingClass, SingularConfusion
from .types import ClassMarginals, ConfusionMatrix

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class MarginalEstimate:
    """Sanitized marginals plus what was needed to get there."""

    marginals: ClassMarginals
    raw: np.ndarray
    condition: float

    @property
    def was_clamped(self) -> bool:
        return bool(np.any(self.raw < 0.0))


def build_confusion(probs: Any, truth: Any) -> ConfusionMatrix:
    """Column ``j`` is the mean prediction vector over samples of true class ``j``."""
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(truth).ravel()
    if p.ndim != 2 or p.shape[0] != t.shape[0]:
        raise InvalidInput(f"{t.shape[0]} labels for prediction matrix of shape {p.shape}")
    if not np.issubdtype(t.dtype, np.integer):
        if not np.all(np.equal(np.mod(t, 1), 0)):
            raise InvalidInput("true labels must be integers")
        t = t.astype(np.int64)
    k = p.shape[1]
    if t.size and (t.min() < 0 or t.max() >= k):
        raise InvalidInput(f"true labels must lie in [0, {k})")
    counts = np.bincount(t, minlength=k)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise MissingClass(f"class {int(missing[0])} has no labeled samples")
    sums = np.zeros((k, k))
    np.add.at(sums, t, p)  # sums[j] accumulates rows whose truth is j
    c = (sums / counts[:, None]).T
    # guard against drift from the input rows being stochastic only to 1e-9
    c = c / c.sum(axis=0, keepdims=True)
    return ConfusionMatrix(c)


def aggregate_predictions(probs: Any) -> np.ndarray:
    """Per-class totals of the predicted probabilities."""
    return np.asarray(probs, dtype=np.float64).sum(axis=0)


def estimate_marginals(confusion: Any, aggregated: Any) -> MarginalEstimate:
    """Solve ``C m = totals`` and clamp/renormalize the result to sum to ``sum(totals)``.

    Raises :class:`SingularConfusion` when ``cond(C)`` exceeds 1e12.
    """
    c = np.asarray(confusion, dtype=np.float64)
    totals = np.asarray(aggregated, dtype=np.float64).ravel()
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InvalidInput(f"confusion matrix must be square, got {c.shape}")
    if totals.shape != (c.shape[0],):
        raise InvalidInput(f"{totals.shape[0]} totals for a {c.shape[0]}-class confusion matrix")
    if np.any(totals < 0.0) or totals.sum() <= 0.0:
        raise InvalidInput("aggregated predictions must be nonnegative with positive total")
    cond = float(np.linalg.cond(c))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularConfusion(f"confusion matrix condition number {cond:.3g} exceeds {MAX_CONDITION:g}")
    try:
        raw = np.linalg.solve(c, totals)
    except np.linalg.LinAlgError as exc:
        raise SingularConfusion(str(exc)) from exc
    clamped = np.maximum(raw, 0.0)
    if clamped.sum() <= 0.0:
        raise SingularConfusion("estimated class distribution has no positive mass")
    sanitized = clamped * (totals.sum() / clamped.sum())
    return MarginalEstimate(ClassMarginals(sanitized), raw, cond)
