"""Pseudo-label refinement: per-class clipping followed by weighted projection."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, asdict
from typing import Any

import numpy as np

from .errors import InvalidInput
from .solver import NEWTON_MAX_ITER, NEWTON_TOL, OUTER_TOL, ProjectionProblem, SolveReport, solve
from .types import (
    DEFAULT_ENTROPY_FLOOR,
    MARGINAL_REL_TOL,
    ClassMarginals,
    PseudoLabelMatrix,
    entropy_weights,
)

logger = logging.getLogger(__name__)

WEIGHT_MODES = ("entropy", "uniform", "external")


@dataclass(frozen=True)
class DarpConfig:
    delta: float = 2.0
    iters: int = 10
    newton_tol: float = NEWTON_TOL
    newton_max_iter: int = NEWTON_MAX_ITER
    outer_tol: float = OUTER_TOL
    entropy_floor: float = DEFAULT_ENTROPY_FLOOR
    weight_mode: str = "entropy"
    early_stop: bool = False

    def __post_init__(self) -> None:
        if not self.delta > 0.0:
            raise InvalidInput("delta must be positive (math.inf disables clipping)")
        if self.iters < 1:
            raise InvalidInput("iters must be >= 1")
        if self.weight_mode not in WEIGHT_MODES:
            raise InvalidInput(f"weight_mode must be one of {WEIGHT_MODES}")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["delta"] = "inf" if math.isinf(self.delta) else self.delta
        return d


def kept_count(mass: float, delta: float, num_samples: int) -> int:
    """Number of entries class ``k`` keeps: ``floor(delta * M_k)``, within [1, M]."""
    if mass <= 0.0:
        return 0
    if math.isinf(delta):
        return num_samples
    return min(num_samples, max(1, math.floor(delta * mass)))


def clip_small_entries(
    labels: Any, marginals: Any, delta: float
) -> tuple[PseudoLabelMatrix, list[np.ndarray]]:
    """Zero every entry outside its class's top ``floor(delta * M_k)`` samples.

    Ties go to the smaller sample index.  Rows are not renormalized, except
    that a row losing all of its entries gets its original values back.
    Returns the clipped matrix and, per class, the sorted kept indices.
    """
    y = np.asarray(labels, dtype=np.float64)
    mass = np.asarray(marginals, dtype=np.float64)
    n, k = y.shape
    if mass.shape != (k,):
        raise InvalidInput(f"{k} classes in labels but {mass.shape[0]} marginals")
    keep = np.zeros_like(y, dtype=bool)
    kept: list[np.ndarray] = []
    for j in range(k):
        count = kept_count(float(mass[j]), delta, n)
        order = np.argsort(-y[:, j], kind="stable")
        idx = np.sort(order[:count])
        keep[idx, j] = True
        kept.append(idx)
    clipped = np.where(keep, y, 0.0)
    dead = np.flatnonzero(~np.any(clipped > 0.0, axis=1))
    if dead.size:
        logger.warning("restoring %d rows emptied by clipping", dead.size)
        clipped[dead] = y[dead]
    return PseudoLabelMatrix(clipped, clipped=True), kept


def mismatch(refined: Any, marginals: Any) -> float:
    """Mean absolute gap ``(1/M) * sum_k |colsum_k - M_k|``."""
    y = np.asarray(refined, dtype=np.float64)
    mass = np.asarray(marginals, dtype=np.float64)
    if mass.shape != (y.shape[1],):
        raise InvalidInput("marginals length must equal the number of classes")
    return float(np.abs(y.sum(axis=0) - mass).sum() / y.shape[0])


def _weights_for(labels: np.ndarray, config: DarpConfig, weights: Any | None) -> np.ndarray:
    if config.weight_mode == "external":
        if weights is None:
            raise InvalidInput("weight_mode='external' needs explicit weights")
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape != (labels.shape[0],) or np.any(~(w > 0.0)) or not np.all(np.isfinite(w)):
            raise InvalidInput("external weights must be M positive finite values")
        return w
    if config.weight_mode == "uniform":
        return np.ones(labels.shape[0])
    return entropy_weights(labels, config.entropy_floor).weights


def darp(
    labels: Any,
    marginals: Any,
    config: DarpConfig | None = None,
    weights: Any | None = None,
) -> tuple[PseudoLabelMatrix, SolveReport]:
    """Refine pseudo-labels so their class totals match ``marginals``.

    Weights come from the unclipped labels.  Marginals whose total differs
    from the number of rows are rescaled to it with a ``RuntimeWarning``.
    """
    config = config or DarpConfig()
    y = PseudoLabelMatrix(np.asarray(labels, dtype=np.float64)).values
    n, k = y.shape
    mass = np.asarray(marginals, dtype=np.float64).ravel()
    target = ClassMarginals(mass)
    if mass.shape != (k,):
        raise InvalidInput(f"{k} classes in labels but {mass.shape[0]} marginals")
    if abs(target.total - n) > MARGINAL_REL_TOL * n:
        warnings.warn(
            f"marginals sum to {target.total:.6g}, not M={n}; rescaling to M",
            RuntimeWarning,
            stacklevel=2,
        )
        target = target.normalized_to(n)
    c = np.array(target.mass)
    c *= n / c.sum()

    w = _weights_for(y, config, weights)
    clipped, _ = clip_small_entries(y, c, config.delta)
    problem = ProjectionProblem(clipped.values, np.ones(n), c, w)
    report = solve(
        problem,
        iters=config.iters,
        tol=config.outer_tol,
        newton_tol=config.newton_tol,
        newton_max_iter=config.newton_max_iter,
        early_stop=config.early_stop,
    )
    refined = np.clip(report.solution, 0.0, 1.0)
    return PseudoLabelMatrix(refined), report
