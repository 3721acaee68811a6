"""Validated value types shared across the package.

All matrices are dense, row-major float64 arrays.  Every type exposes
``__array__`` so it can be handed straight to numpy routines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidInput

ROW_SUM_TOL = 1e-9
MARGINAL_REL_TOL = 1e-6
DEFAULT_ENTROPY_FLOOR = 1e-8


def _frozen_array(values: Any, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise InvalidInput(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Issue:
    """One problem found by :func:`validate_row_stochastic`."""

    row: int
    column: int | None
    kind: str
    value: float

    def __str__(self) -> str:
        if self.kind == "row_sum":
            return f"row {self.row} sums to {self.value:.12g}"
        return f"row {self.row} entry {self.column} {self.kind} ({self.value:.12g})"


def validate_row_stochastic(matrix: Any, tol: float = ROW_SUM_TOL) -> list[Issue]:
    """Report every out-of-range entry and every row whose sum is not 1.

    An empty list means the matrix is a valid row-stochastic matrix.
    """
    values = np.asarray(matrix, dtype=np.float64)
    issues: list[Issue] = []
    finite = np.isfinite(values)
    checks = (
        ("non-finite", ~finite),
        ("negative", finite & (values < 0.0)),
        ("above one", finite & (values > 1.0)),
    )
    for kind, mask in checks:
        for m, k in np.argwhere(mask):
            issues.append(Issue(int(m), int(k), kind, float(values[m, k])))
    sums = values.sum(axis=1)
    for m in np.flatnonzero(~(np.abs(sums - 1.0) <= tol)):
        issues.append(Issue(int(m), None, "row_sum", float(sums[m])))
    issues.sort(key=lambda issue: (issue.row, issue.column is None, issue.column or 0))
    return issues


@dataclass(frozen=True)
class PseudoLabelMatrix:
    """M x K matrix whose rows are per-sample class probability vectors.

    ``clipped=True`` relaxes the row-sum check to ``0 < sum <= 1`` so the
    output of clipping can be carried in the same type.
    """

    values: np.ndarray
    clipped: bool = False

    def __post_init__(self) -> None:
        values = _frozen_array(self.values, 2, "pseudo-label matrix")
        object.__setattr__(self, "values", values)
        m, k = values.shape
        if m < 1 or k < 2:
            raise InvalidInput(f"need M >= 1 and K >= 2, got {m}x{k}")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise InvalidInput("pseudo-label entries must lie in [0, 1]")
        sums = values.sum(axis=1)
        if self.clipped:
            if np.any(sums <= 0.0) or np.any(sums > 1.0 + ROW_SUM_TOL):
                raise InvalidInput("clipped rows must have 0 < sum <= 1")
        elif np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise InvalidInput(f"row {bad} sums to {float(sums[bad]):.12g}, expected 1")

    @property
    def num_samples(self) -> int:
        return self.values.shape[0]

    @property
    def num_classes(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class ClassMarginals:
    """Target class mass per class; may be fractional."""

    mass: np.ndarray

    def __post_init__(self) -> None:
        mass = _frozen_array(self.mass, 1, "class marginals")
        if np.any(mass < 0.0):
            raise InvalidInput("class marginals must be nonnegative")
        if mass.sum() <= 0.0:
            raise InvalidInput("class marginals must have positive total mass")
        object.__setattr__(self, "mass", mass)

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def normalized_to(self, total: float) -> ClassMarginals:
        return ClassMarginals(self.mass * (total / self.total))

    def __array__(self, dtype=None, copy=None):
        return self.mass if dtype is None else self.mass.astype(dtype)


@dataclass(frozen=True)
class ConfidenceWeights:
    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = _frozen_array(self.weights, 1, "confidence weights")
        if np.any(weights <= 0.0):
            raise InvalidInput("confidence weights must be strictly positive")
        object.__setattr__(self, "weights", weights)

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)


@dataclass(frozen=True, eq=False)
class DualState:
    """Row scales ``alpha`` and class scales ``beta`` of the dual iteration.

    The scales are carried in log form as well (``log_alpha``, ``log_beta``)
    and the solver works from the logs only: with strongly confident rows
    (large weights) a class scale can need far more than the double-precision
    exponent range, while its logarithm stays moderate.  ``alpha`` and
    ``beta`` are then the (possibly over- or underflowed) exponentials.
    ``beta`` holds exact zeros (``log_beta = -inf``) for classes with zero
    target mass.
    """

    alpha: np.ndarray
    beta: np.ndarray
    iteration: int = 0
    log_alpha: np.ndarray | None = field(default=None, repr=False)
    log_beta: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        with np.errstate(divide="ignore"):
            for name in ("alpha", "beta"):
                log_name = "log_" + name
                if getattr(self, log_name) is None:
                    values = np.asarray(getattr(self, name), dtype=np.float64)
                    if np.any(values < 0.0) or np.any(np.isnan(values)):
                        raise InvalidInput(f"{name} scales must be nonnegative")
                    object.__setattr__(self, log_name, np.log(values))
                    object.__setattr__(self, name, values)

    @classmethod
    def from_logs(cls, log_alpha: Any, log_beta: Any, iteration: int = 0) -> DualState:
        la = np.asarray(log_alpha, dtype=np.float64)
        lb = np.asarray(log_beta, dtype=np.float64)
        with np.errstate(over="ignore"):
            return cls(np.exp(la), np.exp(lb), iteration, la, lb)

    @classmethod
    def initial(cls, num_rows: int, num_cols: int) -> DualState:
        return cls.from_logs(np.zeros(num_rows), np.zeros(num_cols), 0)

    def multipliers(self, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Lagrange multipliers (row, column) implied by the scales."""
        w = np.asarray(weights, dtype=np.float64)
        return -w * (1.0 + self.log_alpha), -self.log_beta


@dataclass(frozen=True)
class ConfusionMatrix:
    """Column-stochastic K x K matrix, ``values[i, j] = P(predict i | true j)``."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = _frozen_array(self.values, 2, "confusion matrix")
        k, k2 = values.shape
        if k != k2:
            raise InvalidInput(f"confusion matrix must be square, got {values.shape}")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise InvalidInput("confusion entries must lie in [0, 1]")
        sums = values.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise InvalidInput(f"confusion column {bad} sums to {float(sums[bad]):.12g}, expected 1")
        object.__setattr__(self, "values", values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class ImbalanceProfile:
    """Exponentially decaying class sizes with head-to-tail ratio ``ratio``."""

    head_count: int
    ratio: float
    num_classes: int
    reversed: bool = False

    def __post_init__(self) -> None:
        if self.head_count < 1:
            raise InvalidInput("head_count must be >= 1")
        if not self.ratio >= 1.0:
            raise InvalidInput("imbalance ratio must be >= 1")
        if self.num_classes < 2:
            raise InvalidInput("need at least two classes")


def row_entropy(matrix: Any) -> np.ndarray:
    """Natural-log Shannon entropy of each row, with 0 ln 0 = 0."""
    p = np.asarray(matrix, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    # sorted summation makes the result independent of entry order
    return -np.sort(terms, axis=1).sum(axis=1)


def entropy_weights(matrix: Any, floor: float = DEFAULT_ENTROPY_FLOOR) -> ConfidenceWeights:
    """Inverse-entropy confidence weights ``1 / max(H(row), floor)``.

    Confident (low-entropy) rows get large weights; a one-hot row hits the
    floor and receives ``1 / floor``, which effectively freezes it.
    """
    if not floor > 0.0:
        raise InvalidInput("entropy floor must be positive")
    h = row_entropy(matrix)
    return ConfidenceWeights(1.0 / np.maximum(h, floor))

