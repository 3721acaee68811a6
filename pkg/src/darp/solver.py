"""Entropy-weighted I-projection by coordinate ascent on the Lagrangian dual.

Given a nonnegative ``A`` (n x m), row targets ``r``, column targets ``c``
with equal total mass, and positive per-row weights ``w``, find ``X`` that
minimizes::

    sum_ij w_i X_ij log(X_ij / A_ij)   s.t.   X 1 = r,  X^T 1 = c

The optimum has the multiplicative form ``X_ij = A_ij * alpha_i * beta_j**(1/w_i)``.
Row scales ``alpha`` have a closed-form block update; every class scale
``beta_j`` is the root of an increasing power sum, found with a safeguarded
Newton iteration.  All scales are handled through their logarithms.  With all weights equal this reduces to Sinkhorn scaling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import sparse
from scipy.special import logsumexp
from scipy.sparse.csgraph import maximum_flow

from .errors import (
    DegenerateColumn,
    DegenerateRow,
    Infeasible,
    InvalidInput,
    InvalidSupport,
    NonConvergence,
)
from .types import DualState

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 200
OUTER_TOL = 1e-6
PLATEAU_REL = 1e-12
PLATEAU_WINDOW = 4
# column residuals (relative to total mass) below this are rounding, not infeasibility
ROUNDING_RESIDUAL = 1e-9


@dataclass(frozen=True)
class ProjectionProblem:
    """Inputs of a weighted I-projection.

    ``source`` may contain zeros; those entries stay zero in the solution.
    """

    source: np.ndarray
    row_targets: np.ndarray
    col_targets: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.source, dtype=np.float64)
        r = np.array(self.row_targets, dtype=np.float64).ravel()
        c = np.array(self.col_targets, dtype=np.float64).ravel()
        w = np.array(self.weights, dtype=np.float64).ravel()
        if a.ndim != 2:
            raise InvalidInput(f"source must be 2-D, got shape {a.shape}")
        n, m = a.shape
        if r.shape != (n,) or w.shape != (n,) or c.shape != (m,):
            raise InvalidInput(
                f"shape mismatch: source {a.shape}, rows {r.shape}, cols {c.shape}, weights {w.shape}"
            )
        for name, arr in (("source", a), ("row targets", r), ("column targets", c), ("weights", w)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInput(f"{name} contain non-finite values")
        if np.any(a < 0.0) or np.any(c < 0.0):
            raise InvalidInput("source and column targets must be nonnegative")
        if np.any(r <= 0.0):
            raise InvalidInput("row targets must be positive")
        if np.any(w <= 0.0):
            raise InvalidInput("weights must be positive")
        rs, cs = r.sum(), c.sum()
        if abs(rs - cs) > 1e-9 * max(rs, cs):
            raise InvalidInput(f"row mass {float(rs):.12g} differs from column mass {float(cs):.12g}")
        empty_rows = np.flatnonzero(~np.any(a > 0.0, axis=1))
        if empty_rows.size:
            raise DegenerateRow(f"row {int(empty_rows[0])} of the source has no positive entry")
        empty_cols = np.flatnonzero((c > 0.0) & ~np.any(a > 0.0, axis=0))
        if empty_cols.size:
            raise DegenerateColumn(
                f"column {int(empty_cols[0])} has target {float(c[empty_cols[0]]):.12g} but no positive entry"
            )
        for name, arr in (("source", a), ("row_targets", r), ("col_targets", c), ("weights", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.source.shape

    @property
    def exponents(self) -> np.ndarray:
        return 1.0 / self.weights


@dataclass
class SolveReport:
    solution: np.ndarray
    dual: DualState
    iterations_run: int
    row_residual: float
    col_residual: float
    dual_objective_trace: list[float] = field(default_factory=list)
    converged: bool = False
    beta_history: list[np.ndarray] = field(default_factory=list, repr=False)

    def summary(self) -> dict[str, Any]:
        trace = self.dual_objective_trace
        return {
            "iterations_run": self.iterations_run,
            "row_residual": self.row_residual,
            "col_residual": self.col_residual,
            "converged": self.converged,
            "dual_objective_first": trace[0] if trace else None,
            "dual_objective_last": trace[-1] if trace else None,
            "dual_objective_min_increment": min(np.diff(trace)) if len(trace) > 1 else None,
            "num_updates": max(len(trace) - 1, 0),
        }


def _log_power_sum_roots(
    log_coef: np.ndarray,
    exponents: np.ndarray,
    targets: np.ndarray,
    start: np.ndarray | None = None,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> np.ndarray:
    """Logs ``u_j`` of the roots of ``sum_i exp(log_coef[i, j]) * Z_j**p_i = targets[j]``.

    In ``u = log Z`` the left side becomes ``exp(F(u))`` with
    ``F(u) = logsumexp_i(log_coef[i, j] + p_i u)``, a convex function whose
    slope is a weighted mean of the exponents.  Newton on ``F(u) - log c``
    therefore converges from any start (at most one overshoot, then
    monotone), steps are bounded by ``|F - log c| / min p``, and a single
    term is solved in one step.  A bracket with midpoint bisection guards
    against rounding stalls.  Stops once ``|sum - c| <= tol * max(1, c)``.
    Zero targets give ``-inf``.  Columns are independent of one another.
    """
    lc = np.asarray(log_coef, dtype=np.float64)
    p = np.asarray(exponents, dtype=np.float64)[:, None]
    c = np.asarray(targets, dtype=np.float64)
    k = c.shape[0]
    active = c > 0.0
    with np.errstate(divide="ignore"):
        log_c = np.log(c)

    u = np.zeros(k) if start is None else np.array(start, dtype=np.float64)
    u = np.where(np.isfinite(u), u, 0.0)
    lo = np.full(k, -np.inf)
    hi = np.full(k, np.inf)
    done = ~active
    scale = tol * np.maximum(1.0, c)
    eps = np.finfo(np.float64).eps

    for _ in range(max_iter):
        with np.errstate(invalid="ignore"):
            e = lc + p * u[None, :]
            lse = logsumexp(e, axis=0)
            slope = (p * np.exp(e - lse[None, :])).sum(axis=0)
            gap = lse - log_c
            f = np.where(active, c * np.expm1(gap), 0.0)
        done |= np.abs(f) <= scale
        lo = np.where(~done & (gap < 0.0), np.maximum(lo, u), lo)
        hi = np.where(~done & (gap > 0.0), np.minimum(hi, u), hi)
        width = hi - lo
        done |= np.isfinite(width) & (width <= 4.0 * eps * np.maximum(1.0, np.abs(hi)))
        if done.all():
            # one extra step, kept where it lowers the residual, so results
            # usually land well inside the tolerance
            with np.errstate(invalid="ignore", divide="ignore"):
                cand = u - gap / slope
                e = lc + p * cand[None, :]
                f_new = c * np.expm1(logsumexp(e, axis=0) - log_c)
            better = active & np.isfinite(cand) & (np.abs(f_new) < np.abs(f))
            return np.where(active, np.where(better, cand, u), -np.inf)

        with np.errstate(invalid="ignore", divide="ignore"):
            step = u - gap / slope
        accept = np.isfinite(step) & (step > lo) & (step < hi)
        reach = np.maximum(1.0, np.abs(u))
        with np.errstate(invalid="ignore"):
            fallback = np.where(
                np.isfinite(width),
                0.5 * (lo + hi),
                np.where(np.isfinite(hi), u - reach, u + reach),
            )
        u = np.where(done, u, np.where(accept, step, fallback))

    raise NonConvergence(f"Newton solve did not reach tolerance {tol} in {max_iter} iterations")


def newton_root(
    coeffs: Sequence[tuple[float, float]],
    target: float,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    start: float | None = None,
) -> float:
    """Unique ``Z >= 0`` with ``sum_m a_m * Z**p_m == target``.

    >>> round(newton_root([(1.0, 1.0), (1.0, 0.5)], 6.0), 12)
    4.0
    """
    pairs = np.asarray(coeffs, dtype=np.float64).reshape(-1, 2)
    a, p = pairs[:, 0], pairs[:, 1]
    if np.any(a < 0.0) or np.any(p <= 0.0) or not np.all(np.isfinite(pairs)):
        raise InvalidInput("coefficients must be >= 0 and exponents > 0")
    if target < 0.0:
        raise InvalidInput("target must be nonnegative")
    if target == 0.0:
        return 0.0
    if not np.any(a > 0.0):
        raise InvalidInput("positive target needs at least one positive coefficient")
    u0 = None if start is None or not start > 0.0 else np.array([math.log(start)])
    with np.errstate(divide="ignore"):
        log_a = np.log(a)[:, None]
    u = _log_power_sum_roots(log_a, p, np.array([float(target)]), u0, tol, max_iter)[0]
    return math.exp(u)


def _log_scaled(problem: ProjectionProblem, dual: DualState) -> np.ndarray:
    # log_beta_j / w_i, with -inf for zeroed classes
    with np.errstate(invalid="ignore"):
        return problem.exponents[:, None] * dual.log_beta[None, :]


def implied_solution(problem: ProjectionProblem, dual: DualState) -> np.ndarray:
    """``A_ij * alpha_i * beta_j**(1/w_i)``, evaluated as ``A_ij * exp(log alpha_i + log beta_j / w_i)``."""
    a = problem.source
    with np.errstate(over="ignore", invalid="ignore"):
        x = a * np.exp(dual.log_alpha[:, None] + _log_scaled(problem, dual))
    return np.where(a > 0.0, x, 0.0)


def alpha_update(problem: ProjectionProblem, dual: DualState) -> DualState:
    """Rescale rows so that every row of the implied solution sums to its target."""
    log_denom = logsumexp(_log_scaled(problem, dual), b=problem.source, axis=1)
    bad = np.flatnonzero(~np.isfinite(log_denom))
    if bad.size:
        raise DegenerateRow(f"row {int(bad[0])} has no mass left under the current class scales")
    log_alpha = np.log(problem.row_targets) - log_denom
    return DualState.from_logs(log_alpha, dual.log_beta.copy(), dual.iteration + 1)


def beta_update(
    problem: ProjectionProblem,
    dual: DualState,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> DualState:
    """Solve for each class scale so the implied column sums hit their targets.

    The previous ``beta`` warm-starts every Newton solve.
    """
    a = problem.source
    c = problem.col_targets
    with np.errstate(divide="ignore"):
        log_coef = np.where(a > 0.0, np.log(a) + dual.log_alpha[:, None], -np.inf)
    empty = np.flatnonzero((c > 0.0) & ~np.any(np.isfinite(log_coef), axis=0))
    if empty.size:
        raise DegenerateColumn(f"column {int(empty[0])} has positive target but no mass")
    log_beta = _log_power_sum_roots(log_coef, problem.exponents, c, dual.log_beta, tol, max_iter)
    return DualState.from_logs(dual.log_alpha.copy(), log_beta, dual.iteration + 1)


def dual_objective(problem: ProjectionProblem, dual: DualState) -> float:
    """Lagrangian dual value at the multipliers implied by ``dual``.

    With ``lambda_i = -w_i (1 + ln alpha_i)`` and ``nu_j = -ln beta_j`` the
    dual function becomes::

        g = -sum_ij w_i X_ij + sum_i w_i r_i (1 + ln alpha_i) + sum_j c_j ln beta_j

    where ``X`` is the implied solution.  Classes with ``c_j = 0`` and
    ``beta_j = 0`` contribute nothing.
    """
    w = problem.weights
    r = problem.row_targets
    x = implied_solution(problem, dual)
    # grouped as sum_i w_i (r_i - rowsum_i) + ..., which nearly vanishes
    # right after a row update, and summed exactly so that the trace can
    # be compared at the 1e-12 level on large instances
    slack = w * (r - x.sum(axis=1))
    row_terms = w * r * dual.log_alpha
    c = problem.col_targets
    with np.errstate(divide="ignore", invalid="ignore"):
        col_terms = np.where(c > 0.0, c * dual.log_beta, 0.0)
    return math.fsum(np.concatenate([slack, row_terms, col_terms]))


def primal_objective(problem: ProjectionProblem, candidate: Any) -> float:
    """Weighted KL objective ``sum_ij w_i X_ij ln(X_ij / A_ij)`` with 0 ln 0 = 0."""
    x = np.asarray(candidate, dtype=np.float64)
    a = problem.source
    if x.shape != a.shape:
        raise InvalidInput(f"candidate shape {x.shape} differs from source {a.shape}")
    if np.any(x < 0.0):
        raise InvalidInput("candidate must be nonnegative")
    outside = np.argwhere((x > 0.0) & (a == 0.0))
    if outside.size:
        i, j = outside[0]
        raise InvalidSupport(f"candidate has mass at ({i}, {j}) where the source is zero")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(x > 0.0, x * np.log(x / np.where(a > 0.0, a, 1.0)), 0.0)
    return float((problem.weights[:, None] * terms).sum())


def support_feasible(source: Any, row_targets: Any, col_targets: Any) -> bool:
    """Whether some nonnegative matrix on the support of ``source`` has the given marginals.

    Bipartite max-flow on integer capacities: row targets are scaled and
    rounded down, column targets rounded up, so ``False`` is only returned
    for instances that are infeasible beyond rounding.
    """
    a = np.asarray(source, dtype=np.float64)
    r = np.asarray(row_targets, dtype=np.float64)
    c = np.asarray(col_targets, dtype=np.float64)
    n, m = a.shape
    scale = float(min(2**20, 2**30 // max(1, int(np.ceil(r.sum())))))
    row_cap = np.floor(r * scale).astype(np.int64)
    col_cap = np.ceil(c * scale).astype(np.int64)
    need = int(row_cap.sum())
    rows, cols = np.nonzero(a > 0.0)
    # nodes: 0 source, 1..n rows, n+1..n+m columns, n+m+1 sink
    sink = n + m + 1
    heads = np.concatenate([np.zeros(n, np.int64), rows + 1, n + 1 + np.arange(m)])
    tails = np.concatenate([1 + np.arange(n), n + 1 + cols, np.full(m, sink)])
    caps = np.concatenate([row_cap, np.full(rows.size, need), col_cap])
    graph = sparse.csr_matrix(
        (caps.astype(np.int32), (heads, tails)), shape=(sink + 1, sink + 1)
    )
    return maximum_flow(graph, 0, sink).flow_value >= need


def _plateaued(trace: list[float]) -> bool:
    if len(trace) <= PLATEAU_WINDOW:
        return False
    window = trace[-PLATEAU_WINDOW - 1 :]
    ref = max(1.0, abs(window[-1]))
    return max(window) - min(window) < PLATEAU_REL * ref


def solve(
    problem: ProjectionProblem,
    iters: int = 10,
    tol: float = OUTER_TOL,
    newton_tol: float = NEWTON_TOL,
    newton_max_iter: int = NEWTON_MAX_ITER,
    early_stop: bool = False,
    keep_betas: bool = False,
) -> SolveReport:
    """Run ``iters`` dual coordinate-ascent updates.

    Odd steps (and always the last one) update the row scales, even steps
    the class scales, so the returned solution is exactly row-feasible.
    ``converged`` is set when the largest column residual is at most
    ``tol * sum(c)``.  With ``early_stop`` the loop ends at the first
    row update whose solution already meets that bound.

    Raises :class:`Infeasible` when the run ends unconverged and either the
    dual trace is flat or the support admits no feasible matrix, and when
    the scales leave the floating-point range.
    """
    if iters < 1:
        raise InvalidInput("need at least one iteration")
    n, m = problem.shape
    dual = DualState.initial(n, m)
    trace = [dual_objective(problem, dual)]
    betas: list[np.ndarray] = []
    threshold = tol * problem.col_targets.sum()
    ran = 0
    try:
        for t in range(1, iters + 1):
            if t % 2 == 1 or t == iters:
                dual = alpha_update(problem, dual)
            else:
                dual = beta_update(problem, dual, newton_tol, newton_max_iter)
                if keep_betas:
                    betas.append(dual.beta.copy())
            trace.append(dual_objective(problem, dual))
            ran = t
            active = problem.col_targets > 0.0
            if not (np.all(np.isfinite(dual.log_alpha)) and np.all(np.isfinite(dual.log_beta[active]))):
                raise Infeasible(f"dual scales left the floating-point range at update {t}")
            if early_stop and t % 2 == 1 and t >= 3:
                cols = implied_solution(problem, dual).sum(axis=0)
                if np.max(np.abs(cols - problem.col_targets)) <= threshold:
                    break
    except (DegenerateRow, NonConvergence) as exc:
        raise Infeasible(f"dual iteration broke down: {exc}") from exc

    solution = implied_solution(problem, dual)
    row_res = float(np.max(np.abs(solution.sum(axis=1) - problem.row_targets)))
    col_res = float(np.max(np.abs(solution.sum(axis=0) - problem.col_targets)))
    converged = col_res <= threshold
    if not converged and col_res > ROUNDING_RESIDUAL * max(1.0, threshold / tol) and _plateaued(trace):
        raise Infeasible(
            f"column residual {col_res:.3g} stalled with a flat dual objective; "
            "the support pattern cannot carry the target marginals"
        )
    # an unsupportable target makes the dual unbounded rather than flat
    if (
        not converged
        and np.any(problem.source == 0.0)
        and not support_feasible(problem.source, problem.row_targets, problem.col_targets)
    ):
        raise Infeasible(
            f"column residual {col_res:.3g}: no matrix on the support of the source "
            "matches both marginals"
        )
    if not converged:
        logger.info("stopped after %d updates with column residual %.3g", ran, col_res)
    return SolveReport(
        solution=solution,
        dual=dual,
        iterations_run=ran,
        row_residual=row_res,
        col_residual=col_res,
        dual_objective_trace=trace,
        converged=converged,
        beta_history=betas,
    )
