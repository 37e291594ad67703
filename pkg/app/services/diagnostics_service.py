"""Cook's D_I for joint outliers in linear regression.

For a deletion set I of r observations (Z = deleted rows, X = retained rows)
the statistic D_I = ||X (beta_I - beta)||^2 / (r s_I^2) follows a generalized F
law whose weights are the canonical leverages, the eigenvalues of
Z (X0'X0)^-1 Z', with unit dofs and nu = N - r - k.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import DomainError, LeverageError
from app.core.logging import logger, tracer
from app.models.domain import RegressionData
from app.models.schemas import SubsetReport
from app.numerics.linalg import FloatArray, cholesky, least_squares, solve_lower, sym_eigenvalues
from app.numerics.specialfn import reg_inc_beta
from app.services.distribution_service import new_generalized_f, stochastic_bounds, survival

_LEVERAGE_ONE = 1e-12


class _DeletionContext:
    """Full-data quantities shared by every deletion subset of one dataset."""

    def __init__(self, data: RegressionData) -> None:
        self.data = data
        self.x = data.conditioned
        self.y = data.y0
        self.lower = cholesky(self.x.T @ self.x)
        self.beta, self.rss = least_squares(self.x, self.y)

    def indices(self, subset: Iterable[int]) -> np.ndarray:
        labels = sorted(int(label) for label in subset)
        if not labels:
            raise DomainError("deletion subset must not be empty")
        if len(set(labels)) != len(labels):
            raise DomainError(f"deletion subset has repeated labels: {labels}")
        if labels[0] < 1 or labels[-1] > self.data.n:
            raise DomainError(f"labels must lie in 1..{self.data.n}, got {labels}")
        return np.asarray(labels, dtype=int) - 1

    def leverages(self, idx: np.ndarray) -> FloatArray:
        half = solve_lower(self.lower, self.x[idx].T)
        values = sym_eigenvalues(half.T @ half)
        if values[0] >= 1.0 - _LEVERAGE_ONE:
            raise LeverageError(
                f"leverage {values[0]:.6g} of rows {list(idx + 1)} is 1; the deleted fit is undefined"
            )
        if values[-1] <= 0.0:
            raise LeverageError(f"rows {list(idx + 1)} are linearly dependent")
        return values

    def cook(self, idx: np.ndarray) -> tuple[float, int]:
        r = len(idx)
        if r >= self.data.k:
            raise DomainError(f"deletion subset size r={r} must be smaller than k={self.data.k}")
        nu = self.data.n - r - self.data.k
        if nu < 1:
            raise DomainError(f"N - r - k must be at least 1, got {nu}")
        keep = np.ones(self.data.n, dtype=bool)
        keep[idx] = False
        beta_del, rss_del = least_squares(self.x[keep], self.y[keep])
        s2 = rss_del / nu
        if not s2 > 0.0:
            raise DomainError(f"retained fit without rows {list(idx + 1)} is exact; D_I undefined")
        shift = self.x[keep] @ (beta_del - self.beta)
        return float(shift @ shift) / (r * s2), nu

    def report(self, idx: np.ndarray) -> SubsetReport:
        d_stat, nu = self.cook(idx)
        leverages = self.leverages(idx)
        params = new_generalized_f(leverages, [1.0] * len(idx), nu)
        p_lower, p_upper = stochastic_bounds(params, d_stat)
        return SubsetReport(
            subset=[int(i) + 1 for i in idx],
            leverages=[float(v) for v in leverages],
            d_stat=d_stat,
            nu=nu,
            p_lower=p_lower,
            p_upper=p_upper,
        )

    def with_exact(self, report: SubsetReport, tol: Optional[float]) -> SubsetReport:
        params = new_generalized_f(report.leverages, [1.0] * len(report.subset), report.nu)
        evaluation = survival(params, report.d_stat, tol)
        return report.model_copy(
            update={
                "p_exact": evaluation.value,
                "p_exact_error": evaluation.error_bound,
                "tau_used": evaluation.tau_used,
                "converged": evaluation.converged,
            }
        )


def canonical_leverages(data: RegressionData, subset: Sequence[int]) -> FloatArray:
    """Eigenvalues of Z (X0'X0)^-1 Z' for the deleted rows, nonincreasing."""
    context = _DeletionContext(data)
    return context.leverages(context.indices(subset))


def cook_d(data: RegressionData, subset: Sequence[int]) -> tuple[float, int]:
    """(D_I, nu) with the retained-fit variance estimate rss_I / (N - r - k)."""
    context = _DeletionContext(data)
    return context.cook(context.indices(subset))


def subset_p_value(
    data: RegressionData, subset: Sequence[int], tol: Optional[float] = None
) -> SubsetReport:
    with tracer.start_as_current_span(
        "diagnostics.subset_p_value", attributes={"subset": [int(v) for v in subset]}
    ):
        context = _DeletionContext(data)
        report = context.report(context.indices(subset))
        return context.with_exact(report, tol)


def screen_subsets(
    data: RegressionData,
    r: int,
    level: float = 0.05,
    tol: Optional[float] = None,
    workers: Optional[int] = None,
) -> list[SubsetReport]:
    """Screen every size-r subset by its stochastic bounds, then p-value the survivors.

    A subset is retained when its lower bound is at most `level`. Survivors
    come back sorted by exact p-value (ties by subset).
    """
    if not 1 <= r < data.k:
        raise DomainError(f"subset size must satisfy 1 <= r < k={data.k}, got {r}")
    if not 0.0 <= level <= 1.0:
        raise DomainError(f"level must lie in [0, 1], got {level}")
    total = math.comb(data.n, r)
    if total > settings.SCREEN_MAX_SUBSETS:
        raise DomainError(
            f"C({data.n}, {r}) = {total} subsets exceeds the screening cap "
            f"{settings.SCREEN_MAX_SUBSETS}; pass explicit subsets instead"
        )

    with tracer.start_as_current_span(
        "diagnostics.screen_subsets",
        attributes={"n": data.n, "k": data.k, "r": r, "level": level, "subsets": total},
    ):
        context = _DeletionContext(data)

        def _screen(labels: tuple[int, ...]) -> Optional[SubsetReport]:
            try:
                return context.report(context.indices(labels))
            except DomainError as exc:
                logger.warning("Skipping subset %s: %s", list(labels), exc)
                return None

        candidates = combinations(range(1, data.n + 1), r)
        with ThreadPoolExecutor(max_workers=workers or settings.SCREEN_WORKERS) as executor:
            screened = list(executor.map(_screen, candidates))

        retained = [
            context.with_exact(report, tol)
            for report in screened
            if report is not None and report.p_lower <= level
        ]
        retained.sort(key=lambda report: (report.p_exact, report.subset))
        logger.info(
            "Screened %d subsets of size %d at level %s: %d retained",
            total,
            r,
            level,
            len(retained),
        )
        return retained


def rstudent_p_value(data: RegressionData, label: int) -> float:
    """Two-sided t(N - k - 1) p-value of the externally studentized residual."""
    context = _DeletionContext(data)
    if not 1 <= label <= data.n:
        raise DomainError(f"label must lie in 1..{data.n}, got {label}")
    dof = data.n - data.k - 1
    if dof < 1:
        raise DomainError(f"N - k - 1 must be at least 1, got {dof}")
    i = label - 1
    row = solve_lower(context.lower, context.x[i])
    leverage = float(row @ row)
    if leverage >= 1.0 - _LEVERAGE_ONE:
        raise LeverageError(f"leverage of row {label} is 1")
    resid = context.y - context.x @ context.beta
    e_i = float(resid[i])
    s2 = (context.rss - e_i * e_i / (1.0 - leverage)) / dof
    if not s2 > 0.0:
        raise DomainError(f"deleted residual variance for row {label} is not positive")
    t_stat = e_i / math.sqrt(s2 * (1.0 - leverage))
    return reg_inc_beta(0.5 * dof, 0.5, dof / (dof + t_stat * t_stat))
