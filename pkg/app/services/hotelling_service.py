"""Hotelling T^2 under a misspecified dispersion matrix.

When the test assumes dispersion Omega but the data have dispersion Sigma,
((N - p) / p) (T^2 / (N - 1)) follows a generalized F law with weights the
roots pi of Omega^{-1/2} Sigma Omega^{-1/2}, unit dofs, and nu = N - p.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import numpy.typing as npt

from app.core.config import settings
from app.core.errors import ConvergenceError, DomainError
from app.core.logging import logger, tracer
from app.models.schemas import SeriesEvaluation, Table1Row
from app.numerics.linalg import FloatArray, as_symmetric, cholesky, pencil_eigenvalues
from app.services.distribution_service import (
    GeneralizedFParams,
    cdf_error_bound,
    global_error_bound,
    new_generalized_f,
    pdf_error_bound,
    scaled_central_f_quantile,
    survival,
)

TABLE1_RHOS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
TABLE1_DIMENSION = 3
TABLE1_SAMPLE_SIZE = 12
TABLE1_LEVEL = 0.05
# the published table counts from the first term of the series
TABLE1_MIN_TAU = 1


def equicorrelated(p: int, rho: float) -> FloatArray:
    """Unit diagonal, rho off the diagonal."""
    if p < 1:
        raise DomainError(f"dimension must be positive, got {p}")
    if p > 1 and not -1.0 / (p - 1) < rho < 1.0:
        raise DomainError(
            f"equicorrelated({p}, {rho}) is not positive definite; need {-1.0 / (p - 1):.6g} < rho < 1"
        )
    matrix = np.full((p, p), float(rho))
    np.fill_diagonal(matrix, 1.0)
    return matrix


@dataclass(frozen=True, eq=False)
class HotellingScenario:
    """True dispersion Sigma, assumed dispersion Omega, sample size N."""

    sigma: FloatArray
    omega: FloatArray
    n: int

    def __post_init__(self) -> None:
        sigma = as_symmetric(self.sigma)
        omega = as_symmetric(self.omega)
        if sigma.shape != omega.shape:
            raise DomainError(f"Sigma {sigma.shape} and Omega {omega.shape} differ in order")
        cholesky(sigma)
        cholesky(omega)
        if self.n - sigma.shape[0] < 1:
            raise DomainError(f"sample size N={self.n} must exceed the dimension p={sigma.shape[0]}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "omega", omega)

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    @property
    def nu(self) -> int:
        return self.n - self.p

    @cached_property
    def pis(self) -> FloatArray:
        """Misspecification roots, nonincreasing."""
        return pencil_eigenvalues(self.sigma, self.omega)

    def distribution(self, merge: bool = True) -> GeneralizedFParams:
        return new_generalized_f(self.pis, [1.0] * self.p, self.nu, merge=merge)


def build_scenario(sigma: npt.ArrayLike, omega: npt.ArrayLike, n: int) -> HotellingScenario:
    return HotellingScenario(
        sigma=np.asarray(sigma, dtype=np.float64),
        omega=np.asarray(omega, dtype=np.float64),
        n=int(n),
    )


def misspecified_tail(
    scenario: HotellingScenario, y: float, tol: Optional[float] = None
) -> SeriesEvaluation:
    """P[((N - p) / p) (T^2 / (N - 1)) >= y] under the true dispersion."""
    with tracer.start_as_current_span(
        "hotelling.misspecified_tail", attributes={"p": scenario.p, "n": scenario.n, "y": y}
    ):
        return survival(scenario.distribution(), y, tol)


def critical_value(p: int, n: int, level: float = TABLE1_LEVEL, tol: float = 1e-12) -> float:
    """Upper-`level` point of F(p, N - p), the nominal rejection threshold."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    if n - p < 1:
        raise DomainError(f"sample size N={n} must exceed the dimension p={p}")
    return scaled_central_f_quantile(1.0 - level, 1.0, p, n - p, tol)


def misspecified_power(
    scenario: HotellingScenario, level: float = TABLE1_LEVEL, tol: Optional[float] = None
) -> SeriesEvaluation:
    """Actual rejection rate of the nominal `level` test when Omega is wrong."""
    return misspecified_tail(scenario, critical_value(scenario.p, scenario.n, level), tol)


def _first_tau(bound: Callable[[int], float], target: float) -> int:
    for tau in range(TABLE1_MIN_TAU, settings.GENF_TERM_CAP):
        if bound(tau) <= target:
            return tau
    raise ConvergenceError(
        f"bound did not reach {target} within {settings.GENF_TERM_CAP} terms",
        terms=settings.GENF_TERM_CAP,
    )


def table1_row(rho: float, y: float, tol_target: float, tail_tol: float) -> Table1Row:
    scenario = build_scenario(
        np.eye(TABLE1_DIMENSION), equicorrelated(TABLE1_DIMENSION, rho), TABLE1_SAMPLE_SIZE
    )
    # term counts on the unmerged roots, one unit dof per root
    params = scenario.distribution(merge=False)
    tau1 = _first_tau(lambda tau: y * global_error_bound(params, tau), tol_target)
    tau2 = _first_tau(lambda tau: y * pdf_error_bound(params, y, tau), tol_target)
    tau3 = _first_tau(lambda tau: cdf_error_bound(params, y, tau), tol_target)
    tail = misspecified_tail(scenario, y, tail_tol)
    return Table1Row(
        rho=rho,
        pis=[float(pi) for pi in scenario.pis],
        tau1=tau1,
        tau2=tau2,
        tau3=tau3,
        tail=tail.value,
        tail_error=tail.error_bound,
    )


def table1(
    tol_target: float = 1e-4,
    rhos: Sequence[float] = TABLE1_RHOS,
    tail_tol: Optional[float] = None,
) -> list[Table1Row]:
    """Misspecified type I error of the nominal 5% test (p = 3, N = 12) over rho."""
    tail_tol = tail_tol or settings.TABLE1_TAIL_TOL
    with tracer.start_as_current_span("hotelling.table1", attributes={"rows": len(rhos)}):
        y = round(critical_value(TABLE1_DIMENSION, TABLE1_SAMPLE_SIZE, TABLE1_LEVEL), 4)
        logger.info("Building misspecified type I error table at y=%s", y)
        return [table1_row(rho, y, tol_target, tail_tol) for rho in rhos]
