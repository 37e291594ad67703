"""Shared fixtures: the shipped regression tables, the Hotelling scenarios and
independent numerical references built on numpy and scipy."""

from __future__ import annotations

import math
from pathlib import Path
from types import SimpleNamespace
from typing import Callable, Sequence

import numpy as np
import pytest
from scipy import integrate, special

from app.models.domain import RegressionData
from app.repositories.dataset_repository import dataset_repository
from app.services.distribution_service import GeneralizedFParams
from app.services.hotelling_service import build_scenario, equicorrelated

DATA_DIR = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def hald() -> RegressionData:
    return dataset_repository.load_csv(DATA_DIR / "hald.csv")


@pytest.fixture(scope="session")
def longley() -> RegressionData:
    return dataset_repository.load_csv(DATA_DIR / "longley.csv")


@pytest.fixture
def equicorrelated_params() -> Callable[..., GeneralizedFParams]:
    """Builder for p = 3, N = 12, Sigma = I tested against an equicorrelated Omega."""

    def _build(rho: float, merge: bool = False) -> GeneralizedFParams:
        scenario = build_scenario(np.eye(3), equicorrelated(3, rho), 12)
        return scenario.distribution(merge=merge)

    return _build


# ─── Least-squares reference ───


def _standardized_design(data: RegressionData) -> np.ndarray:
    # column operations inside the span of X0 leave leverages and D_I unchanged
    x = np.array(data.x0, dtype=np.float64)
    varying = x.std(axis=0) > 0.0
    if data.has_intercept:
        x[:, varying] -= x[:, varying].mean(axis=0)
    x[:, varying] /= x[:, varying].std(axis=0)
    return x


def _ols_leverages(data: RegressionData, subset: Sequence[int]) -> np.ndarray:
    """Eigenvalues of Q_I Q_I' from a Householder QR of the design, nonincreasing."""
    q, _ = np.linalg.qr(_standardized_design(data))
    rows = q[np.asarray(subset) - 1]
    return np.sort(np.linalg.eigvalsh(rows @ rows.T))[::-1]


def _ols_cook_d(data: RegressionData, subset: Sequence[int]) -> float:
    """||X_keep (beta_I - beta)||^2 / (r s_I^2) with s_I^2 = rss_I / (N - r - k), via lstsq."""
    x = _standardized_design(data)
    y = np.asarray(data.y0, dtype=np.float64)
    idx = np.asarray(subset) - 1
    keep = np.ones(len(y), dtype=bool)
    keep[idx] = False
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    beta_del, *_ = np.linalg.lstsq(x[keep], y[keep], rcond=None)
    resid = y[keep] - x[keep] @ beta_del
    s2 = float(resid @ resid) / (len(y) - len(idx) - x.shape[1])
    shift = x[keep] @ (beta_del - beta)
    return float(shift @ shift) / (len(idx) * s2)


# ─── Two-group tail by quadrature ───


def _log_chi2_pdf(v: float, dof: float) -> float:
    norm = 0.5 * dof * math.log(2.0) + special.gammaln(0.5 * dof)
    return special.xlogy(0.5 * dof - 1.0, v) - 0.5 * v - norm


def _chi_pdf(z: float, dof: float) -> float:
    norm = (0.5 * dof - 1.0) * math.log(2.0) + special.gammaln(0.5 * dof)
    return math.exp(special.xlogy(dof - 1.0, z) - 0.5 * z * z - norm)


def _two_group_tail(
    group1: tuple[float, float], group2: tuple[float, float], nu: float, y: float
) -> float:
    """P[W > y] for W = (a1 chi2_m1 + a2 chi2_m2) / (m1 + m2) over chi2_nu / nu.

    Conditions on the denominator V and on Z = sqrt(chi2_m2):
    P = E_V[ int_0^z* P(chi2_m1 > (c V - a2 z^2) / a1) f_Z(z) dz + P(Z > z*) ],
    c = (m1 + m2) y / nu and z* = sqrt(c V / a2).
    """
    (a1, m1), (a2, m2) = group1, group2
    c = (m1 + m2) * y / nu

    def z_star(v: float) -> float:
        return math.sqrt(c * v / a2)

    def body(z: float, v: float) -> float:
        rest = max(c * v - a2 * z * z, 0.0) / a1
        return special.chdtrc(m1, rest) * _chi_pdf(z, m2) * math.exp(_log_chi2_pdf(v, nu))

    def cap(v: float) -> float:
        return special.gammaincc(0.5 * m2, 0.5 * z_star(v) ** 2) * math.exp(_log_chi2_pdf(v, nu))

    inner, _ = integrate.dblquad(body, 0.0, np.inf, 0.0, z_star, epsabs=1e-12, epsrel=1e-10)
    outer, _ = integrate.quad(cap, 0.0, np.inf, epsabs=1e-12, epsrel=1e-10)
    return inner + outer


@pytest.fixture(scope="session")
def ols() -> SimpleNamespace:
    """numpy QR / lstsq references for canonical leverages and D_I."""
    return SimpleNamespace(leverages=_ols_leverages, cook_d=_ols_cook_d)


@pytest.fixture(scope="session")
def two_group_tail() -> Callable[..., float]:
    return _two_group_tail
