"""app/services/distribution_service.py tests."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, stats

from app.core.config import settings
from app.core.errors import DomainError
from app.services.distribution_service import (
    cdf_at_terms,
    cdf_error_bound,
    cdf_partial_sum,
    cdf_series,
    evaluate_pdf,
    global_tau,
    new_generalized_f,
    pdf_at_terms,
    pdf_error_bound,
    pdf_exact_r2,
    pdf_series,
    pdf_tail_bound,
    quantile,
    stochastic_bounds,
    survival,
)

Y = 3.8625
HALD_LEVERAGES = (0.408676, 0.124019)
LONGLEY_LEVERAGES = (0.690029, 0.614130)


# ─── Construction ───


def test_weights_sorted_with_dofs() -> None:
    params = new_generalized_f((1.0, 2.0), (3.0, 1.0), 5.0)
    assert params.alphas == (2.0, 1.0)
    assert params.ms == (1.0, 3.0)
    assert params.source_alphas == (1.0, 2.0)
    assert params.m_total == 4.0
    assert params.a == pytest.approx(5.0 * 1.0 / 4.0)


def test_equal_weights_merge() -> None:
    params = new_generalized_f((2.0, 2.0, 0.5), (1.0, 1.0, 1.0), 9.0)
    assert params.alphas == (2.0, 0.5)
    assert params.ms == (2.0, 1.0)
    assert params.source_ms == (1.0, 1.0, 1.0)
    unmerged = new_generalized_f((2.0, 2.0, 0.5), (1.0, 1.0, 1.0), 9.0, merge=False)
    assert unmerged.r == 3


def test_single_weight_is_central() -> None:
    params = new_generalized_f((3.0,), (4.0,), 7.0)
    assert params.is_central
    assert params.r == 1


@pytest.mark.parametrize(
    ("alphas", "ms", "nu"),
    [((), (), 5.0), ((1.0, -2.0), (1.0, 1.0), 5.0), ((1.0,), (0.0,), 5.0), ((1.0,), (1.0,), 0.0), ((1.0, 2.0), (1.0,), 5.0)],
)
def test_invalid_parameters(alphas, ms, nu) -> None:
    with pytest.raises(DomainError):
        new_generalized_f(alphas, ms, nu)


# ─── Density ───


def test_equal_weights_density_is_scaled_central_f() -> None:
    params = new_generalized_f((2.0, 2.0), (1.0, 1.0), 9.0)
    for w in (0.1, 1.0, 3.8625, 12.0):
        expected = stats.f.pdf(w, 2.0, 9.0, scale=2.0)
        assert pdf_series(params, w).value == pytest.approx(expected, rel=1e-12)


def test_equal_weights_unmerged_series_is_exact() -> None:
    params = new_generalized_f((2.0, 2.0), (1.0, 1.0), 9.0, merge=False)
    evaluation = pdf_series(params, 2.5, 1e-14)
    assert evaluation.tau_used == 0
    assert evaluation.value == pytest.approx(stats.f.pdf(2.5, 2.0, 9.0, scale=2.0), rel=1e-12)
    assert pdf_error_bound(params, 2.5, 0) == 0.0


def test_density_at_zero() -> None:
    params = new_generalized_f((2.0, 1.0), (1.0, 2.0), 4.0)
    assert pdf_series(params, 0.0).value == 0.0
    with pytest.raises(DomainError):
        pdf_series(new_generalized_f((2.0, 1.0), (0.5, 0.5), 4.0), 0.0)
    with pytest.raises(DomainError):
        pdf_series(params, -1.0)


def test_density_is_cdf_derivative() -> None:
    params = new_generalized_f((2.0, 0.5), (2.0, 1.0), 9.0)
    h = 1e-4
    slope = (cdf_series(params, Y + h, 1e-13).value - cdf_series(params, Y - h, 1e-13).value) / (
        2 * h
    )
    assert pdf_series(params, Y, 1e-12).value == pytest.approx(slope, abs=1e-7)


def test_default_density_tolerance_scales_with_w() -> None:
    params = new_generalized_f((2.0, 0.5), (2.0, 1.0), 9.0)
    for w in (0.5, Y, 20.0):
        evaluation = pdf_series(params, w)
        assert evaluation.converged
        assert w * evaluation.error_bound <= settings.GENF_PDF_RELATIVE_TOL * (1.0 + 1e-12)


def test_closed_form_matches_series_on_random_pairs() -> None:
    rng = np.random.default_rng(7)
    grid = np.linspace(0.05, 10.0, 20)
    for _ in range(100):
        alphas = sorted(rng.uniform(0.2, 3.0, size=2), reverse=True)
        ms = [float(m) for m in rng.integers(1, 5, size=2)]
        nu = float(rng.uniform(1.0, 20.0))
        params = new_generalized_f(alphas, ms, nu)
        for w in grid:
            exact = pdf_exact_r2(params, float(w))
            series = pdf_series(params, float(w), 1e-12)
            assert series.converged
            assert series.value == pytest.approx(exact, rel=1e-10, abs=1e-10)


def test_closed_form_needs_two_weights() -> None:
    with pytest.raises(DomainError):
        pdf_exact_r2(new_generalized_f((2.0, 2.0), (1.0, 1.0), 9.0), 1.0)
    with pytest.raises(DomainError):
        pdf_exact_r2(new_generalized_f((3.0, 2.0, 1.0), (1.0, 1.0, 1.0), 9.0), 1.0)


def test_evaluate_pdf_auto_picks_closed_form_for_two_weights() -> None:
    params = new_generalized_f((2.0, 0.5), (2.0, 1.0), 9.0)
    auto = evaluate_pdf(params, Y)
    assert auto.tau_used == 0
    assert auto.value == pytest.approx(pdf_exact_r2(params, Y), rel=1e-15)
    series = evaluate_pdf(params, Y, 1e-12, "series")
    assert series.value == pytest.approx(auto.value, rel=1e-10)


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.9])
def test_density_tail_bound_is_sound(equicorrelated_params, rho: float) -> None:
    params = equicorrelated_params(rho)
    for w in (0.5, Y, 9.0):
        reference = pdf_at_terms(params, w, 500).value
        for tau in range(61):
            error = abs(reference - pdf_at_terms(params, w, tau).value)
            assert error <= pdf_tail_bound(params, w, tau) + 1e-13


def test_density_error_estimate_decreases(equicorrelated_params) -> None:
    params = equicorrelated_params(0.5)
    for w in (0.5, 1.0, 2.0, Y, 8.0):
        # the estimate may rise while x_j still grows; past that it must fall
        bounds = [pdf_error_bound(params, w, tau) for tau in range(20, 60)]
        assert all(later <= earlier for earlier, later in zip(bounds, bounds[1:]))


@pytest.mark.parametrize(("rho", "expected"), [(0.5, 28), (0.9, 185)])
def test_global_tau_matches_published_counts(equicorrelated_params, rho: float, expected: int) -> None:
    assert global_tau(equicorrelated_params(rho), 1e-4 / Y) == expected


def test_global_tau_equal_weights() -> None:
    params = new_generalized_f((2.0, 2.0), (1.0, 1.0), 9.0, merge=False)
    assert global_tau(params, 1e-10) == 0


def test_density_reports_non_convergence(monkeypatch) -> None:
    monkeypatch.setattr(settings, "GENF_TERM_CAP", 3)
    params = new_generalized_f((2.0, 0.5), (2.0, 1.0), 9.0)
    evaluation = pdf_series(params, Y, 1e-14)
    assert not evaluation.converged
    assert evaluation.tau_used == 2
    assert evaluation.error_bound > 1e-14


# ─── Distribution Function ───


def test_cdf_limits() -> None:
    params = new_generalized_f((2.0, 0.5), (2.0, 1.0), 9.0)
    assert cdf_series(params, 0.0).value == 0.0
    assert cdf_series(params, math.inf).value == 1.0
    assert survival(params, 0.0).value == 1.0
    with pytest.raises(DomainError):
        cdf_series(params, -0.5)


@pytest.mark.parametrize("merge", [True, False])
def test_misspecified_hotelling_cdf(two_group_tail, merge: bool) -> None:
    params = new_generalized_f((2.0, 2.0, 0.5), (1.0, 1.0, 1.0), 9.0, merge=merge)
    evaluation = cdf_series(params, Y, 1e-8)
    assert evaluation.converged
    assert evaluation.error_bound <= 1e-8
    tail = two_group_tail((2.0, 2.0), (0.5, 1.0), 9.0, Y)
    assert evaluation.value == pytest.approx(1.0 - tail, abs=2e-8)
    assert evaluation.value == pytest.approx(1.0 - 0.12310, abs=5e-5)


@pytest.mark.parametrize(
    ("leverages", "nu", "y", "expected"),
    [(HALD_LEVERAGES, 6.0, 2.19331, 0.02181), (LONGLEY_LEVERAGES, 7.0, 1.812433, 0.12927)],
)
def test_published_p_values(leverages, nu: float, y: float, expected: float) -> None:
    params = new_generalized_f(leverages, (1.0, 1.0), nu)
    assert survival(params, y, 1e-7).value == pytest.approx(expected, abs=1e-5)


def test_hald_density_integrates_to_cdf() -> None:
    params = new_generalized_f(HALD_LEVERAGES, (1.0, 1.0), 6.0)
    area, _ = integrate.quad(
        lambda w: pdf_series(params, w, 1e-12).value, 0.0, 2.19331, epsabs=1e-11, epsrel=1e-11
    )
    assert area == pytest.approx(1.0 - 0.02181, abs=2e-5)


@pytest.mark.parametrize(
    ("alphas", "ms", "nu", "y"),
    [
        ((2.0, 0.7), (1.0, 1.0), 6.0, 4.0),
        ((1.6, 0.9, 0.3), (1.0, 2.0, 1.0), 11.0, 2.5),
        ((3.0, 1.2, 0.8, 0.5), (1.0, 1.0, 1.0, 3.0), 15.0, 6.0),
        ((0.9, 0.4, 0.25), (2.0, 2.0, 2.0), 4.5, 1.0),
    ],
)
def test_density_integrates_to_cdf(alphas, ms, nu: float, y: float) -> None:
    params = new_generalized_f(alphas, ms, nu)
    area, _ = integrate.quad(
        lambda w: pdf_series(params, w, 1e-12).value, 0.0, y, epsabs=1e-11, epsrel=1e-11, limit=200
    )
    assert area == pytest.approx(cdf_series(params, y, 1e-12).value, abs=1e-7)


def test_density_integrates_to_cdf_on_random_configurations() -> None:
    rng = np.random.default_rng(10)
    for _ in range(10):
        r = int(rng.integers(2, 5))
        alphas = tuple(float(a) for a in rng.uniform(0.3, 2.5, size=r))
        ms = tuple(float(m) for m in rng.integers(1, 4, size=r))
        params = new_generalized_f(alphas, ms, float(rng.uniform(4.0, 20.0)))
        upper = quantile(params, 0.999, 1e-10)
        area, _ = integrate.quad(
            lambda w: pdf_series(params, w, 1e-12).value, 0.0, upper, epsabs=1e-11, epsrel=1e-11, limit=200
        )
        assert area == pytest.approx(cdf_series(params, upper, 1e-12).value, abs=1e-7)


@pytest.mark.parametrize("scale", [0.01, 0.37, 4.0, 250.0])
def test_weight_scaling_rescales_the_law(scale: float) -> None:
    alphas, ms, nu = (1.6, 0.9, 0.3), (1.0, 2.0, 1.0), 11.0
    base = new_generalized_f(alphas, ms, nu)
    scaled = new_generalized_f(tuple(scale * a for a in alphas), ms, nu)
    for y in (0.2, 1.0, 2.5, 7.0):
        assert cdf_series(scaled, scale * y, 1e-13).value == pytest.approx(
            cdf_series(base, y, 1e-13).value, abs=1e-12
        )
    for prob in (0.05, 0.5, 0.95):
        assert quantile(scaled, prob, 1e-12) == pytest.approx(scale * quantile(base, prob, 1e-12), rel=1e-8)


@pytest.mark.parametrize(
    ("alphas", "ms", "nu"),
    [((2.0, 0.5), (2.0, 1.0), 9.0), ((3.0, 1.2, 0.8, 0.5), (1.0, 1.0, 1.0, 3.0), 15.0)],
)
def test_cdf_is_nondecreasing(alphas, ms, nu: float) -> None:
    params = new_generalized_f(alphas, ms, nu)
    values = [cdf_series(params, float(y), 1e-13).value for y in np.linspace(0.0, 30.0, 301)]
    assert values[0] == 0.0
    assert all(later >= earlier - 1e-12 for earlier, later in zip(values, values[1:]))
    assert all(0.0 <= value <= 1.0 for value in values)


def test_equal_weights_cdf_is_central_f() -> None:
    rng = np.random.default_rng(13)
    merged = new_generalized_f((2.0, 2.0), (1.0, 3.0), 9.0)
    unmerged = new_generalized_f((2.0, 2.0), (1.0, 3.0), 9.0, merge=False)
    for y in rng.uniform(0.01, 20.0, size=50):
        expected = stats.f.cdf(y / 2.0, 4.0, 9.0)
        assert cdf_series(merged, float(y)).value == pytest.approx(expected, abs=1e-12)
        assert cdf_series(unmerged, float(y)).value == pytest.approx(expected, abs=1e-12)


def test_equal_weights_have_zero_cdf_error() -> None:
    params = new_generalized_f((2.0, 2.0), (1.0, 1.0), 9.0, merge=False)
    assert all(cdf_error_bound(params, Y, tau) == 0.0 for tau in range(5))


def test_partial_sum_and_enhanced_estimate_bracket_the_cdf(equicorrelated_params) -> None:
    params = equicorrelated_params(0.5)
    exact = cdf_series(params, Y, 1e-13).value
    for tau in (0, 3, 10, 20):
        assert cdf_partial_sum(params, Y, tau) <= exact + 1e-14
        assert cdf_at_terms(params, Y, tau).value >= exact - 1e-14


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.9])
def test_cdf_error_bound_is_sound(equicorrelated_params, rho: float) -> None:
    params = equicorrelated_params(rho)
    for y in (1.0, Y, 8.0):
        reference = cdf_at_terms(params, y, 500).value
        for tau in range(61):
            estimate = cdf_at_terms(params, y, tau)
            error = abs(estimate.value - reference)
            assert error <= cdf_error_bound(params, y, tau) + 1e-13
            assert estimate.error_bound >= cdf_error_bound(params, y, tau)


def test_cdf_reports_non_convergence(monkeypatch) -> None:
    monkeypatch.setattr(settings, "GENF_TERM_CAP", 2)
    params = new_generalized_f((2.0, 0.5), (2.0, 1.0), 9.0)
    evaluation = cdf_series(params, Y, 1e-14)
    assert not evaluation.converged


def test_coefficient_methods_agree() -> None:
    kjb = new_generalized_f(LONGLEY_LEVERAGES, (1.0, 1.0), 7.0, method="kjb")
    sym = new_generalized_f(LONGLEY_LEVERAGES, (1.0, 1.0), 7.0, method="symfun")
    assert survival(kjb, 1.812433, 1e-10).value == pytest.approx(
        survival(sym, 1.812433, 1e-10).value, abs=1e-12
    )


def test_prefix_is_shared_and_consistent() -> None:
    params = new_generalized_f((2.0, 0.5), (2.0, 1.0), 9.0, method="kjb")
    c, sums = params.prefix(40)
    assert len(c) == len(sums) == 40
    assert sums[-1] == pytest.approx(math.fsum(c), abs=1e-15)
    assert params.prefix(10) == (c[:10], sums[:10])
    assert all(value >= 0.0 for value in c)


# ─── Quantile ───


def test_quantile_round_trip() -> None:
    params = new_generalized_f((2.0, 0.5), (2.0, 1.0), 9.0)
    for prob in (0.05, 0.5, 0.95):
        y = quantile(params, prob, 1e-10)
        assert cdf_series(params, y, 1e-12).value == pytest.approx(prob, abs=1e-8)


def test_central_quantile_matches_scipy() -> None:
    params = new_generalized_f((2.5,), (3.0,), 8.0)
    assert quantile(params, 0.9, 1e-12) == pytest.approx(2.5 * stats.f.ppf(0.9, 3.0, 8.0), rel=1e-9)


@pytest.mark.parametrize("prob", [0.0, 1.0, -0.2])
def test_quantile_domain(prob: float) -> None:
    with pytest.raises(DomainError):
        quantile(new_generalized_f((2.0, 0.5), (2.0, 1.0), 9.0), prob)


# ─── Stochastic Bounds ───


@pytest.mark.parametrize(
    ("leverages", "nu", "y", "expected"),
    [
        (HALD_LEVERAGES, 6.0, 2.19331, (0.01305, 0.04610)),
        # printed to fewer digits than the bounds need; the lower bound lands 1e-4 off
        ((0.615959, 0.371827), 7.0, 2.57861, (0.03822, 0.06356)),
    ],
)
def test_published_stochastic_bounds(leverages, nu: float, y: float, expected) -> None:
    params = new_generalized_f(leverages, (1.0, 1.0), nu)
    lower, upper = stochastic_bounds(params, y)
    geomean = math.sqrt(leverages[0] * leverages[1])
    assert lower == pytest.approx(stats.f.sf(y / geomean, 2.0, nu), rel=1e-11)
    assert upper == pytest.approx(stats.f.sf(y / max(leverages), 2.0, nu), rel=1e-11)
    assert lower == pytest.approx(expected[0], abs=2e-4)
    assert upper == pytest.approx(expected[1], abs=5e-5)
    assert lower <= survival(params, y, 1e-10).value <= upper


def test_stochastic_bounds_collapse_for_equal_weights() -> None:
    lower, upper = stochastic_bounds(new_generalized_f((0.3, 0.3), (1.0, 1.0), 8.0), 2.0)
    assert lower == pytest.approx(upper, rel=1e-13)


def test_stochastic_bounds_need_unit_dofs() -> None:
    with pytest.raises(DomainError):
        stochastic_bounds(new_generalized_f((2.0, 2.0, 0.5), (1.0, 1.0, 2.0), 9.0), Y)
