"""app/services/coefficient_service.py and app/core/cache.py tests."""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from app.core.cache import CoefficientCache
from app.core.errors import DomainError
from app.services.coefficient_service import (
    CoefficientTable,
    KjbRecursion,
    WeightConfig,
    coeffs_kjb,
    coeffs_symfun,
    make_recursion,
    sym_poly,
)

TWO_ONE = WeightConfig(alphas=(2.0, 1.0), ms=(1.0, 1.0))


def _exact_two_one(count: int) -> list[float]:
    """c_j for A (1 - z/2)^(-1/2) with A = 2^(-1/2), rational part kept exact."""
    values = []
    p = Fraction(1)
    for j in range(count):
        if j:
            p *= Fraction(2 * j - 1, 2 * j) * Fraction(1, 2)
        values.append(float(p) / math.sqrt(2.0))
    return values


def test_weight_config_constants() -> None:
    assert TWO_ONE.u == (0.5, 0.0)
    assert TWO_ONE.mus == (0.5, 0.5)
    assert TWO_ONE.a_const == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-14)


@pytest.mark.parametrize(
    ("alphas", "ms"),
    [((), ()), ((1.0, 2.0), (1.0, 1.0)), ((2.0, -1.0), (1.0, 1.0)), ((2.0,), (0.0,)), ((2.0,), (1.0, 1.0))],
)
def test_weight_config_validation(alphas, ms) -> None:
    with pytest.raises(DomainError):
        WeightConfig(alphas=alphas, ms=ms)


@pytest.mark.parametrize("build", [coeffs_kjb, coeffs_symfun])
def test_two_one_coefficients(build) -> None:
    table = build(TWO_ONE, 2)
    assert table.tau == 2
    np.testing.assert_allclose(table.c, [2**-0.5, 0.25 * 2**-0.5, 0.09375 * 2**-0.5], rtol=1e-14)
    np.testing.assert_allclose(build(TWO_ONE, 40).c, _exact_two_one(41), rtol=1e-13, atol=1e-16)


@pytest.mark.parametrize("build", [coeffs_kjb, coeffs_symfun])
def test_equal_weights_collapse(build) -> None:
    table = build(WeightConfig(alphas=(1.5, 1.5, 1.5), ms=(1.0, 2.0, 3.0)), 5)
    assert table.c == (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert table.tail == 0.0


def test_leading_coefficient_is_a() -> None:
    cfg = WeightConfig(alphas=(3.0, 2.0, 0.4), ms=(2.0, 1.0, 5.0))
    assert coeffs_symfun(cfg, 0).c[0] == pytest.approx(cfg.a_const, rel=1e-15)
    assert coeffs_kjb(cfg, 0).c[0] == pytest.approx(cfg.a_const, rel=1e-15)


def test_sym_poly_two_variables() -> None:
    e, f = sym_poly([0.5, 0.25], [1.5, 0.5])
    np.testing.assert_allclose(e, [0.75, 0.125])
    # f_1 = 1.5 * 0.5 + 0.5 * 0.25, f_2 = (1.5 + 0.5) * 0.5 * 0.25
    np.testing.assert_allclose(f, [0.875, 0.25])


def test_sym_poly_matches_brute_force() -> None:
    from itertools import combinations

    u = [0.9, 0.4, 0.7, 0.1]
    mu = [0.5, 1.0, 1.5, 2.0]
    e, f = sym_poly(u, mu)
    for size in range(1, 5):
        subsets = list(combinations(range(4), size))
        assert e[size - 1] == pytest.approx(sum(math.prod(u[i] for i in s) for s in subsets))
        assert f[size - 1] == pytest.approx(
            sum(sum(mu[i] for i in s) * math.prod(u[i] for i in s) for s in subsets)
        )


def test_sym_poly_length_mismatch() -> None:
    with pytest.raises(DomainError):
        sym_poly([0.1, 0.2], [1.0])


def test_recursions_agree_on_random_configurations() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(50):
        r = int(rng.integers(1, 7))
        alphas = tuple(sorted(rng.uniform(0.2, 3.0, size=r), reverse=True))
        ms = tuple(float(m) for m in rng.integers(1, 5, size=r))
        cfg = WeightConfig(alphas=alphas, ms=ms)
        tau = int(rng.integers(0, 201))
        kjb = coeffs_kjb(cfg, tau)
        sym = coeffs_symfun(cfg, tau)
        np.testing.assert_allclose(sym.c, kjb.c, rtol=0.0, atol=1e-13)
        assert all(value >= 0.0 for value in kjb.c)
        assert all(a <= b + 1e-15 for a, b in zip(kjb.partial_sums, kjb.partial_sums[1:]))
        assert kjb.tail >= 0.0
        assert sym.tail >= 0.0


def _mp_coefficients(cfg: WeightConfig, tau: int) -> list[float]:
    """c_0..c_tau at 40 digits from the power-sum recursion on the same u."""
    with mpmath.workdps(40):
        pairs = [(mpmath.mpf(u), mpmath.mpf(mu)) for u, mu in zip(cfg.u, cfg.mus) if u > 0.0]
        alpha_r = mpmath.mpf(cfg.alpha_r)
        log_a = mpmath.fsum(
            mpmath.mpf(mu) * mpmath.log(mpmath.mpf(a) / alpha_r) for a, mu in zip(cfg.alphas, cfg.mus)
        )
        a_const = mpmath.exp(-log_a)
        d = [mpmath.mpf(0)] + [mpmath.fsum(mu * u**j for u, mu in pairs) for j in range(1, tau + 1)]
        c = [a_const]
        for j in range(1, tau + 1):
            c.append(mpmath.fsum(d[j - l] * c[l] for l in range(j)) / j)
        return [float(value) for value in c]


# clustered middle weights make the signed recursion cancel heavily
CLUSTERED = WeightConfig(alphas=(1.508, 0.951, 0.951, 0.940, 0.398), ms=(2.0, 4.0, 3.0, 2.0, 2.0))


@pytest.mark.parametrize("build", [coeffs_kjb, coeffs_symfun])
def test_clustered_weights_match_high_precision(build) -> None:
    table = build(CLUSTERED, 155)
    np.testing.assert_allclose(table.c, _mp_coefficients(CLUSTERED, 155), rtol=1e-12, atol=0.0)
    assert table.tail >= 0.0
    assert table.partial_sums[-1] <= 1.0 + 1e-14


def test_symfun_partial_sums_stay_below_one_at_depth() -> None:
    kjb = coeffs_kjb(CLUSTERED, 400)
    sym = coeffs_symfun(CLUSTERED, 400)
    np.testing.assert_allclose(sym.c, kjb.c, rtol=0.0, atol=1e-13)
    assert sym.partial_sums[-1] == pytest.approx(kjb.partial_sums[-1], abs=1e-14)


def test_partial_sums_approach_one() -> None:
    cfg = WeightConfig(alphas=(2.0, 2.0, 0.5), ms=(1.0, 1.0, 1.0))
    table = coeffs_symfun(cfg, 400)
    assert table.partial_sums[-1] == pytest.approx(1.0, abs=1e-12)
    assert table.tail == pytest.approx(1.0 - table.partial_sums[-1], abs=1e-15)


def test_table_clamps_rounding_overshoot_only() -> None:
    assert CoefficientTable.from_prefix([1.0], [1.0 + 1e-15]).tail == 0.0
    with pytest.raises(DomainError, match="more than rounding allows"):
        CoefficientTable.from_prefix([1.0], [1.0 + 1e-9])
    # the allowance grows with the number of terms
    long_prefix = [0.0] * 200
    assert CoefficientTable.from_prefix(long_prefix, long_prefix[:-1] + [1.0 + 5e-14]).tail == 0.0
    with pytest.raises(DomainError):
        CoefficientTable.from_prefix([1.0] * 3, [1.0 + 5e-14] * 3)


def test_negative_tau_rejected() -> None:
    with pytest.raises(DomainError):
        coeffs_kjb(TWO_ONE, -1)


def test_make_recursion_follows_method() -> None:
    assert isinstance(make_recursion(TWO_ONE, "kjb"), KjbRecursion)
    with pytest.raises(ValueError):
        make_recursion(TWO_ONE, "bogus")


def test_cache_extends_without_recomputing() -> None:
    calls: list[int] = []

    class Counting:
        def __init__(self) -> None:
            self._inner = KjbRecursion(TWO_ONE)

        def extend(self, count: int) -> list[float]:
            calls.append(count)
            return self._inner.extend(count)

    cache = CoefficientCache(Counting())
    first, _ = cache.prefix(3)
    values, sums = cache.prefix(10)
    cache.prefix(5)
    assert calls == [3, 7]
    assert values[:3] == first
    assert len(cache) == 10
    assert sums[-1] == pytest.approx(math.fsum(values), rel=1e-14)
