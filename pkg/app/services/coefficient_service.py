"""Mixture coefficients c_j of a positively weighted chi-square sum.

The numerator of the generalized F law is a chi-square mixture with weights
given by the generating identity

    A * prod_i (1 - u_i z)^(-m_i / 2) = sum_j c_j z^j,

where u_i = 1 - alpha_r / alpha_i and A = prod_i (alpha_i / alpha_r)^(-m_i / 2).
Two recursions are provided: the classical power-sum recursion ("kjb") and an
r-term recursion on elementary symmetric functions ("symfun").
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

from app.core.cache import CoefficientRecursion
from app.core.config import settings
from app.core.errors import DomainError
from app.models.enums import CoefficientMethod
from app.numerics.specialfn import (
    CompensatedSum,
    DoubleDouble,
    dd_divide,
    dd_product_parts,
    renormalize,
    two_product,
)

TAIL_CLAMP = 1e-14


# ─── Weight Configuration ───


@dataclass(frozen=True)
class WeightConfig:
    """Weights alpha (nonincreasing, positive) and chi-square dofs m."""

    alphas: tuple[float, ...]
    ms: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.alphas:
            raise DomainError("at least one weight is required")
        if len(self.alphas) != len(self.ms):
            raise DomainError(
                f"got {len(self.alphas)} weights but {len(self.ms)} degrees of freedom"
            )
        for alpha, m in zip(self.alphas, self.ms):
            if not (math.isfinite(alpha) and alpha > 0.0):
                raise DomainError(f"weights must be positive and finite, got {alpha}")
            if not (math.isfinite(m) and m > 0.0):
                raise DomainError(f"degrees of freedom must be positive and finite, got {m}")
        if any(a < b for a, b in zip(self.alphas, self.alphas[1:])):
            raise DomainError("weights must be sorted nonincreasing")

    @property
    def r(self) -> int:
        return len(self.alphas)

    @property
    def alpha_r(self) -> float:
        return self.alphas[-1]

    @cached_property
    def u(self) -> tuple[float, ...]:
        return tuple(1.0 - self.alpha_r / alpha for alpha in self.alphas)

    @cached_property
    def mus(self) -> tuple[float, ...]:
        return tuple(0.5 * m for m in self.ms)

    @cached_property
    def log_a_const(self) -> float:
        """ln A."""
        return -math.fsum(
            mu * math.log(alpha / self.alpha_r) for alpha, mu in zip(self.alphas, self.mus)
        )

    @property
    def a_const(self) -> float:
        return math.exp(self.log_a_const)


# ─── Coefficient Table ───


@dataclass(frozen=True)
class CoefficientTable:
    """c_0..c_tau with running partial sums and the remaining tail mass."""

    c: tuple[float, ...]
    partial_sums: tuple[float, ...]
    tail: float

    @property
    def tau(self) -> int:
        return len(self.c) - 1

    @classmethod
    def from_prefix(
        cls, c: Sequence[float], partial_sums: Sequence[float]
    ) -> "CoefficientTable":
        tail = 1.0 - partial_sums[-1]
        if tail < 0.0:
            slack = max(TAIL_CLAMP, 4.0 * len(c) * sys.float_info.epsilon)
            if tail < -slack:
                raise DomainError(
                    f"coefficient partial sums exceed one by {-tail:.3e} after {len(c)} terms, "
                    f"more than rounding allows ({slack:.1e})"
                )
            tail = 0.0
        return cls(c=tuple(c), partial_sums=tuple(partial_sums), tail=tail)


def tail_mass(partial_sum: float) -> float:
    """1 - S clamped at zero for rounding-level overshoot."""
    return max(0.0, 1.0 - partial_sum)


# ─── Recursions ───


class KjbRecursion:
    """c_j = (1/j) sum_{l<j} d_{j-l} c_l with d_j = sum_i mu_i u_i^j."""

    def __init__(self, cfg: WeightConfig) -> None:
        self._pairs = [(u, mu) for u, mu in zip(cfg.u, cfg.mus) if u > 0.0]
        self._a_const = cfg.a_const
        self._c: list[float] = []
        self._d: list[float] = [0.0]

    def _power_sum(self, j: int) -> float:
        return math.fsum(mu * u**j for u, mu in self._pairs)

    def extend(self, count: int) -> list[float]:
        fresh = []
        for _ in range(count):
            j = len(self._c)
            if j == 0:
                value = self._a_const
            else:
                self._d.append(self._power_sum(j))
                value = math.fsum(self._d[j - l] * self._c[l] for l in range(j)) / j
            self._c.append(value)
            fresh.append(value)
        return fresh


def _dd_elementary(values: Sequence[float], order: int) -> list[DoubleDouble]:
    """e_0..e_order of `values` in double-double."""
    e: list[DoubleDouble] = [(1.0, 0.0)] + [(0.0, 0.0)] * order
    for x in values:
        for i in range(order, 0, -1):
            e[i] = renormalize([*e[i], *dd_product_parts(e[i - 1], (x, 0.0))])
    return e


def _sym_poly_dd(
    u: Sequence[float], mu: Sequence[float]
) -> tuple[list[DoubleDouble], list[DoubleDouble]]:
    if len(u) != len(mu):
        raise DomainError(f"u and mu lengths differ ({len(u)} != {len(mu)})")
    r = len(u)
    e_all = _dd_elementary(u, r)
    f: list[DoubleDouble] = [(0.0, 0.0)] * (r + 1)
    for j in range(r):
        e_rest = _dd_elementary([x for i, x in enumerate(u) if i != j], r)
        weight = two_product(mu[j], u[j])
        for i in range(1, r + 1):
            f[i] = renormalize([*f[i], *dd_product_parts(weight, e_rest[i - 1])])
    return e_all[1:], f[1:]


def sym_poly(u: Sequence[float], mu: Sequence[float]) -> tuple[list[float], list[float]]:
    """Elementary symmetric polynomials e_1..e_r of u and their mu-weighted companions.

    f_i = sum over |S| = i of (sum_{j in S} mu_j) * prod_{j in S} u_j, which is
    computed as sum_j mu_j u_j e_{i-1}(u without u_j).
    """
    e, f = _sym_poly_dd(u, mu)
    return [high for high, _ in e], [high for high, _ in f]


class SymfunRecursion:
    """k P_k = sum_{i=1}^{r} (-1)^(i-1) ((k - i) e_i + f_i) P_{k-i}, c_k = A P_k.

    Variables with u_i = 0 contribute a unit factor to the generating function
    and are dropped before the symmetric functions are formed. The signed sum
    cancels heavily, so P_k and the symmetric functions are carried in
    double-double and every step is summed exactly.
    """

    def __init__(self, cfg: WeightConfig) -> None:
        live = [(u, mu) for u, mu in zip(cfg.u, cfg.mus) if u > 0.0]
        self._e, self._f = _sym_poly_dd([u for u, _ in live], [mu for _, mu in live])
        self._order = len(live)
        self._a_const = cfg.a_const
        self._p: list[DoubleDouble] = []

    def _step(self, k: int) -> DoubleDouble:
        parts: list[float] = []
        for i in range(1, min(self._order, k) + 1):
            e_hi, e_lo = self._e[i - 1]
            coef = renormalize(
                [*two_product(float(k - i), e_hi), (k - i) * e_lo, *self._f[i - 1]]
            )
            term = dd_product_parts(coef, self._p[k - i])
            parts.extend(term if i % 2 == 1 else [-x for x in term])
        return dd_divide(renormalize(parts), float(k))

    def extend(self, count: int) -> list[float]:
        fresh = []
        for _ in range(count):
            k = len(self._p)
            value = (1.0, 0.0) if k == 0 else self._step(k)
            self._p.append(value)
            high, low = value
            fresh.append(math.fsum([*two_product(self._a_const, high), self._a_const * low]))
        return fresh


def make_recursion(
    cfg: WeightConfig, method: Optional[CoefficientMethod | str] = None
) -> CoefficientRecursion:
    chosen = CoefficientMethod(method or settings.COEFFICIENT_METHOD)
    if chosen is CoefficientMethod.KJB:
        return KjbRecursion(cfg)
    return SymfunRecursion(cfg)


def _table(recursion: CoefficientRecursion, tau: int) -> CoefficientTable:
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    values = recursion.extend(tau + 1)
    running = CompensatedSum()
    sums = []
    for value in values:
        running.add(value)
        sums.append(running.value)
    return CoefficientTable.from_prefix(values, sums)


def coeffs_kjb(cfg: WeightConfig, tau: int) -> CoefficientTable:
    return _table(KjbRecursion(cfg), tau)


def coeffs_symfun(cfg: WeightConfig, tau: int) -> CoefficientTable:
    return _table(SymfunRecursion(cfg), tau)
