"""Scalar special functions behind every series formula.

Log-gamma (Lanczos), the regularized incomplete beta function and the central
F law built on it, the Gauss hypergeometric series 2F1 on [0, 1), and
Pochhammer ratios in log space. Series accumulation is compensated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from app.core.config import settings
from app.core.errors import ConvergenceError, DomainError
from app.models.schemas import SeriesEvaluation

# Lanczos approximation (g = 6.0246800407767296, 13 terms), rational form of
# the exp(-g)-scaled Lanczos sum; coefficients in descending powers of x.
LANCZOS_G = 6.024680040776729583740234375
_LANCZOS_NUM = (
    0.006061842346248906525783753964555936883222,
    0.5098416655656676188125178644804694509993,
    19.51992788247617482847860966235652136208,
    449.9445569063168119446858607650988409623,
    6955.999602515376140356310115515198987526,
    75999.29304014542649875303443598909137092,
    601859.6171681098786670226533699352302507,
    3481712.15498064590882071018964774556468,
    14605578.08768506808414169982791359218571,
    43338889.32467613834773723740590533316085,
    86363131.28813859145546927288977868422342,
    103794043.1163445451906271053616070238554,
    56906521.91347156388090791033559122686859,
)
_LANCZOS_DENOM = (
    1.0,
    66.0,
    1925.0,
    32670.0,
    357423.0,
    2637558.0,
    13339535.0,
    45995730.0,
    105258076.0,
    150917976.0,
    120543840.0,
    39916800.0,
    0.0,
)

_BETA_CF_EPS = 1e-16
_BETA_CF_MAX_ITER = 20_000
_FPMIN = 1e-300


class CompensatedSum:
    """Running Neumaier (improved Kahan-Babuska) sum."""

    __slots__ = ("_sum", "_comp")

    def __init__(self, start: float = 0.0) -> None:
        self._sum = float(start)
        self._comp = 0.0

    def add(self, value: float) -> None:
        total = self._sum + value
        if abs(self._sum) >= abs(value):
            self._comp += (self._sum - total) + value
        else:
            self._comp += (value - total) + self._sum
        self._sum = total

    @property
    def value(self) -> float:
        return self._sum + self._comp


# ─── Double-Double Helpers ───

DoubleDouble = tuple[float, float]

_SPLITTER = 134217729.0  # 2**27 + 1


def _split(a: float) -> DoubleDouble:
    scaled = _SPLITTER * a
    high = scaled - (scaled - a)
    return high, a - high


def two_product(a: float, b: float) -> DoubleDouble:
    """(p, e) with p = fl(a * b) and a * b == p + e exactly (Dekker)."""
    product = a * b
    a_hi, a_lo = _split(a)
    b_hi, b_lo = _split(b)
    error = ((a_hi * b_hi - product) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    # the split overflows near the top of the range
    return product, error if math.isfinite(error) else 0.0


def renormalize(parts: Sequence[float]) -> DoubleDouble:
    """Double-double (hi, lo) for the exact sum of `parts`."""
    high = math.fsum(parts)
    return high, math.fsum([*parts, -high])


def dd_product_parts(x: DoubleDouble, y: DoubleDouble) -> list[float]:
    """Parts summing to x * y up to terms of order eps**2 |x y|."""
    return [*two_product(x[0], y[0]), x[0] * y[1], x[1] * y[0]]


def dd_divide(x: DoubleDouble, k: float) -> DoubleDouble:
    quotient = x[0] / k
    back_hi, back_lo = two_product(quotient, k)
    remainder = math.fsum([x[0], -back_hi, -back_lo, x[1]])
    return renormalize([quotient, remainder / k])


def _ratevl(x: float, num: tuple[float, ...], denom: tuple[float, ...]) -> float:
    """Rational function of equal-degree polynomials, Horner in x or 1/x."""
    if abs(x) <= 1.0:
        p = num[0]
        q = denom[0]
        for cn, cd in zip(num[1:], denom[1:]):
            p = p * x + cn
            q = q * x + cd
        return p / q
    y = 1.0 / x
    p = num[-1]
    q = denom[-1]
    for cn, cd in zip(reversed(num[:-1]), reversed(denom[:-1])):
        p = p * y + cn
        q = q * y + cd
    return p / q


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"log_gamma requires a finite x > 0, got {x}")
    zgh = x + LANCZOS_G - 0.5
    return (x - 0.5) * (math.log(zgh) - 1.0) + math.log(
        _ratevl(x, _LANCZOS_NUM, _LANCZOS_DENOM)
    )


def log_beta(a: float, b: float) -> float:
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Modified Lentz evaluation of the incomplete beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_CF_EPS:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})",
        terms=_BETA_CF_MAX_ITER,
    )


def _inc_beta_pair(a: float, b: float, x: float, y: float) -> tuple[float, float]:
    """Return (I_x(a, b), 1 - I_x(a, b)) with y = 1 - x supplied exactly."""
    if x <= 0.0:
        return 0.0, 1.0
    if y <= 0.0:
        return 1.0, 0.0
    log_front = a * math.log(x) + b * math.log(y) - log_beta(a, b)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        lower = front * _beta_continued_fraction(a, b, x) / a
        lower = min(max(lower, 0.0), 1.0)
        return lower, 1.0 - lower
    upper = front * _beta_continued_fraction(b, a, y) / b
    upper = min(max(upper, 0.0), 1.0)
    return 1.0 - upper, upper


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"reg_inc_beta requires a, b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"reg_inc_beta requires 0 <= x <= 1, got {x}")
    return _inc_beta_pair(a, b, x, 1.0 - x)[0]


def _check_f_dofs(v1: float, v2: float) -> None:
    if not (v1 > 0.0 and v2 > 0.0):
        raise DomainError(f"F degrees of freedom must be positive, got ({v1}, {v2})")


def central_f_cdf(w: float, v1: float, v2: float) -> float:
    """P[F(v1, v2) <= w]."""
    _check_f_dofs(v1, v2)
    if w <= 0.0:
        return 0.0
    if math.isinf(w):
        return 1.0
    denom = v1 * w + v2
    return _inc_beta_pair(0.5 * v1, 0.5 * v2, v1 * w / denom, v2 / denom)[0]


def central_f_sf(w: float, v1: float, v2: float) -> float:
    """P[F(v1, v2) > w], computed without cancellation in the upper tail."""
    _check_f_dofs(v1, v2)
    if w <= 0.0:
        return 1.0
    if math.isinf(w):
        return 0.0
    denom = v1 * w + v2
    return _inc_beta_pair(0.5 * v1, 0.5 * v2, v1 * w / denom, v2 / denom)[1]


def central_f_pdf(w: float, v1: float, v2: float) -> float:
    """Density of the central F(v1, v2) law at w >= 0."""
    _check_f_dofs(v1, v2)
    if w < 0.0:
        raise DomainError(f"central_f_pdf requires w >= 0, got {w}")
    half1 = 0.5 * v1
    if w == 0.0:
        if v1 > 2.0:
            return 0.0
        if v1 < 2.0:
            return math.inf
    log_density = (
        half1 * math.log(v1)
        + 0.5 * v2 * math.log(v2)
        - 0.5 * (v1 + v2) * math.log(v2 + v1 * w)
        - log_beta(half1, 0.5 * v2)
    )
    if w > 0.0:
        log_density += (half1 - 1.0) * math.log(w)
    return math.exp(log_density)


@dataclass(frozen=True, slots=True)
class HypergeometricArgs:
    """Parameters of 2F1(a, b; c; t) restricted to 0 <= t < 1 and c > 0."""
    a: float
    b: float
    c: float
    t: float

    def __post_init__(self) -> None:
        if not self.c > 0.0:
            raise DomainError(f"2F1 lower parameter must be positive, got c={self.c}")
        if not 0.0 <= self.t < 1.0:
            raise DomainError(f"2F1 argument must lie in [0, 1), got t={self.t}")


def gauss_2f1(
    args: HypergeometricArgs,
    *,
    term_cap: Optional[int] = None,
    rel_tol: Optional[float] = None,
) -> SeriesEvaluation:
    """Direct power series for 2F1 with a geometric tail stopping rule.

    Stops once |next term| / (1 - rho) falls below rel_tol * |sum|, where rho
    bounds the remaining term ratios by max(current ratio, t).
    """
    cap = term_cap or settings.HYP2F1_TERM_CAP
    tol = rel_tol or settings.HYP2F1_REL_TOL
    a, b, c, t = args.a, args.b, args.c, args.t

    if t == 0.0 or a == 0.0 or b == 0.0:
        return SeriesEvaluation(value=1.0, tau_used=0, error_bound=0.0)

    acc = CompensatedSum(1.0)
    term = 1.0
    for k in range(cap):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * t
        if term == 0.0:
            return SeriesEvaluation(value=acc.value, tau_used=k + 1, error_bound=0.0)
        acc.add(term)
        next_ratio = abs((a + k + 1.0) * (b + k + 1.0) / ((c + k + 1.0) * (k + 2.0)) * t)
        rho = max(next_ratio, t)
        if rho < 1.0:
            tail = abs(term) * next_ratio / (1.0 - rho)
            total = acc.value
            if tail <= tol * abs(total):
                return SeriesEvaluation(value=total, tau_used=k + 1, error_bound=tail)
    raise ConvergenceError(
        f"2F1({a}, {b}; {c}; {t}) did not converge within {cap} terms", terms=cap
    )


def pochhammer_log_ratio(p: float, q: float, j: int) -> float:
    """ln[(p)_j / (q)_j] as a compensated sum of ln((p + i) / (q + i))."""
    if not (p > 0.0 and q > 0.0):
        raise DomainError(f"pochhammer_log_ratio requires p, q > 0, got p={p}, q={q}")
    if j < 0:
        raise DomainError(f"pochhammer_log_ratio requires j >= 0, got {j}")
    if j == 0 or p == q:
        return 0.0
    acc = CompensatedSum()
    diff = p - q
    for i in range(j):
        acc.add(math.log1p(diff / (q + i)))
    return acc.value
