"""Generalized F distribution.

W = ((sum_i alpha_i chi2(m_i)) / |m|) / (chi2(nu) / nu) with positive weights.
Density and cdf are chi-square mixture series in t = w / (a + w); the number of
terms is chosen adaptively from truncation-error bounds.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

from app.core.cache import CoefficientCache
from app.core.config import settings
from app.core.errors import ConvergenceError, DomainError
from app.core.logging import logger, tracer
from app.models.enums import CoefficientMethod, PdfMethod
from app.models.schemas import SeriesEvaluation
from app.numerics.specialfn import (
    CompensatedSum,
    HypergeometricArgs,
    central_f_cdf,
    central_f_pdf,
    central_f_sf,
    gauss_2f1,
    log_gamma,
    pochhammer_log_ratio,
)
from app.services.coefficient_service import (
    WeightConfig,
    make_recursion,
    tail_mass,
)

_BRACKET_MAX_DOUBLINGS = 200
_BISECTION_MAX_ITER = 200
_INITIAL_CHUNK = 64


# ─── Parameters ───


class GeneralizedFParams:
    """Canonical weights, denominator dof and the constants every series shares.

    Holds the caller's weights and dofs as given (`source_alphas`, `source_ms`)
    next to the sorted, possibly merged `weights`, and owns the incremental
    coefficient cache.
    """

    def __init__(
        self,
        weights: WeightConfig,
        nu: float,
        *,
        source_alphas: Optional[Sequence[float]] = None,
        source_ms: Optional[Sequence[float]] = None,
        method: Optional[CoefficientMethod | str] = None,
    ) -> None:
        if not (math.isfinite(nu) and nu > 0.0):
            raise DomainError(f"denominator degrees of freedom must be positive, got {nu}")
        self.weights = weights
        self.nu = float(nu)
        self.source_alphas = tuple(source_alphas or weights.alphas)
        self.source_ms = tuple(source_ms or weights.ms)

        self.m_total = math.fsum(weights.ms)
        self.half_m = 0.5 * self.m_total
        self.half_nu = 0.5 * self.nu
        self.half_total = 0.5 * (self.nu + self.m_total)
        self.a = self.nu * weights.alpha_r / self.m_total
        self.log_b0 = (
            self.half_nu * math.log(self.a)
            + log_gamma(self.half_total)
            - log_gamma(self.half_m)
            - log_gamma(self.half_nu)
        )
        if weights.r > 1 and weights.a_const == 0.0:
            raise DomainError("weights are too dispersed: the leading coefficient underflows")
        self._cache = CoefficientCache(make_recursion(weights, method))

    def __repr__(self) -> str:
        return (
            f"GeneralizedFParams(alphas={self.alphas}, ms={self.ms}, nu={self.nu})"
        )

    @property
    def r(self) -> int:
        return self.weights.r

    @property
    def alphas(self) -> tuple[float, ...]:
        return self.weights.alphas

    @property
    def ms(self) -> tuple[float, ...]:
        return self.weights.ms

    @property
    def is_central(self) -> bool:
        """Single weight: W is a scaled central F."""
        return self.weights.r == 1

    def t(self, y: float) -> float:
        return y / (self.a + y)

    def log_b1(self, w: float) -> float:
        """ln B1(w) = ((|m| - 2) / 2) ln w - ((nu + |m|) / 2) ln(a + w)."""
        if w < 0.0:
            raise DomainError(f"argument must be nonnegative, got {w}")
        if w == 0.0:
            if self.half_m > 1.0:
                return -math.inf
            if self.half_m == 1.0:
                return -self.half_total * math.log(self.a)
            raise DomainError("the density diverges at w = 0 when |m| < 2")
        return (self.half_m - 1.0) * math.log(w) - self.half_total * math.log(self.a + w)

    def prefix(self, count: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """(c_0..c_{count-1}, partial sums) from the shared coefficient cache."""
        return self._cache.prefix(count)


def new_generalized_f(
    alphas: Sequence[float],
    ms: Sequence[float],
    nu: float,
    *,
    merge: bool = True,
    method: Optional[CoefficientMethod | str] = None,
) -> GeneralizedFParams:
    """Sort weights nonincreasing (dofs follow) and merge numerically equal weights."""
    alphas = tuple(float(a) for a in alphas)
    ms = tuple(float(m) for m in ms)
    if not alphas:
        raise DomainError("at least one weight is required")
    if len(alphas) != len(ms):
        raise DomainError(f"got {len(alphas)} weights but {len(ms)} degrees of freedom")
    for value in (*alphas, *ms):
        if not (math.isfinite(value) and value > 0.0):
            raise DomainError(f"weights and degrees of freedom must be positive, got {value}")

    pairs = sorted(zip(alphas, ms), key=lambda pair: -pair[0])
    if merge:
        rtol = settings.WEIGHT_MERGE_RTOL
        merged: list[tuple[float, float]] = []
        for alpha, m in pairs:
            if merged and abs(merged[-1][0] - alpha) <= rtol * merged[-1][0]:
                merged[-1] = (merged[-1][0], merged[-1][1] + m)
            else:
                merged.append((alpha, m))
        pairs = merged

    weights = WeightConfig(
        alphas=tuple(alpha for alpha, _ in pairs), ms=tuple(m for _, m in pairs)
    )
    return GeneralizedFParams(
        weights, nu, source_alphas=alphas, source_ms=ms, method=method
    )


class _CoefficientCursor:
    """Sequential access to (c_j, S_j), fetching the cache in doubling chunks."""

    def __init__(self, params: GeneralizedFParams) -> None:
        self._params = params
        self._c: tuple[float, ...] = ()
        self._sums: tuple[float, ...] = ()

    def __getitem__(self, j: int) -> tuple[float, float]:
        if j >= len(self._c):
            self._c, self._sums = self._params.prefix(
                max(_INITIAL_CHUNK, 2 * len(self._c), j + 1)
            )
        return self._c[j], self._sums[j]


# ─── Scaled Central F (r = 1) ───


def scaled_central_f_pdf(w: float, alpha: float, m: float, nu: float) -> float:
    return central_f_pdf(w / alpha, m, nu) / alpha


def scaled_central_f_cdf(y: float, alpha: float, m: float, nu: float) -> float:
    return central_f_cdf(y / alpha, m, nu)


def scaled_central_f_sf(y: float, alpha: float, m: float, nu: float) -> float:
    return central_f_sf(y / alpha, m, nu)


def scaled_central_f_quantile(
    prob: float, alpha: float, m: float, nu: float, tol: float = 1e-12
) -> float:
    if not 0.0 < prob < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {prob}")
    return _invert_cdf(
        lambda y: scaled_central_f_cdf(y, alpha, m, nu), prob, tol, start=alpha
    )


# ─── Density ───


def _default_pdf_tol(w: float, tol: Optional[float]) -> float:
    if tol is not None:
        if not tol > 0.0:
            raise DomainError(f"tolerance must be positive, got {tol}")
        return tol
    rel = settings.GENF_PDF_RELATIVE_TOL
    return rel / w if w > 0.0 else rel


def _peak_index(params: GeneralizedFParams, t: float) -> int:
    """Index maximizing x_j = (b)_j / (d)_j t^j; x_{j+1} >= x_j iff j <= (bt - d) / (1 - t)."""
    crossover = (params.half_total * t - params.half_m) / (1.0 - t)
    return math.floor(crossover) + 1 if crossover >= 0.0 else 0


def _log_x(params: GeneralizedFParams, j: int, log_t: float) -> float:
    return pochhammer_log_ratio(params.half_total, params.half_m, j) + j * log_t


def pdf_at_terms(params: GeneralizedFParams, w: float, tau: int) -> SeriesEvaluation:
    """Density partial sum through c_tau with its rigorous tail bound."""
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    if params.is_central:
        value = scaled_central_f_pdf(w, params.alphas[0], params.m_total, params.nu)
        return SeriesEvaluation(value=value, tau_used=0, error_bound=0.0)

    log_pre = params.log_b0 + params.log_b1(w)
    if log_pre == -math.inf:
        return SeriesEvaluation(value=0.0, tau_used=tau, error_bound=0.0)
    c, _ = params.prefix(tau + 1)
    if w == 0.0:
        return SeriesEvaluation(value=c[0] * math.exp(log_pre), tau_used=tau, error_bound=0.0)

    log_t = math.log(params.t(w))
    acc = CompensatedSum()
    log_x = 0.0
    for j in range(tau + 1):
        acc.add(c[j] * math.exp(log_pre + log_x))
        log_x += math.log1p(params.half_nu / (params.half_m + j)) + log_t
    return SeriesEvaluation(
        value=acc.value, tau_used=tau, error_bound=pdf_tail_bound(params, w, tau)
    )


def pdf_tail_bound(params: GeneralizedFParams, w: float, tau: int) -> float:
    """Rigorous density truncation bound B0 B1(w) (1 - S_tau) max_{j > tau} x_j."""
    if params.is_central:
        return 0.0
    log_pre = params.log_b0 + params.log_b1(w)
    if log_pre == -math.inf or w == 0.0:
        return 0.0
    _, sums = params.prefix(tau + 1)
    mass = tail_mass(sums[tau])
    if mass == 0.0:
        return 0.0
    t = params.t(w)
    j = max(tau + 1, _peak_index(params, t))
    return mass * math.exp(log_pre + _log_x(params, j, math.log(t)))


def pdf_error_bound(params: GeneralizedFParams, w: float, tau: int) -> float:
    """Local density truncation estimate c_{tau+1} B0 B1 x_{tau+1} 2F1(b+tau+1, 1; d+tau+2; t)."""
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    if params.is_central:
        return 0.0
    log_pre = params.log_b0 + params.log_b1(w)
    if log_pre == -math.inf or w == 0.0:
        return 0.0
    c, _ = params.prefix(tau + 2)
    c_next = c[tau + 1]
    if c_next == 0.0:
        return 0.0
    t = params.t(w)
    hyp = gauss_2f1(
        HypergeometricArgs(params.half_total + tau + 1, 1.0, params.half_m + tau + 2, t)
    )
    return c_next * math.exp(log_pre + _log_x(params, tau + 1, math.log(t))) * hyp.value


def pdf_series(
    params: GeneralizedFParams, w: float, tol: Optional[float] = None
) -> SeriesEvaluation:
    """Adaptive density: adds terms until the rigorous tail bound is within tol."""
    tol = _default_pdf_tol(w, tol)
    with tracer.start_as_current_span(
        "genf.pdf_series", attributes={"genf.r": params.r, "genf.w": w, "genf.tol": tol}
    ):
        if params.is_central:
            return pdf_at_terms(params, w, 0)
        log_pre = params.log_b0 + params.log_b1(w)
        if log_pre == -math.inf or w == 0.0:
            return pdf_at_terms(params, w, 0)

        t = params.t(w)
        log_t = math.log(t)
        peak = _peak_index(params, t)
        log_peak = _log_x(params, peak, log_t)
        cursor = _CoefficientCursor(params)
        cap = settings.GENF_TERM_CAP

        acc = CompensatedSum()
        log_x = 0.0
        bound = math.inf
        for tau in range(cap):
            c_tau, s_tau = cursor[tau]
            acc.add(c_tau * math.exp(log_pre + log_x))
            log_x += math.log1p(params.half_nu / (params.half_m + tau)) + log_t
            log_max = log_x if tau + 1 >= peak else log_peak
            bound = tail_mass(s_tau) * math.exp(log_pre + log_max)
            if bound <= tol:
                logger.debug("pdf series w=%s converged with tau=%d bound=%.3e", w, tau, bound)
                return SeriesEvaluation(value=acc.value, tau_used=tau, error_bound=bound)

        logger.warning("pdf series w=%s hit the term cap %d bound=%.3e", w, cap, bound)
        return SeriesEvaluation(
            value=acc.value, tau_used=cap - 1, error_bound=bound, converged=False
        )


def pdf_exact_r2(params: GeneralizedFParams, w: float) -> float:
    """Closed-form density for two distinct weights: A B0 B1(w) 2F1(b, m1/2; d; u1 t)."""
    if params.r != 2:
        raise DomainError(
            f"closed-form density needs exactly two distinct weights, got r={params.r}"
        )
    log_pre = params.log_b0 + params.log_b1(w)
    if log_pre == -math.inf:
        return 0.0
    hyp = gauss_2f1(
        HypergeometricArgs(
            params.half_total,
            params.weights.mus[0],
            params.half_m,
            params.weights.u[0] * params.t(w),
        )
    )
    return math.exp(params.weights.log_a_const + log_pre) * hyp.value


def evaluate_pdf(
    params: GeneralizedFParams,
    w: float,
    tol: Optional[float] = None,
    method: PdfMethod | str = PdfMethod.AUTO,
) -> SeriesEvaluation:
    chosen = PdfMethod(method)
    if chosen is PdfMethod.AUTO:
        chosen = PdfMethod.EXACT_R2 if params.r == 2 else PdfMethod.SERIES
    if chosen is PdfMethod.EXACT_R2:
        return SeriesEvaluation(value=pdf_exact_r2(params, w), tau_used=0, error_bound=0.0)
    return pdf_series(params, w, tol)


def global_error_bound(params: GeneralizedFParams, tau: int) -> float:
    """|m| / (alpha_r (|m| + 2(tau + 1))) (1 - S_tau), uniform in w."""
    _, sums = params.prefix(tau + 1)
    scale = params.m_total / params.weights.alpha_r
    return scale / (params.m_total + 2.0 * (tau + 1)) * tail_mass(sums[tau])


def global_tau(params: GeneralizedFParams, tol: float) -> int:
    """Smallest tau whose global density bound is within tol."""
    if not tol > 0.0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    if params.m_total < 2.0:
        logger.warning("global density bound assumes |m| >= 2, got |m|=%s", params.m_total)
    cursor = _CoefficientCursor(params)
    scale = params.m_total / params.weights.alpha_r
    for tau in range(settings.GENF_TERM_CAP):
        _, s_tau = cursor[tau]
        if scale / (params.m_total + 2.0 * (tau + 1)) * tail_mass(s_tau) <= tol:
            return tau
    raise ConvergenceError(
        f"global bound did not reach {tol} within {settings.GENF_TERM_CAP} terms",
        terms=settings.GENF_TERM_CAP,
    )


# ─── Distribution Function ───


def _log_cdf_scale(params: GeneralizedFParams, y: float) -> float:
    """ln[B0 B1(y) y / (|m| / 2)] for y > 0."""
    return params.log_b0 + params.log_b1(y) + math.log(y / params.half_m)


def _cdf_ratio_log(params: GeneralizedFParams, j: int) -> float:
    # ln[(b + j) / (d + 1 + j)]
    return math.log1p((params.half_nu - 1.0) / (params.half_m + 1.0 + j))


def _tail_hypergeometric(params: GeneralizedFParams, tau: int, t: float) -> SeriesEvaluation:
    return gauss_2f1(
        HypergeometricArgs(params.half_total + tau + 1, 1.0, params.half_m + tau + 2, t)
    )


def _clamp_unit(value: float) -> float:
    return min(1.0, max(0.0, value))


def cdf_partial_sum(params: GeneralizedFParams, y: float, tau: int) -> float:
    """Plain partial sum sum_{j<=tau} k_j(y) S_j, a lower estimate of the cdf."""
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    if y < 0.0:
        raise DomainError(f"argument must be nonnegative, got {y}")
    if y == 0.0:
        return 0.0
    if params.is_central:
        return scaled_central_f_cdf(y, params.alphas[0], params.m_total, params.nu)
    _, sums = params.prefix(tau + 1)
    log_t = math.log(params.t(y))
    log_k = _log_cdf_scale(params, y)
    acc = CompensatedSum()
    for j in range(tau + 1):
        acc.add(math.exp(log_k) * sums[j])
        log_k += _cdf_ratio_log(params, j) + log_t
    return acc.value


def cdf_at_terms(params: GeneralizedFParams, y: float, tau: int) -> SeriesEvaluation:
    """Enhanced estimate at a fixed tau: partial sum plus the 2F1 completion of its tail.

    The estimate is an upper bound on the cdf; the true value lies within
    `error_bound` below it.
    """
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    if y < 0.0:
        raise DomainError(f"argument must be nonnegative, got {y}")
    if y == 0.0:
        return SeriesEvaluation(value=0.0, tau_used=tau, error_bound=0.0)
    if params.is_central:
        value = scaled_central_f_cdf(y, params.alphas[0], params.m_total, params.nu)
        return SeriesEvaluation(value=value, tau_used=0, error_bound=0.0)

    _, sums = params.prefix(tau + 2)
    t = params.t(y)
    log_t = math.log(t)
    log_k = _log_cdf_scale(params, y)
    acc = CompensatedSum()
    for j in range(tau + 1):
        acc.add(math.exp(log_k) * sums[j])
        log_k += _cdf_ratio_log(params, j) + log_t
    k_next = math.exp(log_k)
    hyp = _tail_hypergeometric(params, tau, t)
    acc.add(k_next * hyp.value)
    bound = tail_mass(sums[tau + 1]) * k_next * hyp.value + k_next * hyp.error_bound
    return SeriesEvaluation(value=_clamp_unit(acc.value), tau_used=tau, error_bound=bound)


def cdf_error_bound(params: GeneralizedFParams, y: float, tau: int) -> float:
    """e*_tau(y) = (1 - S_{tau+1}) k_{tau+1}(y) 2F1(b+tau+1, 1; d+tau+2; t(y))."""
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    if y < 0.0:
        raise DomainError(f"argument must be nonnegative, got {y}")
    if y == 0.0 or params.is_central:
        return 0.0
    _, sums = params.prefix(tau + 2)
    mass = tail_mass(sums[tau + 1])
    if mass == 0.0:
        return 0.0
    t = params.t(y)
    log_t = math.log(t)
    log_k = _log_cdf_scale(params, y)
    for j in range(tau + 1):
        log_k += _cdf_ratio_log(params, j) + log_t
    return mass * math.exp(log_k) * _tail_hypergeometric(params, tau, t).value


def _default_tol(tol: Optional[float]) -> float:
    if tol is None:
        return settings.GENF_DEFAULT_TOL
    if not tol > 0.0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    return tol


def cdf_series(
    params: GeneralizedFParams, y: float, tol: Optional[float] = None
) -> SeriesEvaluation:
    """P[W <= y] by the enhanced estimate, with tau grown until e*_tau(y) <= tol."""
    tol = _default_tol(tol)
    if y < 0.0:
        raise DomainError(f"argument must be nonnegative, got {y}")
    with tracer.start_as_current_span(
        "genf.cdf_series", attributes={"genf.r": params.r, "genf.y": y, "genf.tol": tol}
    ):
        if y == 0.0:
            return SeriesEvaluation(value=0.0, tau_used=0, error_bound=0.0)
        if math.isinf(y):
            return SeriesEvaluation(value=1.0, tau_used=0, error_bound=0.0)
        if params.is_central:
            return cdf_at_terms(params, y, 0)

        t = params.t(y)
        log_t = math.log(t)
        log_k = _log_cdf_scale(params, y)
        cursor = _CoefficientCursor(params)
        cap = settings.GENF_TERM_CAP

        head = CompensatedSum()
        value = math.nan
        bound = math.inf
        for tau in range(cap):
            _, s_tau = cursor[tau]
            head.add(math.exp(log_k) * s_tau)
            log_k += _cdf_ratio_log(params, tau) + log_t
            _, s_next = cursor[tau + 1]
            k_next = math.exp(log_k)
            # 2F1 >= 1, so the bound cannot pass before this prefactor does
            prefactor = tail_mass(s_next) * k_next
            if prefactor > tol and tau < cap - 1:
                continue
            try:
                hyp = _tail_hypergeometric(params, tau, t)
            except ConvergenceError:
                logger.warning("cdf tail 2F1 did not converge at y=%s tau=%d", y, tau)
                return SeriesEvaluation(
                    value=_clamp_unit(head.value), tau_used=tau, error_bound=1.0, converged=False
                )
            value = _clamp_unit(head.value + k_next * hyp.value)
            bound = prefactor * hyp.value + k_next * hyp.error_bound
            if bound <= tol:
                logger.debug("cdf series y=%s converged with tau=%d bound=%.3e", y, tau, bound)
                return SeriesEvaluation(value=value, tau_used=tau, error_bound=bound)

        logger.warning("cdf series y=%s hit the term cap %d bound=%.3e", y, cap, bound)
        return SeriesEvaluation(
            value=value, tau_used=cap - 1, error_bound=min(bound, 1.0), converged=False
        )


def survival(
    params: GeneralizedFParams, y: float, tol: Optional[float] = None
) -> SeriesEvaluation:
    """P[W > y] = 1 - cdf, with the cdf's error bound."""
    tol = _default_tol(tol)
    if y < 0.0:
        raise DomainError(f"argument must be nonnegative, got {y}")
    if params.is_central:
        value = scaled_central_f_sf(y, params.alphas[0], params.m_total, params.nu)
        return SeriesEvaluation(value=value, tau_used=0, error_bound=0.0)
    evaluation = cdf_series(params, y, tol)
    return evaluation.model_copy(update={"value": _clamp_unit(1.0 - evaluation.value)})


# ─── Quantile ───


def _invert_cdf(
    cdf: Callable[[float], float], prob: float, tol: float, start: float
) -> float:
    """Bracket by doubling from [0, start], then bisect until |cdf(y) - prob| <= tol."""
    lo, hi = 0.0, start
    for _ in range(_BRACKET_MAX_DOUBLINGS):
        if cdf(hi) >= prob:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError(f"could not bracket the {prob} quantile")

    for _ in range(_BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        value = cdf(mid)
        if abs(value - prob) <= tol:
            return mid
        if value < prob:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * math.ulp(hi):
            return 0.5 * (lo + hi)
    raise ConvergenceError(
        f"bisection for the {prob} quantile did not converge", terms=_BISECTION_MAX_ITER
    )


def quantile(params: GeneralizedFParams, prob: float, tol: Optional[float] = None) -> float:
    """y with |cdf(y) - prob| <= tol."""
    tol = _default_tol(tol)
    if not 0.0 < prob < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {prob}")
    inner_tol = 0.1 * tol

    def _cdf(y: float) -> float:
        evaluation = cdf_series(params, y, inner_tol)
        if not evaluation.converged:
            raise ConvergenceError(f"cdf did not converge at y={y} while inverting")
        return evaluation.value

    with tracer.start_as_current_span(
        "genf.quantile", attributes={"genf.r": params.r, "genf.prob": prob, "genf.tol": tol}
    ):
        if params.is_central:
            return scaled_central_f_quantile(
                prob, params.alphas[0], params.m_total, params.nu, tol
            )
        return _invert_cdf(_cdf, prob, tol, start=params.a)


# ─── Stochastic Bounds ───


def stochastic_bounds(params: GeneralizedFParams, y: float) -> tuple[float, float]:
    """Tail interval from the largest and the geometric-mean weight (unit dofs only).

    F(r, nu) scaled by alpha_1 is stochastically larger than W, which is larger
    than F(r, nu) scaled by the geometric mean alpha*.
    """
    if any(m != 1.0 for m in params.source_ms):
        raise DomainError("stochastic bounds are defined for unit degrees of freedom only")
    if y < 0.0:
        raise DomainError(f"argument must be nonnegative, got {y}")
    alphas = params.source_alphas
    r = len(alphas)
    geometric = math.exp(math.fsum(math.log(alpha) for alpha in alphas) / r)
    lower = central_f_sf(y / geometric, r, params.nu)
    upper = central_f_sf(y / max(alphas), r, params.nu)
    return lower, upper
