"""Seeded Monte Carlo draws of the generalized F law."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from typing import Optional

import numpy as np
import numpy.typing as npt

from app.core.config import settings
from app.core.errors import DomainError
from app.core.logging import logger, tracer
from app.numerics.linalg import FloatArray
from app.services.distribution_service import GeneralizedFParams

_SEED_LIMIT = 2**64


@dataclass(frozen=True, eq=False)
class SamplerConfig:
    """Draw count and seed for one sampling run.

    Output depends only on (params, n, seed, chunk_size); the worker count
    changes wall time, never the values.
    """

    params: GeneralizedFParams
    n: int
    seed: int
    chunk_size: Optional[int] = None
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"sample size must be positive, got {self.n}")
        if not 0 <= self.seed < _SEED_LIMIT:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.chunk_size is not None and self.chunk_size < 1:
            raise DomainError(f"chunk size must be positive, got {self.chunk_size}")


def _draw_chunk(
    params: GeneralizedFParams, seed: np.random.SeedSequence, size: int
) -> FloatArray:
    rng = np.random.Generator(np.random.Philox(seed))
    numerator = np.zeros(size)
    for alpha, m in zip(params.alphas, params.ms):
        numerator += alpha * rng.chisquare(m, size)
    denominator = rng.chisquare(params.nu, size)
    return (numerator / params.m_total) / (denominator / params.nu)


def sample(cfg: SamplerConfig) -> FloatArray:
    """n draws; chunk i uses the i-th child of SeedSequence(seed) on a Philox stream."""
    chunk = cfg.chunk_size or settings.MC_CHUNK_SIZE
    full, rest = divmod(cfg.n, chunk)
    sizes = [chunk] * full + ([rest] if rest else [])
    children = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    with tracer.start_as_current_span(
        "mc.sample", attributes={"n": cfg.n, "seed": str(cfg.seed), "chunks": len(sizes)}
    ):
        with ThreadPoolExecutor(max_workers=cfg.workers or settings.MC_WORKERS) as executor:
            parts = list(executor.map(_draw_chunk, repeat(cfg.params), children, sizes))
        logger.debug("Drew %d samples in %d chunks", cfg.n, len(sizes))
        return np.concatenate(parts)


def empirical_cdf(samples: npt.ArrayLike, y: float) -> float:
    """Fraction of samples <= y."""
    values = np.asarray(samples, dtype=np.float64)
    if values.size == 0:
        raise DomainError("empirical cdf needs at least one sample")
    return float(np.count_nonzero(values <= y)) / values.size
