"""In-memory domain objects backed by numpy arrays."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from app.core.errors import DomainError
from app.numerics.linalg import FloatArray, cholesky

INTERCEPT_COLUMN = "intercept"


@dataclass(frozen=True, eq=False)
class RegressionData:
    """Design X0 (N x k, intercept first when present) and response Y0.

    Observations are addressed by 1-based labels 1..N.
    """

    x0: FloatArray
    y0: FloatArray
    columns: tuple[str, ...] = ()
    response: str = "y"
    has_intercept: bool = False
    source: str = field(default="<memory>")

    def __post_init__(self) -> None:
        x = np.asarray(self.x0, dtype=np.float64)
        y = np.asarray(self.y0, dtype=np.float64)
        if x.ndim != 2:
            raise DomainError(f"design must be two-dimensional, got shape {x.shape}")
        n_rows, n_cols = x.shape
        if n_cols < 1:
            raise DomainError("design needs at least one column")
        if y.shape != (n_rows,):
            raise DomainError(f"response has shape {y.shape}, expected ({n_rows},)")
        if n_rows <= n_cols:
            raise DomainError(f"need more observations than columns (N={n_rows}, k={n_cols})")
        object.__setattr__(self, "x0", x)
        object.__setattr__(self, "y0", y)
        if not self.columns:
            object.__setattr__(self, "columns", tuple(f"x{i}" for i in range(n_cols)))
        # full column rank, checked on the conditioned design
        cholesky(self.conditioned.T @ self.conditioned)

    @property
    def n(self) -> int:
        return self.x0.shape[0]

    @property
    def k(self) -> int:
        return self.x0.shape[1]

    @property
    def labels(self) -> range:
        return range(1, self.n + 1)

    @cached_property
    def conditioned(self) -> FloatArray:
        """Same column space as X0: non-intercept columns centred when an
        intercept is present, then every column scaled to unit norm."""
        x = self.x0.copy()
        if self.has_intercept:
            x[:, 1:] -= x[:, 1:].mean(axis=0)
        norms = np.linalg.norm(x, axis=0)
        if np.any(norms == 0.0):
            raise DomainError("design has a constant or all-zero column besides the intercept")
        return x / norms
