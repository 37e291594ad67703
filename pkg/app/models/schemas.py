"""Pydantic schemas for evaluation results and CLI output records."""

from typing import Any, Optional

from pydantic import BaseModel, Field


# ─── Series Evaluation ───


class SeriesEvaluation(BaseModel):
    """A truncated-series value with its truncation bookkeeping.

    `error_bound` bounds |value - exact value|; `converged` is true when the
    bound met the requested tolerance before the term cap.
    """
    value: float
    tau_used: int = Field(ge=0)
    error_bound: float = Field(ge=0.0)
    converged: bool = True


# ─── Application Reports ───


class SubsetReport(BaseModel):
    """Cook's D_I result for one deletion subset (1-based row labels)."""
    subset: list[int]
    leverages: list[float]
    d_stat: float
    nu: int
    p_lower: float
    p_upper: float
    p_exact: Optional[float] = None
    p_exact_error: Optional[float] = None
    tau_used: Optional[int] = None
    converged: Optional[bool] = None


class Table1Row(BaseModel):
    """One row of the misspecified type I error table."""
    rho: float
    pis: list[float]
    tau1: int
    tau2: int
    tau3: int
    tail: float
    tail_error: float


# ─── CLI Output ───


class OutputRecord(BaseModel):
    """Structured result of one CLI invocation."""
    command: str
    inputs: dict[str, Any] = Field(default_factory=dict)
    values: dict[str, Any] = Field(default_factory=dict)
    tau_used: Optional[int] = None
    error_bound: Optional[float] = None
    converged: bool = True
    wall_time: float = 0.0
