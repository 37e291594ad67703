"""Enums used across the generalized F engine."""

from enum import Enum


class Quantity(str, Enum):
    """Distribution quantities exposed by `dist`."""
    PDF = "pdf"
    CDF = "cdf"
    SF = "sf"
    QUANTILE = "quantile"


class PdfMethod(str, Enum):
    """How a density is evaluated."""
    SERIES = "series"
    EXACT_R2 = "exact-r2"
    AUTO = "auto"


class CoefficientMethod(str, Enum):
    """Algorithms for the mixture coefficients c_j."""
    SYMFUN = "symfun"
    KJB = "kjb"
