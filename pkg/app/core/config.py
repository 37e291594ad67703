import os
from functools import lru_cache
from typing import Optional

from pydantic_settings import BaseSettings
from pydantic import Field


class Settings(BaseSettings):
    """Configuration for the generalized F engine."""

    # Service metadata
    PROJECT_NAME: str = "Generalized F Engine"
    VERSION: str = "0.1.0"

    # Logging & Observability
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv(
        "LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    ENABLE_OTEL_TRACING: str = Field(default="false")
    OTEL_INGESTION_KEY: Optional[str] = Field(default=None)
    OTEL_SERVICE_NAME: str = Field(default="genf-engine")
    OTEL_EXPORTER_OTLP_ENDPOINT: str = Field(default="http://localhost:4317")
    OTEL_SERVICE_ENVIRONMENT: str = Field(default="development")

    # Tolerances: cdf / p-value tolerance; the pdf stops once w * bound <= GENF_PDF_RELATIVE_TOL
    GENF_DEFAULT_TOL: float = Field(default=1e-4, gt=0)
    GENF_PDF_RELATIVE_TOL: float = Field(default=1e-4, gt=0)

    # Series caps
    GENF_TERM_CAP: int = Field(default=10_000, ge=1)
    HYP2F1_TERM_CAP: int = Field(default=100_000, ge=1)
    HYP2F1_REL_TOL: float = Field(default=1e-14, gt=0)

    # Mixture coefficients: "symfun" (elementary symmetric recursion) or "kjb"
    COEFFICIENT_METHOD: str = Field(default="symfun")
    WEIGHT_MERGE_RTOL: float = Field(default=1e-12, ge=0)

    # Linear algebra
    JACOBI_MAX_SWEEPS: int = Field(default=50, ge=1)

    # Outlier screening
    SCREEN_MAX_SUBSETS: int = Field(default=1_000_000, ge=1)
    SCREEN_WORKERS: int = Field(default=4, ge=1)

    # Monte Carlo
    MC_CHUNK_SIZE: int = Field(default=65_536, ge=1)
    MC_WORKERS: int = Field(default=4, ge=1)

    # Table 1 reproduction
    TABLE1_TAIL_TOL: float = Field(default=1e-7, gt=0)

    class Config:
        case_sensitive = True
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
