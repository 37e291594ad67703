"""CSV ingestion for regression tables and square matrices."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from app.core.errors import DataFormatError, DomainError
from app.core.logging import logger
from app.models.domain import INTERCEPT_COLUMN, RegressionData
from app.numerics.linalg import FloatArray

_PANDAS_LINE = re.compile(r"line (\d+)")


@dataclass(frozen=True)
class CsvOptions:
    """How a regression table is read.

    `response` names the response column (or gives its 0-based position when
    the file has no header); the last column is used when it is None.
    """

    response: Optional[str] = None
    header: bool = True
    add_intercept: bool = True


class DatasetRepository:
    """Reads numeric comma-separated tables from disk."""

    def _read_frame(self, path: Path, header: bool) -> pd.DataFrame:
        try:
            return pd.read_csv(
                path,
                header=0 if header else None,
                dtype=str,
                keep_default_na=False,
                skip_blank_lines=False,
                skipinitialspace=True,
            )
        except FileNotFoundError as exc:
            raise DataFormatError(f"cannot read {path}: file not found") from exc
        except pd.errors.EmptyDataError as exc:
            raise DataFormatError(f"{path} is empty") from exc
        except pd.errors.ParserError as exc:
            match = _PANDAS_LINE.search(str(exc))
            line = int(match.group(1)) if match else None
            raise DataFormatError(f"malformed row in {path}: {exc}", line=line) from exc
        except OSError as exc:
            raise DataFormatError(f"cannot read {path}: {exc}") from exc

    def _to_numeric(self, frame: pd.DataFrame, header: bool) -> pd.DataFrame:
        """Convert every cell to float, reporting the file line of the first bad cell."""
        offset = 2 if header else 1
        frame = frame.replace(r"^\s*$", np.nan, regex=True)
        frame = frame.dropna(how="all")
        converted = frame.apply(pd.to_numeric, errors="coerce")
        bad = converted.isna()
        if bad.to_numpy().any():
            row_pos, col_pos = np.argwhere(bad.to_numpy())[0]
            label = frame.index[row_pos]
            column = frame.columns[col_pos]
            raw = frame.iat[row_pos, col_pos]
            what = "missing value" if pd.isna(raw) else f"non-numeric value {raw!r}"
            raise DataFormatError(f"{what} in column {column!r}", line=int(label) + offset)
        return converted.astype(np.float64)

    def load_csv(self, path: str | Path, options: CsvOptions = CsvOptions()) -> RegressionData:
        """Read a regression table; all columns but the response become predictors."""
        path = Path(path)
        frame = self._to_numeric(self._read_frame(path, options.header), options.header)
        if frame.empty:
            raise DataFormatError(f"{path} has no data rows")
        frame.columns = [str(column).strip() for column in frame.columns]

        if options.response is None:
            response = frame.columns[-1]
        elif options.header:
            response = options.response
            if response not in frame.columns:
                raise DomainError(
                    f"response column {response!r} not found; columns are {list(frame.columns)}"
                )
        else:
            try:
                response = frame.columns[int(options.response)]
            except (ValueError, IndexError) as exc:
                raise DomainError(
                    f"without a header the response must be a column position, got {options.response!r}"
                ) from exc

        predictors = [column for column in frame.columns if column != response]
        x = frame[predictors].to_numpy(dtype=np.float64)
        columns = tuple(predictors)
        if options.add_intercept:
            x = np.column_stack([np.ones(len(frame)), x])
            columns = (INTERCEPT_COLUMN, *columns)

        data = RegressionData(
            x0=x,
            y0=frame[response].to_numpy(dtype=np.float64),
            columns=columns,
            response=str(response),
            has_intercept=options.add_intercept,
            source=str(path),
        )
        logger.info("Loaded %s: N=%d k=%d response=%s", path, data.n, data.k, data.response)
        return data

    def load_matrix(self, path: str | Path, header: bool = False) -> FloatArray:
        """Read a square numeric table (e.g. a dispersion matrix)."""
        path = Path(path)
        matrix = self._to_numeric(self._read_frame(path, header), header).to_numpy()
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DataFormatError(f"{path} is not a square matrix (shape {matrix.shape})")
        return matrix


dataset_repository = DatasetRepository()
