"""Subcommand handlers. Each turns parsed arguments into one OutputRecord."""

from __future__ import annotations

import argparse
import math
import time
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from app.core.config import get_settings
from app.core.errors import UsageError
from app.models.enums import Quantity
from app.models.schemas import OutputRecord
from app.numerics.linalg import FloatArray
from app.repositories.dataset_repository import CsvOptions, dataset_repository
from app.services.diagnostics_service import screen_subsets, subset_p_value
from app.services.distribution_service import (
    GeneralizedFParams,
    cdf_series,
    evaluate_pdf,
    new_generalized_f,
    quantile,
    survival,
)
from app.services.hotelling_service import (
    build_scenario,
    critical_value,
    equicorrelated,
    misspecified_tail,
    table1,
)
from app.services.sampling_service import SamplerConfig, empirical_cdf, sample


def _tol(args: argparse.Namespace) -> float:
    return args.tol if args.tol is not None else get_settings().GENF_DEFAULT_TOL


def _distribution(args: argparse.Namespace) -> GeneralizedFParams:
    if len(args.alphas) != len(args.ms):
        raise UsageError(
            f"--alphas has {len(args.alphas)} entries but --ms has {len(args.ms)}"
        )
    return new_generalized_f(
        args.alphas, args.ms, args.nu, merge=not args.no_merge, method=args.coefficients
    )


def _distribution_inputs(args: argparse.Namespace) -> dict:
    return {"alphas": args.alphas, "ms": args.ms, "nu": args.nu}


def cmd_dist(args: argparse.Namespace) -> OutputRecord:
    params = _distribution(args)
    tol = _tol(args)
    what = Quantity(args.what)
    inputs = {**_distribution_inputs(args), "what": what.value, "at": args.at, "tol": tol}

    if what is Quantity.QUANTILE:
        if not 0.0 < args.at < 1.0:
            raise UsageError(f"--at must be a probability in (0, 1) for quantile, got {args.at}")
        value = quantile(params, args.at, tol)
        return OutputRecord(command="dist", inputs=inputs, values={"quantile": value})

    if args.at < 0.0:
        raise UsageError(f"--at must be nonnegative, got {args.at}")
    if what is Quantity.PDF:
        pdf_tol = args.tol  # None selects the w-relative default
        evaluation = evaluate_pdf(params, args.at, pdf_tol, args.method)
        inputs["method"] = args.method
    elif what is Quantity.CDF:
        evaluation = cdf_series(params, args.at, tol)
    else:
        evaluation = survival(params, args.at, tol)
    return OutputRecord(
        command="dist",
        inputs=inputs,
        values={what.value: evaluation.value},
        tau_used=evaluation.tau_used,
        error_bound=evaluation.error_bound,
        converged=evaluation.converged,
    )


def cmd_cookd(args: argparse.Namespace) -> OutputRecord:
    tol = _tol(args)
    options = CsvOptions(
        response=args.response,
        header=not args.no_header,
        add_intercept=not args.no_intercept,
    )
    data = dataset_repository.load_csv(args.data, options)
    inputs = {"data": args.data, "response": data.response, "n": data.n, "k": data.k, "tol": tol}

    if args.subset is not None:
        if args.r is not None and args.r != len(args.subset):
            raise UsageError(f"--r {args.r} does not match --subset of size {len(args.subset)}")
        report = subset_p_value(data, args.subset, tol)
        return OutputRecord(
            command="cookd",
            inputs={**inputs, "subset": args.subset},
            values=report.model_dump(),
            tau_used=report.tau_used,
            error_bound=report.p_exact_error,
            converged=bool(report.converged),
        )

    if args.r is None:
        raise UsageError("either --r or --subset is required")
    reports = screen_subsets(data, args.r, args.level, tol)
    return OutputRecord(
        command="cookd",
        inputs={**inputs, "r": args.r, "level": args.level},
        values={
            "screened": math.comb(data.n, args.r),
            "retained": [report.model_dump() for report in reports],
        },
        error_bound=max((report.p_exact_error or 0.0 for report in reports), default=None),
        converged=all(report.converged for report in reports),
    )


def _dispersion(text: str, flag: str, order: Optional[int]) -> FloatArray:
    """identity[:p] | equicorr:p,rho | path to a square CSV."""
    name, _, rest = text.partition(":")
    if name == "identity":
        size = int(rest) if rest else order
        if size is None:
            raise UsageError(f"{flag} identity needs an order, e.g. identity:3")
        return np.eye(size)
    if name == "equicorr":
        try:
            p_text, rho_text = rest.split(",")
            return equicorrelated(int(p_text), float(rho_text))
        except ValueError as exc:
            raise UsageError(f"{flag} expects equicorr:p,rho, got {text!r}") from exc
    path = Path(text)
    if not path.is_file():
        raise UsageError(f"{flag}: {text!r} is neither a matrix file nor identity/equicorr")
    return dataset_repository.load_matrix(path)


def cmd_hotelling(args: argparse.Namespace) -> OutputRecord:
    tol = _tol(args)
    omega_first = not args.omega.startswith("identity") or ":" in args.omega
    if omega_first:
        omega = _dispersion(args.omega, "--omega", None)
        sigma = _dispersion(args.sigma, "--sigma", omega.shape[0])
    else:
        sigma = _dispersion(args.sigma, "--sigma", None)
        omega = _dispersion(args.omega, "--omega", sigma.shape[0])
    scenario = build_scenario(sigma, omega, args.n)
    y = args.at if args.at is not None else critical_value(scenario.p, scenario.n, args.level)
    evaluation = misspecified_tail(scenario, y, tol)
    return OutputRecord(
        command="hotelling",
        inputs={"sigma": args.sigma, "omega": args.omega, "N": args.n, "level": args.level, "tol": tol},
        values={
            "pis": [float(pi) for pi in scenario.pis],
            "nu": scenario.nu,
            "y": y,
            "tail": evaluation.value,
        },
        tau_used=evaluation.tau_used,
        error_bound=evaluation.error_bound,
        converged=evaluation.converged,
    )


def cmd_table1(args: argparse.Namespace) -> OutputRecord:
    tail_tol = args.tol if args.tol is not None else get_settings().TABLE1_TAIL_TOL
    rows = table1(tol_target=args.tol_target, tail_tol=tail_tol)
    return OutputRecord(
        command="table1",
        inputs={"tol_target": args.tol_target, "tol": tail_tol},
        values={"rows": [row.model_dump() for row in rows]},
        error_bound=max(row.tail_error for row in rows),
    )


def cmd_mc(args: argparse.Namespace) -> OutputRecord:
    params = _distribution(args)
    tol = _tol(args)
    draws = sample(SamplerConfig(params=params, n=args.n, seed=args.seed))
    if args.out:
        np.savetxt(args.out, draws, fmt="%.17g")

    values: dict = {"mean": float(np.mean(draws))}
    converged = True
    if args.at:
        points = []
        for y in args.at:
            series = cdf_series(params, y, tol)
            converged = converged and series.converged
            points.append(
                {
                    "y": y,
                    "empirical_cdf": empirical_cdf(draws, y),
                    "series_cdf": series.value,
                    "binomial_sd": math.sqrt(series.value * (1.0 - series.value) / args.n),
                }
            )
        values["points"] = points
    return OutputRecord(
        command="mc",
        inputs={**_distribution_inputs(args), "n": args.n, "seed": args.seed, "out": args.out},
        values=values,
        converged=converged,
    )


COMMANDS: dict[str, Callable[[argparse.Namespace], OutputRecord]] = {
    "dist": cmd_dist,
    "cookd": cmd_cookd,
    "hotelling": cmd_hotelling,
    "table1": cmd_table1,
    "mc": cmd_mc,
}


def run_command(args: argparse.Namespace) -> OutputRecord:
    """Dispatch and stamp wall time."""
    started = time.perf_counter()
    record = COMMANDS[args.command](args)
    return record.model_copy(update={"wall_time": time.perf_counter() - started})
