"""Argument parsing for the `genf` command line."""

from __future__ import annotations

import argparse
from typing import NoReturn

from app.core.errors import UsageError
from app.models.enums import CoefficientMethod, PdfMethod, Quantity


class GenFArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def float_list(text: str) -> list[float]:
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def int_list(text: str) -> list[int]:
    try:
        values = [int(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from exc
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON record")
    common.add_argument(
        "--tol",
        type=positive_float,
        default=None,
        help="error tolerance (default: GENF_DEFAULT_TOL)",
    )
    return common


def _distribution_options() -> argparse.ArgumentParser:
    dist = argparse.ArgumentParser(add_help=False)
    dist.add_argument("--alphas", type=float_list, required=True, help="weights a1,a2,...")
    dist.add_argument("--ms", type=float_list, required=True, help="degrees of freedom m1,m2,...")
    dist.add_argument("--nu", type=positive_float, required=True, help="denominator dof")
    dist.add_argument(
        "--no-merge", action="store_true", help="keep numerically equal weights separate"
    )
    dist.add_argument(
        "--coefficients",
        choices=[method.value for method in CoefficientMethod],
        default=None,
        help="mixture coefficient recursion (default: COEFFICIENT_METHOD)",
    )
    return dist


def build_parser() -> GenFArgumentParser:
    common = _common_options()
    dist = _distribution_options()

    parser = GenFArgumentParser(
        prog="genf", description="Generalized F distribution and its applications"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    dist_cmd = commands.add_parser(
        "dist", parents=[common, dist], help="pdf, cdf, tail or quantile"
    )
    dist_cmd.add_argument("--at", type=float, required=True, help="argument y (or probability)")
    dist_cmd.add_argument(
        "--what", choices=[q.value for q in Quantity], default=Quantity.CDF.value
    )
    dist_cmd.add_argument(
        "--method", choices=[m.value for m in PdfMethod], default=PdfMethod.AUTO.value
    )

    cookd = commands.add_parser("cookd", parents=[common], help="Cook's D_I joint outliers")
    cookd.add_argument("--data", required=True, help="CSV file")
    cookd.add_argument("--response", default=None, help="response column (default: last)")
    cookd.add_argument("--no-intercept", action="store_true", help="do not prepend an intercept")
    cookd.add_argument("--no-header", action="store_true", help="the CSV has no header row")
    cookd.add_argument("--r", type=int, default=None, help="subset size to screen")
    cookd.add_argument("--subset", type=int_list, default=None, help="1-based labels, e.g. 6,8")
    cookd.add_argument("--level", type=float, default=0.05, help="screening level")

    hotelling = commands.add_parser(
        "hotelling", parents=[common], help="misspecified Hotelling T^2 tail"
    )
    hotelling.add_argument("--sigma", default="identity", help="file | identity[:p] | equicorr:p,rho")
    hotelling.add_argument("--omega", required=True, help="file | identity[:p] | equicorr:p,rho")
    hotelling.add_argument("--N", dest="n", type=int, required=True, help="sample size")
    hotelling.add_argument("--level", type=float, default=0.05, help="nominal test level")
    hotelling.add_argument(
        "--at", type=float, default=None, help="threshold y (default: nominal critical value)"
    )

    table1 = commands.add_parser(
        "table1", parents=[common], help="misspecified type I error table"
    )
    table1.add_argument("--tol-target", type=positive_float, default=1e-4)

    mc = commands.add_parser("mc", parents=[common, dist], help="Monte Carlo sampling")
    mc.add_argument("--n", type=int, required=True, help="number of draws")
    mc.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed")
    mc.add_argument("--at", type=float_list, default=None, help="points for the empirical cdf")
    mc.add_argument("--out", default=None, help="write raw draws, one per line")

    return parser
