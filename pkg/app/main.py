"""Main entry point for genf-engine."""

import sys
from typing import Optional, Sequence

from app.core.config import settings
from app.core.errors import ConvergenceError, GenFError, UsageError
from app.core.logging import flush_telemetry, logger

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one CLI command and return its exit code."""
    from app.cli.commands import run_command
    from app.cli.output import render
    from app.cli.parser import build_parser

    try:
        args = build_parser().parse_args(argv)
        logger.info(
            "Starting genf-engine",
            extra={
                "command": args.command,
                "default_tol": settings.GENF_DEFAULT_TOL,
                "log_level": settings.LOG_LEVEL,
            },
        )
        record = run_command(args)
    except UsageError as exc:
        print(f"genf: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        logger.error("Numerical non-convergence: %s", exc)
        print(f"genf: did not converge: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (GenFError, OSError) as exc:
        print(f"genf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    print(render(record, args.json))
    return EXIT_OK if record.converged else EXIT_NOT_CONVERGED


def run() -> None:
    code = main()
    flush_telemetry(shutdown=True)
    sys.exit(code)


if __name__ == "__main__":
    run()
