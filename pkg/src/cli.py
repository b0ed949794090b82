"""
rhls command-line front end

Exit codes: 0 when every check passes, 1 for usage and domain errors,
2 for failed checks and numerical failures.
"""

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from config import Command, ExperimentConfig, OutputFormat, load_config, setup_logging
from engine.errors import DomainError, RHLSError
from tools.common import dump_report, quad_with_tol
from tools.constants import run_constants
from tools.log_limit import run_log_limit
from tools.minimize import run_minimize
from tools.rearrange import run_rearrange
from tools.solve_system import DEFAULT_EXPONENT, run_solve_system
from tools.spheres import run_spheres
from tools.verify import run_verify

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="rhls",
        description="Reversed Hardy-Littlewood-Sobolev experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="profiles: ball | bubble:<a>:<b> | file:<path>",
    )
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("--n", type=int, help="dimension")
    parser.add_argument("--p", type=float, help="exponent of f (system exponent for solve-system and spheres)")
    parser.add_argument("--r", type=float, help="exponent of g")
    parser.add_argument("--lambda", dest="lam", type=float, help="kernel exponent")
    parser.add_argument("--f", help="profile of f")
    parser.add_argument("--g", help="profile of g")
    parser.add_argument("--center", type=float, nargs="+", help="inversion center (spheres)")
    parser.add_argument("--radius", type=float, help="inversion radius (spheres)")
    parser.add_argument("--samples", type=int, help="sample points (spheres)")
    parser.add_argument("--cases", type=int, help="random cases (rearrange)")
    parser.add_argument("--max-iter", dest="max_iter", type=int, help="iteration budget")
    parser.add_argument("--config", help="flat JSON config; flags override its values")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--strict", action="store_true", default=None, help="treat a pole of the printed constant as an error")
    return parser


def run_experiment(config: ExperimentConfig) -> dict:
    """Dispatch one experiment and return its report."""
    header = config.report_header()
    quad = quad_with_tol(config.quad, config.tol)
    match config.command:
        case Command.CONSTANTS:
            return run_constants(config.n, config.lam, config.p, config.r, config.strict, header=header)
        case Command.VERIFY:
            return run_verify(config.n, config.lam, config.p, config.r, config.f, config.g, quad, header=header)
        case Command.REARRANGE:
            f = None if config.f == "ball" else config.f
            return run_rearrange(config.n, config.lam, config.cases, config.seed, f, config.g, quad, header=header)
        case Command.MINIMIZE:
            return run_minimize(
                config.n, config.lam, config.p, config.r, config.f, config.max_iter, config.tol, quad, header=header
            )
        case Command.SOLVE_SYSTEM:
            p_exp = config.p if config.p is not None else DEFAULT_EXPONENT
            return run_solve_system(config.n, p_exp, config.seed, config.max_iter, config.tol, quad, header=header)
        case Command.SPHERES:
            p_exp = config.p if config.p is not None else DEFAULT_EXPONENT
            return run_spheres(
                config.n,
                p_exp,
                center=config.center,
                radius=config.radius,
                samples=config.samples,
                seed=config.seed,
                quad=quad,
                header=header,
            )
        case Command.LOG_LIMIT:
            return run_log_limit(config.n, config.f, config.g, quad, header=header)
    raise DomainError(f"unknown command {config.command}")


def render(report: dict, output_format: OutputFormat) -> str:
    """JSON report, or the report's table as CSV with '.' decimals and '\\n' line endings."""
    if output_format is OutputFormat.JSON:
        return dump_report(report) + "\n"
    table = report.get("table")
    if table is None:
        scalars = {k: v for k, v in report.items() if isinstance(v, (int, float, str, bool)) or v is None}
        table = {"columns": list(scalars), "rows": [list(scalars.values())]}
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table["columns"])
    for row in table["rows"]:
        writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    logger.info(f"Report written to {path}")


def run_command(argv: list[str] | None = None) -> int:
    """Parse argv, run the experiment, write the report and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {key: value for key, value in vars(args).items() if key not in ("config", "lam")}
    overrides["lambda"] = args.lam
    try:
        config = load_config(args.config, overrides)
        report = run_experiment(config)
    except (DomainError, ValueError) as e:
        logger.error(f"{args.command}: {e}")
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"rhls: error: {e}\n")
        return EXIT_USAGE
    except RHLSError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        sys.stderr.write(f"rhls: numerical failure: {e}\n")
        return EXIT_FAILURE
    write_output(render(report, config.format), config.out)
    return EXIT_PASS if report.get("pass", True) else EXIT_FAILURE


def main() -> None:
    setup_logging()
    sys.exit(run_command())


if __name__ == "__main__":
    main()
