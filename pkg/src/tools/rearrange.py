"""
Tool: rearrange
Symmetric decreasing rearrangement of seeded random step functions
"""

import logging

import numpy as np

from engine.errors import DomainError
from engine.params import Params, QuadSpec
from engine.rearrangement import (
    EXACT_TOLERANCE,
    check_reversed_riesz,
    decreasing_rearrangement,
    distribution_function,
    lp_step,
    random_step_function,
    read_step_json,
)
from tools.common import dump_report, error_envelope, make_report

logger = logging.getLogger(__name__)


def _load_pair(f: str | None, rng: np.random.Generator, n: int):
    if f is not None and f.startswith("file:"):
        step = read_step_json(f.removeprefix("file:"))
        if step.n != n:
            raise DomainError(f"step function lives in R^{step.n}, expected n={n}")
        return step
    if f not in (None, "random"):
        raise DomainError(f"rearrange takes random or file:<path> step functions, got {f!r}")
    return random_step_function(rng, n)


def run_rearrange(
    n: int,
    lam: float,
    cases: int = 1,
    seed: int = 0,
    f: str | None = None,
    g: str | None = None,
    quad: QuadSpec | None = None,
    header: dict | None = None,
) -> dict:
    """Equimeasurability, L^p invariance and I(f, g) >= I(f*, g*) on `cases` seeded pairs."""
    params = Params.diagonal(n, lam)
    quad = quad or QuadSpec()
    rng = np.random.default_rng(seed)
    rows = []
    passed = True
    for case in range(cases):
        f_step = _load_pair(f, rng, n)
        g_step = _load_pair(g, rng, n)
        f_star = decreasing_rearrangement(f_step)
        levels = sorted(set(f_step.levels))
        equimeasurable = all(
            abs(float(distribution_function(f_step, a)) - float(distribution_function(f_star, a))) <= EXACT_TOLERANCE
            for a in [0.0, *levels]
        )
        norm_f = lp_step(f_step, params.p)
        norm_star = lp_step(f_star, params.p)
        norm_ok = abs(norm_f - norm_star) <= EXACT_TOLERANCE * max(1.0, abs(norm_f))
        riesz = check_reversed_riesz(f_step, g_step, lam, quad)
        ok = equimeasurable and norm_ok and riesz.passed
        passed = passed and ok
        rows.append([case, equimeasurable, norm_f, norm_star, riesz.lhs, riesz.rhs, ok])
        logger.debug(f"Rearrangement case {case}: pass={ok}")
    body = {
        "n": n,
        "lambda": lam,
        "p": params.p,
        "cases": cases,
        "seed": seed,
        "pass": passed,
        "table": {
            "columns": ["case", "equimeasurable", "lp_f", "lp_f_star", "I_f_g", "I_f_star_g_star", "pass"],
            "rows": rows,
        },
    }
    rel_err = 0.0 if n == 1 else quad.target_rel_tol
    return make_report(header or {}, body, rel_err=rel_err)


async def rearrange_tool(n: int, lam: float, cases: int = 1, seed: int = 20240601) -> str:
    """Rearrangement checks on seeded random step functions.

    Args:
        n: Dimension (positive integer)
        lam: Kernel exponent lambda > 0
        cases: Number of random pairs (default: 1)
        seed: Random seed (default: 20240601)

    Returns:
        JSON string with one row per pair and an overall pass flag.
    """
    try:
        header = {"command": "rearrange", "n": n, "lambda": lam, "cases": cases, "seed": seed}
        return dump_report(run_rearrange(n, lam, cases, seed, header=header))
    except Exception as e:
        logger.error(f"Error in rearrange_tool for n={n}, lambda={lam}: {e}", exc_info=True)
        return error_envelope(f"Failed to run rearrangement checks for n={n}, lambda={lam}", e)
