"""
Tool: solve_system
Solve the Euler-Lagrange integral system from a perturbed bubble
"""

import logging

from engine.extremal import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    default_initial_state,
    el_residual,
    envelope_constant,
    growth_limits,
    solve_system,
    system_report,
)
from engine.params import QuadSpec
from tools.common import dump_report, error_envelope, make_report

logger = logging.getLogger(__name__)

DEFAULT_EXPONENT = 2.0


def run_solve_system(
    n: int,
    p_exp: float = DEFAULT_EXPONENT,
    seed: int = 0,
    max_iter: int | None = None,
    tol: float | None = None,
    quad: QuadSpec | None = None,
    header: dict | None = None,
) -> dict:
    """Solver report with growth limits, the envelope constant and the profiles as a table.

    Raises:
        ConvergenceError: when the iteration budget runs out.
    """
    quad = quad or QuadSpec()
    tol = tol or DEFAULT_TOL
    init = default_initial_state(n, p_exp, seed=seed)
    state = solve_system(n, p_exp, init=init, spec=quad, max_iter=max_iter or DEFAULT_MAX_ITER, tol=tol, seed=seed)
    residuals = el_residual(state)
    limits = growth_limits(state, state.quad)
    radii = state.u.radii
    body = {
        **system_report(state),
        "final_residuals": residuals.to_dict(),
        "growth_limits": limits.to_dict(),
        "envelope_constant": envelope_constant(state),
        "seed": seed,
        "pass": state.converged,
        "table": {
            "columns": ["r", "u", "v"],
            "rows": [list(row) for row in zip(radii.tolist(), state.u.evaluate(radii).tolist(), state.v.evaluate(radii).tolist())],
        },
    }
    return make_report(header or {}, body, rel_err=residuals.worst)


async def solve_system_tool(n: int = 1, p: float = DEFAULT_EXPONENT, seed: int = 20240601, max_iter: int = DEFAULT_MAX_ITER) -> str:
    """Solve u = T(v), v = T(u) with q = 1 + 2n/p from a seeded perturbed bubble.

    Args:
        n: Dimension (positive integer, default: 1)
        p: System exponent p > 0 (default: 2)
        seed: Seed of the initial perturbation (default: 20240601)
        max_iter: Iteration budget (default: 200)

    Returns:
        JSON string with residual history, fitted bubble parameters and growth limits.
    """
    try:
        header = {"command": "solve-system", "n": n, "p": p, "seed": seed, "max_iter": max_iter}
        return dump_report(run_solve_system(n, p, seed, max_iter, header=header))
    except Exception as e:
        logger.error(f"Error in solve_system_tool for n={n}, p={p}: {e}", exc_info=True)
        return error_envelope(f"Failed to solve the integral system for n={n}, p={p}", e)
