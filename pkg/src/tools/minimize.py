"""
Tool: minimize
Minimize ||I_lambda f||_q / ||f||_p over radial profiles
"""

import logging

from engine.constants import provable_lower_bound_constant, sharp_reversed_constant
from engine.extremal import DEFAULT_MAX_ITER, DEFAULT_TOL, minimize_quotient
from engine.params import Params, QuadSpec
from engine.profiles import ExtremizerKind, fit_extremizer
from tools.common import dump_report, error_envelope, make_report, parse_profile

logger = logging.getLogger(__name__)


def run_minimize(
    n: int,
    lam: float,
    p: float | None = None,
    r: float | None = None,
    f: str = "ball",
    max_iter: int | None = None,
    tol: float | None = None,
    quad: QuadSpec | None = None,
    header: dict | None = None,
) -> dict:
    """Minimizer report: quotient history, the fitted extremizer and, on the diagonal, the sharp value."""
    quad = quad or QuadSpec()
    params = Params.resolve(n, lam, p, r)
    init = parse_profile(f, params)
    tol = tol or DEFAULT_TOL
    result = minimize_quotient(params, init, quad, max_iter=max_iter or DEFAULT_MAX_ITER, tol=tol)
    warnings = []
    if result.experimental:
        warnings.append("non-diagonal exponents: the fixed-point relation is experimental")
    if not result.monotone:
        warnings.append("quotient did not decrease monotonically along the iteration")
    fit = fit_extremizer(result.f, ExtremizerKind.INEQUALITY_EXTREMIZER, exponent=-(2.0 * n + lam))
    sharp = None
    if params.is_diagonal and 0.0 < lam < n:
        sharp = sharp_reversed_constant(n, lam).value
    # the quotient is bounded below by the sharp constant, else by the provable one
    bound = sharp if sharp is not None else provable_lower_bound_constant(params)
    slack = tol + 10.0 * quad.target_rel_tol
    passed = result.quotient >= bound * (1.0 - slack)
    if not passed:
        warnings.append(f"quotient {result.quotient:.10g} fell below the lower bound {bound:.10g}")
    radii = result.f.radii
    body = {
        **result.to_dict(),
        "n": n,
        "lambda": lam,
        "p": params.p,
        "r": params.r,
        "fit": fit,
        "sharp": sharp,
        "bound": bound,
        "pass": passed,
        "table": {
            "columns": ["r", "f"],
            "rows": [list(row) for row in zip(radii.tolist(), result.f.evaluate(radii).tolist())],
        },
    }
    rel_err = result.residual_history[-1] if result.residual_history else None
    return make_report(header or {}, body, rel_err=rel_err, warnings=warnings)


async def minimize_tool(n: int, lam: float, p: float | None = None, r: float | None = None, f: str = "ball") -> str:
    """Minimize the reversed HLS quotient starting from a radial profile.

    Args:
        n: Dimension (positive integer)
        lam: Kernel exponent lambda > 0
        p: Exponent in (0, 1); defaults to the diagonal value
        r: Second exponent; computed from p when omitted
        f: Initial profile: "ball", "bubble:<a>:<b>" or "file:<path>" (default: "ball")

    Returns:
        JSON string with the minimal quotient, its history and the fitted extremizer.
    """
    try:
        header = {"command": "minimize", "n": n, "lambda": lam, "p": p, "r": r, "f": f}
        return dump_report(run_minimize(n, lam, p, r, f, header=header))
    except Exception as e:
        logger.error(f"Error in minimize_tool for n={n}, lambda={lam}: {e}", exc_info=True)
        return error_envelope(f"Failed to minimize the quotient for n={n}, lambda={lam}", e)
