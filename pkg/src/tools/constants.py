"""
Tool: constants
Closed-form constants of the reversed inequality at one (n, lambda)
"""

import logging

from engine.constants import (
    UNVALIDATED_REGIME,
    classical_hls_constants,
    log_limit_constant,
    lower_bound_constant,
    printed_reversed_constant,
    provable_lower_bound_constant,
    sharp_reversed_constant,
)
from engine.errors import PoleError
from engine.params import Params
from tools.common import dump_report, error_envelope, make_report

logger = logging.getLogger(__name__)

SWEEP_POINTS = 20


def run_constants(n: int, lam: float, p: float | None = None, r: float | None = None, strict: bool = False, header: dict | None = None) -> dict:
    """Sharp, printed, explicit and log-limit constants, plus a lambda sweep table.

    Raises:
        PoleError: in strict mode when the printed form sits on a Gamma pole.
        DomainError: for invalid (n, lambda, p, r).
    """
    warnings = []
    sharp = sharp_reversed_constant(n, lam)
    if sharp.regime == UNVALIDATED_REGIME:
        warnings.append(f"lambda={lam} lies outside (0, n); sharp constant flagged {UNVALIDATED_REGIME}")

    try:
        printed = printed_reversed_constant(n, lam).to_dict()
    except PoleError as e:
        if strict:
            raise
        logger.warning(f"Printed constant has a pole at n={n}, lambda={lam}: {e}")
        printed = {"value": None, "regime": "pole", "argument": e.argument}
        warnings.append(str(e))

    params = Params.resolve(n, lam, p, r)
    classical = None
    if lam < n:
        classical = classical_hls_constants(n, lam, 2.0 * n / (2.0 * n - lam)).to_dict()

    step = n / SWEEP_POINTS
    rows = []
    for k in range(1, SWEEP_POINTS):
        value = sharp_reversed_constant(n, k * step).value
        rows.append([k * step, value])

    body = {
        "n": n,
        "lambda": lam,
        "p": params.p,
        "r": params.r,
        "sharp": sharp.to_dict(),
        "printed": printed,
        "lower_bound": lower_bound_constant(params),
        "provable_lower_bound": provable_lower_bound_constant(params),
        "classical_hls": classical,
        "log_limit": log_limit_constant(n),
        "pass": True,
        "table": {"columns": ["lambda", "sharp"], "rows": rows},
    }
    return make_report(header or {}, body, rel_err=0.0, warnings=warnings)


async def constants_tool(n: int, lam: float, p: float | None = None, r: float | None = None) -> str:
    """Closed-form constants of the reversed HLS inequality.

    Args:
        n: Dimension (positive integer)
        lam: Kernel exponent lambda > 0
        p: Exponent of f in (0, 1); defaults to the diagonal value 2n/(2n + lambda)
        r: Exponent of g in (0, 1); computed from p when omitted

    Returns:
        JSON string with the sharp, printed, explicit and log-limit constants.
    """
    try:
        return dump_report(run_constants(n, lam, p, r, header={"command": "constants", "n": n, "lambda": lam}))
    except Exception as e:
        logger.error(f"Error in constants_tool for n={n}, lambda={lam}: {e}", exc_info=True)
        return error_envelope(f"Failed to compute constants for n={n}, lambda={lam}", e)
