"""
Tool: log_limit
Logarithmic limit lambda -> 0 of the diagonal inequality
"""

import logging

from engine.constants import log_limit_constant, sharp_reversed_constant
from engine.params import Params, QuadSpec
from engine.quadrature import verify_log_inequality
from tools.common import dump_report, error_envelope, make_report, parse_profile

logger = logging.getLogger(__name__)

DIFFERENCE_STEP = 1e-6


def run_log_limit(n: int, f: str = "ball", g: str | None = None, quad: QuadSpec | None = None, header: dict | None = None) -> dict:
    """Log-limit constant, its finite-difference cross-check and the log inequality on (f, g)."""
    # bubble profiles are parsed against a small-lambda diagonal tuple
    params = Params.diagonal(n, DIFFERENCE_STEP)
    f_profile = parse_profile(f, params)
    g_profile = f_profile if g is None or g == f else parse_profile(g, params)
    result = verify_log_inequality(f_profile, g_profile, quad or QuadSpec())
    constant = log_limit_constant(n)
    difference = (sharp_reversed_constant(n, DIFFERENCE_STEP).value - 1.0) / DIFFERENCE_STEP
    body = {
        **result.to_dict(),
        "log_limit_constant": constant,
        "finite_difference": difference,
        "f": f,
        "g": g or f,
        "table": {
            "columns": ["n", "lhs", "rhs", "constant", "margin", "pass"],
            "rows": [[n, result.lhs, result.rhs, constant, result.margin, result.passed]],
        },
    }
    return make_report(header or {}, body, rel_err=result.rel_err_estimate)


async def log_limit_tool(n: int, f: str = "ball", g: str | None = None) -> str:
    """Check the logarithmic HLS inequality obtained as lambda -> 0.

    Args:
        n: Dimension (positive integer)
        f: Profile of f: "ball", "bubble:<a>:<b>" or "file:<path>" (default: "ball")
        g: Profile of g, same syntax (default: same as f)

    Returns:
        JSON string with the log-limit constant and both sides of the inequality.
    """
    try:
        return dump_report(run_log_limit(n, f, g, header={"command": "log-limit", "n": n, "f": f, "g": g}))
    except Exception as e:
        logger.error(f"Error in log_limit_tool for n={n}: {e}", exc_info=True)
        return error_envelope(f"Failed to check the log limit for n={n}", e)
