"""
Tool: verify
Check the reversed inequality I(f, g) >= C ||f||_p ||g||_r for one pair of profiles
"""

import logging

from engine.params import Params, QuadSpec
from engine.quadrature import verify_inequality
from tools.common import dump_report, error_envelope, make_report, parse_profile

logger = logging.getLogger(__name__)


def run_verify(
    n: int,
    lam: float,
    p: float | None = None,
    r: float | None = None,
    f: str = "ball",
    g: str | None = None,
    quad: QuadSpec | None = None,
    header: dict | None = None,
) -> dict:
    """Verification report {n, p, r, lambda, lhs, rhs_lower, rhs_printed, rhs_sharp, margin, rel_err_estimate, pass}."""
    params = Params.resolve(n, lam, p, r)
    f_profile = parse_profile(f, params)
    g_profile = f_profile if g is None or g == f else parse_profile(g, params)
    result = verify_inequality(f_profile, g_profile, params, quad or QuadSpec())
    warnings = []
    if result.rhs_sharp is None:
        warnings.append("sharp constant applies only to diagonal exponents with 0 < lambda < n; checked the provable layer-cake bound")
    body = {**result.to_dict(), "f": f, "g": g or f}
    body["table"] = {
        "columns": ["n", "p", "r", "lambda", "lhs", "rhs_lower", "rhs_sharp", "margin", "pass"],
        "rows": [[result.n, result.p, result.r, result.lam, result.lhs, result.rhs_lower, result.rhs_sharp, result.margin, result.passed]],
    }
    return make_report(header or {}, body, rel_err=result.rel_err_estimate, warnings=warnings)


async def verify_tool(
    n: int,
    lam: float,
    p: float | None = None,
    r: float | None = None,
    f: str = "ball",
    g: str | None = None,
) -> str:
    """Check the reversed Hardy-Littlewood-Sobolev inequality for radial profiles.

    Args:
        n: Dimension (positive integer)
        lam: Kernel exponent lambda > 0
        p: Exponent of f in (0, 1); defaults to the diagonal value
        r: Exponent of g in (0, 1); computed from p when omitted
        f: Profile of f: "ball", "bubble:<a>:<b>" or "file:<path>" (default: "ball")
        g: Profile of g, same syntax (default: same as f)

    Returns:
        JSON string with both sides of the inequality and the pass flag.
    """
    try:
        header = {"command": "verify", "n": n, "lambda": lam, "p": p, "r": r, "f": f, "g": g}
        return dump_report(run_verify(n, lam, p, r, f, g, header=header))
    except Exception as e:
        logger.error(f"Error in verify_tool for n={n}, lambda={lam}: {e}", exc_info=True)
        return error_envelope(f"Failed to verify the inequality for n={n}, lambda={lam}", e)
