"""
Tool: spheres
Conformal residual and sampled critical radius for the bubble solution
"""

import logging

import numpy as np

from engine.extremal import bubble_height, exact_bubble_state
from engine.params import QuadSpec
from engine.spheres import CriticalSearch, PointFunction, SphereMap, critical_radius, residual_report
from tools.common import dump_report, error_envelope, make_report

logger = logging.getLogger(__name__)

DEFAULT_EXPONENT = 2.0
RESIDUAL_TOLERANCE = 1e-4


def run_spheres(
    n: int,
    p_exp: float = DEFAULT_EXPONENT,
    b: float = 1.0,
    center: list[float] | None = None,
    radius: float | None = None,
    samples: int = 64,
    seed: int = 0,
    quad: QuadSpec | None = None,
    header: dict | None = None,
) -> dict:
    """Residual of the transformed system and lambda-bar(center) for the bubble with parameter b.

    The conformal residual needs an inversion centered at the origin; for
    other centers only the critical radius is reported.
    """
    quad = quad or QuadSpec()
    x = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    sphere = SphereMap(center=x, radius=radius if radius is not None else b)
    warnings = []
    residual = None
    if np.all(sphere.center == 0.0):
        state = exact_bubble_state(n, p_exp, b)
        residual = residual_report(state, sphere, samples, seed, quad)
    else:
        warnings.append("conformal residual skipped: the inversion is not centered at the origin")

    bubble = PointFunction.bubble(bubble_height(n, p_exp, b), b, p_exp)
    search = critical_radius(bubble, bubble, p_exp, x, CriticalSearch(seed=seed))
    warnings.extend(search.warnings)
    passed = residual is None or residual["residual"] < RESIDUAL_TOLERANCE
    body = {
        "n": n,
        "p": p_exp,
        "b": b,
        "map": sphere.to_dict(),
        "residual_report": residual,
        "critical_radius": search.to_dict(),
        "pass": passed,
    }
    return make_report(header or {}, body, rel_err=None if residual is None else residual["residual"], warnings=warnings)


async def spheres_tool(n: int = 1, p: float = DEFAULT_EXPONENT, b: float = 1.0, center: list[float] | None = None, radius: float | None = None) -> str:
    """Moving-spheres diagnostics for the bubble solution of the integral system.

    Args:
        n: Dimension (positive integer, default: 1)
        p: System exponent p > 0 (default: 2)
        b: Bubble parameter b > 0 (default: 1)
        center: Inversion center as a list of n coordinates (default: origin)
        radius: Inversion radius (default: b)

    Returns:
        JSON string with the conformal residual report and the sampled critical radius.
    """
    try:
        header = {"command": "spheres", "n": n, "p": p, "b": b, "center": center, "radius": radius}
        return dump_report(run_spheres(n, p, b, center, radius, header=header))
    except Exception as e:
        logger.error(f"Error in spheres_tool for n={n}, p={p}: {e}", exc_info=True)
        return error_envelope(f"Failed to run sphere diagnostics for n={n}, p={p}", e)
