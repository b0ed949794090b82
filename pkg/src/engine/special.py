"""
Log-gamma and digamma with the domain and pole checks the constants rely on
"""

import math

from scipy import special as sp

from engine.errors import DomainError, PoleError

POLE_TOLERANCE = 1e-9


def log_gamma(x: float) -> float:
    """Return ln Gamma(x) for x > 0.

    Raises:
        DomainError: if x <= 0 or is not finite.
    """
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return float(sp.gammaln(x))


def check_pole(x: float, label: str = "Gamma argument") -> None:
    """Raise PoleError when x is within POLE_TOLERANCE of 0, -1, -2, ..."""
    nearest = round(x)
    if nearest <= 0 and abs(x - nearest) < POLE_TOLERANCE:
        raise PoleError(f"{label} {x} is a pole of Gamma", argument=x)


def log_abs_gamma(x: float) -> tuple[float, int]:
    """Return (ln |Gamma(x)|, sign Gamma(x)) for any real x off the poles."""
    if not math.isfinite(x):
        raise DomainError(f"Gamma argument must be finite, got {x}")
    check_pole(x)
    return float(sp.gammaln(x)), int(sp.gammasgn(x))


def digamma(x: float) -> float:
    """Return psi(x) = d/dx ln Gamma(x) for x > 0.

    Raises:
        DomainError: if x <= 0 or is not finite.
    """
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"digamma requires x > 0, got {x}")
    return float(sp.digamma(x))
