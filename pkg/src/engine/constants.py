"""
Closed-form constants of the reversed and classical HLS inequalities

Everything is assembled in log-space from `engine.special` and exponentiated
once at the end.
"""

import logging
import math
from dataclasses import dataclass

from engine.errors import DomainError
from engine.params import Params
from engine.special import digamma, log_abs_gamma, log_gamma

logger = logging.getLogger(__name__)

VALIDATED = "validated"
UNVALIDATED_REGIME = "unvalidated-regime"

LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class ConstantValue:
    """A constant together with the regime flag it was computed under."""

    value: float
    regime: str

    @property
    def validated(self) -> bool:
        return self.regime == VALIDATED

    def to_dict(self) -> dict:
        return {"value": self.value, "regime": self.regime}


@dataclass(frozen=True)
class ClassicalHLSConstants:
    upper_bound: float
    diagonal_sharp: float
    r: float

    def to_dict(self) -> dict:
        return {"upper_bound": self.upper_bound, "diagonal_sharp": self.diagonal_sharp, "r": self.r}


def _require_dimension(n: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n}")


def _regime(n: int, lam: float) -> str:
    if 0.0 < lam < n:
        return VALIDATED
    logger.warning(f"lambda={lam} outside (0, n={n}); constant flagged {UNVALIDATED_REGIME}")
    return UNVALIDATED_REGIME


def unit_ball_volume(n: int) -> float:
    """Volume omega_n = pi^(n/2) / Gamma(n/2 + 1) of the unit ball in R^n."""
    _require_dimension(n)
    return math.exp(0.5 * n * LOG_PI - log_gamma(0.5 * n + 1.0))


def sphere_area(n: int) -> float:
    """Surface measure |S^(n-1)| = n * omega_n."""
    return n * unit_ball_volume(n)


def _log_gamma_ratio_power(n: int) -> float:
    # ln(Gamma(n) / Gamma(n/2))
    return log_gamma(float(n)) - log_gamma(0.5 * n)


def sharp_reversed_constant(n: int, lam: float) -> ConstantValue:
    """Sharp constant of the diagonal reversed HLS inequality.

    C = pi^(-lam/2) Gamma(n/2 + lam/2) / Gamma(n + lam/2) (Gamma(n)/Gamma(n/2))^(1 + lam/n),
    the value of I(f, f) / ||f||_p^2 at f = (1 + |x|^2)^(-(2n + lam)/2).
    """
    _require_dimension(n)
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")
    log_value = (
        -0.5 * lam * LOG_PI
        + log_gamma(0.5 * n + 0.5 * lam)
        - log_gamma(n + 0.5 * lam)
        + (1.0 + lam / n) * _log_gamma_ratio_power(n)
    )
    return ConstantValue(math.exp(log_value), _regime(n, lam))


def _classical_diagonal(n: int, lam: float) -> tuple[float, int]:
    log_num, sign_num = log_abs_gamma(0.5 * n - 0.5 * lam)
    log_den, sign_den = log_abs_gamma(n - 0.5 * lam)
    log_value = 0.5 * lam * LOG_PI + log_num - log_den + (1.0 - lam / n) * _log_gamma_ratio_power(n)
    return math.exp(log_value), sign_num * sign_den


def printed_reversed_constant(n: int, lam: float) -> ConstantValue:
    """The form pi^(lam/2) Gamma(n/2 - lam/2)/Gamma(n - lam/2) (Gamma(n)/Gamma(n/2))^(1 - lam/n).

    This is the classical HLS diagonal constant. It is kept for reference and
    cross-checks; it has Gamma poles at lam = n, n + 2, ... and changes sign
    between them.

    Raises:
        PoleError: if a Gamma argument is a non-positive integer.
    """
    _require_dimension(n)
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")
    magnitude, sign = _classical_diagonal(n, lam)
    value = sign * magnitude
    if value <= 0.0:
        logger.warning(f"Printed constant is non-positive ({value}) at n={n}, lambda={lam}")
    return ConstantValue(value, _regime(n, lam))


def lower_bound_constant(params: Params) -> float:
    """Explicit (non-sharp) constant C(n, p, r) of the layer-cake proof, as printed."""
    n, p, r, lam = params.n, params.p, params.r, params.lam
    ratio = lam / n
    log_value = (
        -ratio * math.log(2.0 * unit_ball_volume(n))
        - (1.0 + ratio) * math.log(2.0)
        - (1.0 + ratio) * math.log(p * r)
        - ratio * math.log(ratio)
        - ratio * math.log(max(r / (1.0 - r), p / (1.0 - p)))
    )
    return math.exp(log_value)


def provable_lower_bound_constant(params: Params) -> float:
    """C(n, p, r) * min(p, r)^(lambda/n), the constant the layer-cake argument actually proves.

    lower_bound_constant omits the min(p, r)^(lambda/n) factor and can sit
    above I(f, g) / (||f||_p ||g||_r) for admissible step pairs.
    """
    return lower_bound_constant(params) * min(params.p, params.r) ** (params.lam / params.n)


def classical_hls_constants(n: int, lambda_pos: float, p: float) -> ClassicalHLSConstants:
    """Lieb-Loss upper bound and Lieb's diagonal value for the classical HLS constant.

    `r` is fixed by 1/p + 1/r + lambda/n = 2.
    """
    _require_dimension(n)
    if not 0.0 < lambda_pos < n:
        raise DomainError(f"classical HLS needs 0 < lambda < n, got lambda={lambda_pos}, n={n}")
    if not p > 1.0:
        raise DomainError(f"classical HLS needs p > 1, got {p}")
    inverse_r = 2.0 - lambda_pos / n - 1.0 / p
    if not 0.0 < inverse_r < 1.0:
        raise DomainError(f"no r > 1 is compatible with p={p}, lambda={lambda_pos}, n={n}")
    r = 1.0 / inverse_r
    ratio = lambda_pos / n
    upper = (
        n
        / (n - lambda_pos)
        * unit_ball_volume(n) ** ratio
        / (p * r)
        * ((ratio * p / (p - 1.0)) ** ratio + (ratio * r / (r - 1.0)) ** ratio)
    )
    magnitude, _ = _classical_diagonal(n, lambda_pos)
    return ClassicalHLSConstants(upper_bound=upper, diagonal_sharp=magnitude, r=r)


def sobolev_constant(n: int, s: float) -> float:
    """Best constant S_{n,s} of the fractional Sobolev inequality."""
    _require_dimension(n)
    if not 0.0 < s < 0.5 * n:
        raise DomainError(f"Sobolev constant needs 0 < s < n/2, got s={s}, n={n}")
    log_value = (
        log_gamma(0.5 * n - s)
        - 2.0 * s * math.log(2.0)
        - s * LOG_PI
        - log_gamma(0.5 * n + s)
        + (2.0 * s / n) * _log_gamma_ratio_power(n)
    )
    return math.exp(log_value)


def green_function_constant(n: int, s: float) -> float:
    """Constant of the Green function of (-Laplacian)^s: 2^(-2s) pi^(-n/2) Gamma(n/2 - s) / Gamma(s)."""
    _require_dimension(n)
    if not 0.0 < s < 0.5 * n:
        raise DomainError(f"Green function constant needs 0 < s < n/2, got s={s}, n={n}")
    return math.exp(
        -2.0 * s * math.log(2.0) - 0.5 * n * LOG_PI + log_gamma(0.5 * n - s) - log_gamma(s)
    )


def log_limit_constant(n: int) -> float:
    """Derivative at lambda = 0 of the sharp reversed constant (which equals 1 there)."""
    _require_dimension(n)
    return -0.5 * (LOG_PI - digamma(0.5 * n) + digamma(float(n))) + _log_gamma_ratio_power(n) / n
