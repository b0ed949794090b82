"""
Exponent tuples and quadrature settings
"""

import logging

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from engine.errors import DomainError

logger = logging.getLogger(__name__)

COMPATIBILITY_TOLERANCE = 1e-12


def compatible_r(n: int, p: float, lam: float) -> float:
    """Solve 1/p + 1/r - lambda/n = 2 for r."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    inverse = 2.0 + lam / n - 1.0 / p
    if inverse <= 1.0:
        raise DomainError(f"no r in (0, 1) is compatible with n={n}, p={p}, lambda={lam}")
    return 1.0 / inverse


def diagonal_exponent(n: int, lam: float) -> float:
    """The diagonal exponent 2n / (2n + lambda)."""
    return 2.0 * n / (2.0 * n + lam)


class Params(BaseModel):
    """Exponent tuple (n, p, r, lambda) of the reversed inequality.

    `q = r / (r - 1)` and `kappa = -(2n + lambda) / lambda` are derived.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n: int = Field(ge=1)
    p: float
    r: float
    lam: float = Field(alias="lambda", gt=0.0)

    @field_validator("p", "r")
    @classmethod
    def _open_unit_interval(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"exponent must lie in (0, 1), got {value}")
        return value

    @model_validator(mode="after")
    def _check_compatibility(self) -> "Params":
        gap = 1.0 / self.p + 1.0 / self.r - self.lam / self.n - 2.0
        if abs(gap) > COMPATIBILITY_TOLERANCE:
            raise ValueError(
                f"1/p + 1/r - lambda/n must equal 2 (off by {gap:.3e}) "
                f"for n={self.n}, p={self.p}, r={self.r}, lambda={self.lam}"
            )
        floor = self.n / (self.n + self.lam)
        if not (self.p > floor and self.r > floor):
            raise ValueError(f"p and r must exceed n/(n+lambda) = {floor}")
        return self

    @property
    def q(self) -> float:
        return self.r / (self.r - 1.0)

    @property
    def kappa(self) -> float:
        return -(2.0 * self.n + self.lam) / self.lam

    @property
    def is_diagonal(self) -> bool:
        target = diagonal_exponent(self.n, self.lam)
        return (
            abs(self.p - target) <= COMPATIBILITY_TOLERANCE
            and abs(self.p - self.r) <= COMPATIBILITY_TOLERANCE
        )

    @classmethod
    def diagonal(cls, n: int, lam: float) -> "Params":
        p = diagonal_exponent(n, lam)
        return cls(n=n, p=p, r=p, lam=lam)

    @classmethod
    def from_p(cls, n: int, p: float, lam: float) -> "Params":
        return cls(n=n, p=p, r=compatible_r(n, p, lam), lam=lam)

    @classmethod
    def resolve(
        cls,
        n: int,
        lam: float,
        p: float | None = None,
        r: float | None = None,
        snap_tolerance: float = 1e-3,
    ) -> "Params":
        """Build Params from possibly rounded user input.

        Missing exponents default to the diagonal case. Inputs within
        `snap_tolerance` of the diagonal exponent snap to it; otherwise r is
        recomputed from p when the pair is only approximately compatible.
        """
        if lam <= 0.0:
            raise DomainError(f"lambda must be positive, got {lam}")
        target = diagonal_exponent(n, lam)
        if p is None and r is None:
            return cls.diagonal(n, lam)
        if p is None:
            p = r
        if r is None:
            r = p
        if abs(p - target) <= snap_tolerance and abs(r - target) <= snap_tolerance:
            if p != target or r != target:
                logger.info(f"Snapping p={p}, r={r} to diagonal exponent {target}")
            return cls.diagonal(n, lam)
        gap = 1.0 / p + 1.0 / r - lam / n - 2.0
        if abs(gap) <= COMPATIBILITY_TOLERANCE:
            return cls(n=n, p=p, r=r, lam=lam)
        if abs(gap) <= snap_tolerance * 10.0:
            snapped = compatible_r(n, p, lam)
            logger.warning(f"Recomputing r from compatibility: {r} -> {snapped}")
            return cls(n=n, p=p, r=snapped, lam=lam)
        raise DomainError(f"1/p + 1/r - lambda/n = {gap + 2.0}, expected 2")


class QuadSpec(BaseModel):
    """Resolution and tolerance settings for the radial quadratures."""

    model_config = ConfigDict(frozen=True)

    angular_nodes: int = Field(default=64, ge=16)
    radial_nodes_per_decade: int = Field(default=64, ge=32)
    truncation_radius: float = Field(default=50.0, gt=0.0)
    target_rel_tol: float = Field(default=1e-6, gt=1e-12, lt=1e-2)
    max_refinements: int = Field(default=6, ge=1)

    def refined(self, level: int) -> "QuadSpec":
        """Copy with angular and radial nodes doubled `level` times."""
        factor = 2**level
        return self.model_copy(
            update={
                "angular_nodes": self.angular_nodes * factor,
                "radial_nodes_per_decade": self.radial_nodes_per_decade * factor,
            }
        )
