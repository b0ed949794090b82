"""
Non-negative radial functions: sampling, evaluation, L^p quantities and bubble fitting
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares

from engine.constants import sphere_area
from engine.errors import ConvergenceError, DivergenceError, DomainError, SeamError
from engine.grids import make_grid, panel_rule, tail_rule
from engine.params import Params

logger = logging.getLogger(__name__)

STRICT_SEAM = 1e-8
RELAXED_SEAM = 1e-3
DEFAULT_NODES = 512
TAIL_PANELS_PER_DECADE = 4


class ExtremizerKind(str, Enum):
    INEQUALITY_EXTREMIZER = "inequality_extremizer"
    SYSTEM_BUBBLE = "system_bubble"


class GridSpec(BaseModel):
    """Sampling grid: M intervals on [0, R]."""

    model_config = ConfigDict(frozen=True)

    R: float = Field(gt=0.0)
    M: int = Field(default=DEFAULT_NODES - 1, ge=8)
    spacing: str = Field(default="log", pattern="^(uniform|log)$")


@dataclass(frozen=True)
class TailSpec:
    """Power tail c * r**tau beyond the truncation radius."""

    tau: float = 0.0
    c: float = 0.0


@dataclass(frozen=True)
class ExtremizerSpec:
    a: float
    b: float
    exponent: float
    center_offset: float = 0.0

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise DomainError(f"bubble parameters must be positive, got a={self.a}, b={self.b}")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled non-negative radial function on R^n with an analytic power tail.

    `kind` is "linear" (piecewise-linear interpolation between nodes) or
    "step" (value radii[i] applies on [radii[i], radii[i+1])). A profile built
    from a closed form keeps it in `source`, which then replaces the interpolant
    everywhere (beyond R too when the profile has a tail); quadratures call
    `evaluate` and so see the closed form.
    A zero tail coefficient means compact support in the closed ball of radius R.
    """

    radii: np.ndarray
    values: np.ndarray
    n: int
    tail_exponent: float = 0.0
    tail_coefficient: float = 0.0
    kind: str = "linear"
    seam_tier: str = "strict"
    source: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        radii.setflags(write=False)
        values.setflags(write=False)
        if radii.ndim != 1 or radii.size < 2 or radii.size != values.size:
            raise DomainError("radii and values must be 1-D arrays of equal length >= 2")
        if radii[0] != 0.0 or np.any(np.diff(radii) <= 0.0):
            raise DomainError("radii must start at 0 and be strictly increasing")
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise DomainError("profile values must be finite and non-negative")
        if self.tail_coefficient < 0.0:
            raise DomainError("tail coefficient must be non-negative")
        if self.kind not in ("linear", "step"):
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if self.n < 1:
            raise DomainError(f"dimension must be positive, got {self.n}")

    @property
    def R(self) -> float:
        return float(self.radii[-1])

    @property
    def has_tail(self) -> bool:
        return self.tail_coefficient > 0.0

    @property
    def decreasing(self) -> bool:
        monotone = bool(np.all(np.diff(self.values) <= 0.0))
        return monotone and (not self.has_tail or self.tail_exponent <= 0.0)

    @property
    def is_zero(self) -> bool:
        return not self.has_tail and not np.any(self.values > 0.0)

    def breakpoints(self) -> np.ndarray:
        """Radii where the profile may fail to be smooth."""
        if self.kind == "step":
            return self.radii.copy()
        return np.array([0.0, self.R])

    def interpolate(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        inside = np.clip(r, 0.0, self.R)
        if self.kind == "step":
            index = np.clip(np.searchsorted(self.radii, inside, side="right") - 1, 0, self.radii.size - 1)
            result = self.values[index]
        else:
            result = np.interp(inside, self.radii, self.values)
        return np.where(r > self.R, self.tail(r), result)

    def tail(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if not self.has_tail:
            return np.zeros_like(r)
        with np.errstate(divide="ignore", over="ignore"):
            return self.tail_coefficient * np.power(np.maximum(r, self.R), self.tail_exponent)

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        """Best available values: the closed form when known, else the interpolant."""
        r = np.asarray(r, dtype=float)
        if self.source is None:
            return self.interpolate(r)
        if not self.has_tail:
            return np.where(r > self.R, 0.0, np.asarray(self.source(np.clip(r, 0.0, self.R)), dtype=float))
        return np.asarray(self.source(np.maximum(r, 0.0)), dtype=float) * np.ones_like(r)

    def with_values(self, values: np.ndarray, label: str | None = None) -> "RadialProfile":
        """Same grid, new nodal values; the tail coefficient follows the last node."""
        values = np.asarray(values, dtype=float)
        coefficient = 0.0
        if self.has_tail:
            coefficient = float(values[-1]) / self.R**self.tail_exponent
        return RadialProfile(
            radii=self.radii,
            values=values,
            n=self.n,
            tail_exponent=self.tail_exponent,
            tail_coefficient=coefficient,
            kind=self.kind,
            seam_tier=self.seam_tier,
            label=self.label if label is None else label,
        )


def build_profile(
    evaluator: Callable[[np.ndarray], np.ndarray],
    n: int,
    grid_spec: GridSpec,
    tail: TailSpec = TailSpec(),
    kind: str = "linear",
    label: str = "",
    keep_source: bool = True,
) -> RadialProfile:
    """Sample `evaluator` on the grid and check the seam against the tail.

    A tail coefficient of zero marks compact support and skips the seam check.

    Raises:
        DomainError: if a sample is negative.
        SeamError: if the tail misses the last sample by more than the relaxed tier.
    """
    radii = make_grid(grid_spec.R, grid_spec.M + 1, grid_spec.spacing)
    values = np.asarray(evaluator(radii), dtype=float) * np.ones_like(radii)
    if np.any(values < 0.0):
        worst = int(np.argmin(values))
        raise DomainError(f"negative sample {values[worst]} at r={radii[worst]}")
    tier = "strict"
    if tail.c > 0.0:
        last = values[-1]
        mismatch = abs(last - tail.c * grid_spec.R**tail.tau)
        scale = max(1.0, last)
        if mismatch <= STRICT_SEAM * scale:
            tier = "strict"
        elif mismatch <= RELAXED_SEAM * scale:
            tier = "relaxed"
            logger.debug(f"Seam for {label or 'profile'} uses relaxed tier (mismatch {mismatch:.3e})")
        else:
            raise SeamError(
                f"tail {tail.c}*R^{tail.tau} misses last sample {last} at R={grid_spec.R} by {mismatch:.3e}"
            )
    return RadialProfile(
        radii=radii,
        values=values,
        n=n,
        tail_exponent=tail.tau,
        tail_coefficient=tail.c,
        kind=kind,
        seam_tier=tier,
        source=evaluator if keep_source else None,
        label=label,
    )


def eval_profile(f: RadialProfile, r: float) -> float:
    """Piecewise-linear (or step) value inside [0, R], c * r**tau beyond."""
    if r < 0.0:
        raise DomainError(f"radius must be non-negative, got {r}")
    return float(f.interpolate(np.array([r]))[0])


def ball_profile(n: int, radius: float = 1.0, height: float = 1.0) -> RadialProfile:
    """Indicator of the ball of the given radius, times `height`."""
    return RadialProfile(
        radii=np.array([0.0, radius]),
        values=np.array([height, height]),
        n=n,
        kind="step",
        label=f"ball(r={radius})",
    )


def bubble_function(a: float, b: float, exponent: float) -> Callable[[np.ndarray], np.ndarray]:
    """r -> a (b^2 + r^2)^(exponent/2)."""

    def evaluator(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return a * np.power(b * b + r * r, 0.5 * exponent)

    return evaluator


def extremizer(
    kind: ExtremizerKind | str,
    params: Params | float,
    a: float = 1.0,
    b: float = 1.0,
    n: int | None = None,
    radius: float | None = None,
    nodes: int = DEFAULT_NODES,
) -> RadialProfile:
    """Sample a member of an extremal family.

    inequality_extremizer: f = a (b^2 + r^2)^(-(2n + lambda)/2), with `params`
    a Params instance. system_bubble: u = a (b^2 + r^2)^(p/2), with `params`
    the exponent p and `n` the dimension (default 1).
    """
    kind = ExtremizerKind(kind)
    if kind is ExtremizerKind.INEQUALITY_EXTREMIZER:
        if not isinstance(params, Params):
            raise DomainError("inequality_extremizer needs Params")
        dimension = params.n
        exponent = -(2.0 * params.n + params.lam)
    else:
        exponent = float(params.p if isinstance(params, Params) else params)
        if not exponent > 0.0:
            raise DomainError(f"system bubble exponent must be positive, got {exponent}")
        dimension = n or (params.n if isinstance(params, Params) else 1)
    spec = ExtremizerSpec(a=a, b=b, exponent=exponent)
    evaluator = bubble_function(spec.a, spec.b, spec.exponent)
    R = radius if radius is not None else 50.0 * b
    coefficient = float(evaluator(np.array([R]))[0]) / R**exponent
    return build_profile(
        evaluator,
        dimension,
        GridSpec(R=R, M=nodes - 1),
        TailSpec(tau=exponent, c=coefficient),
        label=f"{kind.value}(a={a}, b={b})",
    )


def _cell_rule(f: RadialProfile) -> tuple[np.ndarray, np.ndarray]:
    return panel_rule(f.radii)


def _tail_integral(f: RadialProfile, integrand: Callable[[np.ndarray], np.ndarray], alpha: float) -> float:
    """Integral over [R, inf) of an integrand decaying like r^(alpha - 1), up to logarithms.

    Raises:
        DivergenceError: when alpha >= 0.
    """
    if alpha >= 0.0:
        raise DivergenceError(f"tail r^{f.tail_exponent} is not integrable in R^{f.n}")
    nodes, weights = tail_rule(f.R, -alpha, TAIL_PANELS_PER_DECADE)
    return float(np.sum(weights * integrand(nodes)))


def radial_integral(f: RadialProfile, power: float = 1.0, weight_power: float = 0.0) -> float:
    """Integral over R^n of f(|x|)^power |x|^weight_power, tail included.

    Raises:
        DivergenceError: if the tail integral diverges.
        DomainError: for negative powers of a profile that vanishes somewhere.
    """
    nodes, weights = _cell_rule(f)
    values = f.evaluate(nodes)
    if power < 0.0 and np.any(values <= 0.0):
        raise DomainError("negative powers need a strictly positive profile")
    with np.errstate(divide="ignore"):
        integrand = np.where(values > 0.0, np.power(values, power), 0.0 if power > 0 else np.inf)
    total = float(np.sum(weights * integrand * nodes ** (f.n - 1 + weight_power)))
    if f.has_tail:
        exponent = power * f.tail_exponent + f.n + weight_power
        if exponent >= 0.0:
            raise DivergenceError(
                f"tail r^{f.tail_exponent} to the power {power} is not integrable in R^{f.n}"
            )
        if f.source is not None:
            total += _tail_integral(
                f, lambda r: np.power(f.evaluate(r), power) * r ** (f.n - 1 + weight_power), exponent
            )
        else:
            total += f.tail_coefficient**power * f.R**exponent / (-exponent)
    return sphere_area(f.n) * total


def lp_quantity(f: RadialProfile, p: float) -> float:
    """(integral of f^p)^(1/p); a norm only for p >= 1."""
    if p == 0.0:
        raise DomainError("p must be non-zero")
    if f.is_zero:
        return 0.0
    return radial_integral(f, p) ** (1.0 / p)


def _x_log_x(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(values > 0.0, values * np.log(values), 0.0)


def l1_entropy(f: RadialProfile) -> tuple[float, float]:
    """Return (||f||_1, integral of f log f)."""
    mass = radial_integral(f, 1.0)
    nodes, weights = _cell_rule(f)
    values = f.evaluate(nodes)
    integrand = _x_log_x(values)
    entropy = float(np.sum(weights * integrand * nodes ** (f.n - 1)))
    if f.has_tail and f.source is not None:
        total = _tail_integral(f, lambda r: _x_log_x(f.evaluate(r)) * r ** (f.n - 1), f.tail_exponent + f.n)
        entropy += total
    elif f.has_tail:
        # c r^t log(c r^t) integrated against r^(n-1) beyond R
        tau, c, R, n = f.tail_exponent, f.tail_coefficient, f.R, f.n
        alpha = tau + n
        if alpha >= 0.0:
            raise DivergenceError("tail is not integrable")
        base = c * R**alpha / (-alpha)
        entropy += base * math.log(c) + c * tau * (R**alpha * math.log(R) / (-alpha) + R**alpha / alpha**2)
    return mass, sphere_area(f.n) * entropy


def scale_profile(f: RadialProfile, s: float) -> RadialProfile:
    """r -> s f(r)."""
    source = None if f.source is None else (lambda r, g=f.source: s * np.asarray(g(r)))
    return RadialProfile(
        radii=f.radii,
        values=s * f.values,
        n=f.n,
        tail_exponent=f.tail_exponent,
        tail_coefficient=s * f.tail_coefficient,
        kind=f.kind,
        seam_tier=f.seam_tier,
        source=source,
        label=f.label,
    )


def dilate_profile(f: RadialProfile, s: float) -> RadialProfile:
    """r -> f(r / s)."""
    source = None if f.source is None else (lambda r, g=f.source: g(np.asarray(r) / s))
    return RadialProfile(
        radii=f.radii * s,
        values=f.values,
        n=f.n,
        tail_exponent=f.tail_exponent,
        tail_coefficient=f.tail_coefficient * s ** (-f.tail_exponent),
        kind=f.kind,
        seam_tier=f.seam_tier,
        source=source,
        label=f.label,
    )


def spline_profile(
    radii: np.ndarray,
    values: np.ndarray,
    n: int,
    tail_exponent: float,
    label: str = "",
) -> RadialProfile:
    """Strictly positive nodal data with a smooth closed-form `source`.

    Inside [0, R] the source is a cubic spline of ln f with zero slope at the
    origin. Beyond R it continues as C (r^2 + d^2)^(tau/2), matching the value
    and logarithmic slope at R; d = 0 when the slope cannot be matched.
    """
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0.0):
        raise DomainError("spline profiles need strictly positive values")
    log_spline = CubicSpline(radii, np.log(values), bc_type=((1, 0.0), "not-a-knot"))
    R = float(radii[-1])
    slope = float(log_spline(R, 1))
    tau = tail_exponent
    offset_sq = 0.0
    if tau != 0.0 and slope != 0.0:
        candidate = tau * R / slope - R * R
        if 0.0 <= candidate <= R * R:
            offset_sq = candidate
    log_scale = float(np.log(values[-1])) - 0.5 * tau * math.log(R * R + offset_sq)

    def source(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        inside = np.clip(r, 0.0, R)
        with np.errstate(over="ignore"):
            far = np.exp(log_scale + 0.5 * tau * np.log(r * r + offset_sq + (r == 0.0)))
            return np.where(r > R, far, np.exp(log_spline(inside)))

    return RadialProfile(
        radii=radii,
        values=values,
        n=n,
        tail_exponent=tau,
        tail_coefficient=math.exp(log_scale),
        source=source,
        label=label,
    )


def fit_extremizer(
    f: RadialProfile,
    kind: ExtremizerKind | str = ExtremizerKind.SYSTEM_BUBBLE,
    exponent: float | None = None,
    max_nfev: int = 200,
) -> dict:
    """Least-squares fit of a (b^2 + r^2)^(exponent/2) to f in log-space.

    The exponent defaults to the profile's tail exponent (p for a system bubble,
    -(2n + lambda) for the inequality extremizer). b is kept in (0, R].

    Raises:
        DomainError: if f is not strictly positive on its grid.
        ConvergenceError: if the optimizer fails.
    """
    ExtremizerKind(kind)
    exponent = f.tail_exponent if exponent is None else exponent
    r = f.radii
    values = f.values
    if np.any(values <= 0.0):
        raise DomainError("fit_extremizer needs a strictly positive profile")
    log_values = np.log(values)

    # initial b where the profile has moved by a factor 2^(exponent/2) from r = 0
    target = log_values[0] + 0.5 * exponent * math.log(2.0)
    crossing = np.nonzero((log_values - target) * np.sign(exponent) >= 0.0)[0]
    b0 = float(r[crossing[0]]) if crossing.size and r[crossing[0]] > 0.0 else 0.5 * f.R
    b0 = min(max(b0, 1e-6 * f.R), f.R)
    a0 = math.exp(log_values[0] - exponent * math.log(b0))

    def residual(theta: np.ndarray) -> np.ndarray:
        log_a, log_b = theta
        return log_values - (log_a + 0.5 * exponent * np.log(np.exp(2.0 * log_b) + r * r))

    result = least_squares(
        residual,
        x0=np.array([math.log(a0), math.log(b0)]),
        bounds=([-np.inf, math.log(1e-6 * f.R)], [np.inf, math.log(f.R)]),
        method="trf",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    if not result.success and result.status <= 0:
        raise ConvergenceError(f"bubble fit did not converge: {result.message}")
    a, b = math.exp(result.x[0]), math.exp(result.x[1])
    rms = float(np.sqrt(np.mean(result.fun**2)))
    logger.debug(f"Fitted bubble a={a:.10g}, b={b:.10g}, rms={rms:.3e}")
    return {"a": a, "b": b, "rms_residual": rms}


def write_profile_csv(f: RadialProfile, path: str | Path) -> None:
    """Write `r,value` rows and the tail footer; floats use shortest round-trip repr."""
    lines = ["r,value"]
    lines.extend(f"{r!r},{v!r}" for r, v in zip(f.radii.tolist(), f.values.tolist(), strict=True))
    footer = f"# tail tau={float(f.tail_exponent)!r} c={float(f.tail_coefficient)!r} n={f.n}"
    if f.kind != "linear":
        footer += f" kind={f.kind}"
    lines.append(footer)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_profile_csv(path: str | Path) -> RadialProfile:
    """Inverse of write_profile_csv."""
    radii: list[float] = []
    values: list[float] = []
    meta: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line == "r,value":
            continue
        if line.startswith("#"):
            for token in line.lstrip("#").split()[1:]:
                key, _, value = token.partition("=")
                meta[key] = value
            continue
        r_text, v_text = line.split(",")
        radii.append(float(r_text))
        values.append(float(v_text))
    if not {"tau", "c", "n"} <= meta.keys():
        raise DomainError(f"profile file {path} is missing the tail footer")
    return RadialProfile(
        radii=np.array(radii),
        values=np.array(values),
        n=int(meta["n"]),
        tail_exponent=float(meta["tau"]),
        tail_coefficient=float(meta["c"]),
        kind=meta.get("kind", "linear"),
        label=Path(path).stem,
    )
