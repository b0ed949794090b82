"""
Step functions, distribution functions and symmetric decreasing rearrangement

On the line (n = 1) a step function is a list of intervals with levels and all
measures are kept as exact fractions, so equimeasurability holds exactly. For
n >= 2 step functions are radial: levels on concentric shells.
"""

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from engine.constants import unit_ball_volume
from engine.errors import DomainError
from engine.grids import graded_breakpoints, panel_rule
from engine.params import QuadSpec
from engine.profiles import RadialProfile
from engine.quadrature import bilinear_functional, tail_rule

logger = logging.getLogger(__name__)

EXACT_TOLERANCE = 1e-10
SUPPORT_HALF_WIDTH = 10.0
MAX_PIECES = 8
MAX_LEVEL = 4.0


@dataclass(frozen=True)
class StepFunction:
    """Levels on [breakpoints[i], breakpoints[i+1]), zero outside.

    For n >= 2 the breakpoints are radii starting at 0.
    """

    breakpoints: tuple
    levels: tuple
    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"dimension must be positive, got {self.n}")
        if len(self.breakpoints) != len(self.levels) + 1:
            raise DomainError("a step function needs one more breakpoint than levels")
        points = tuple(Fraction(b) for b in self.breakpoints) if self.n == 1 else tuple(float(b) for b in self.breakpoints)
        if any(b >= c for b, c in zip(points, points[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if self.n > 1 and points[0] != 0.0:
            raise DomainError("radial step functions start at radius 0")
        levels = tuple(float(v) for v in self.levels)
        if any(v < 0.0 or not math.isfinite(v) for v in levels):
            raise DomainError("levels must be finite and non-negative")
        object.__setattr__(self, "breakpoints", points)
        object.__setattr__(self, "levels", levels)

    @property
    def radial(self) -> bool:
        return self.n > 1

    def pieces(self) -> list[tuple]:
        return list(zip(self.breakpoints[:-1], self.breakpoints[1:], self.levels))

    def piece_measure(self, lo, hi):
        """Exact length for n = 1, shell volume otherwise."""
        if self.n == 1:
            return hi - lo
        return unit_ball_volume(self.n) * (hi**self.n - lo**self.n)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        points = np.array([float(b) for b in self.breakpoints])
        coordinate = np.abs(x) if self.radial else x
        values = np.zeros_like(coordinate)
        if not self.levels:
            return values
        index = np.searchsorted(points, coordinate, side="right") - 1
        inside = (index >= 0) & (index < len(self.levels))
        values[inside] = np.asarray(self.levels)[index[inside]]
        return values

    def is_symmetric(self) -> bool:
        """Even in x (always true for radial data)."""
        if self.radial:
            return True
        points = self.breakpoints
        return all(a == -b for a, b in zip(points, reversed(points))) and self.levels == self.levels[::-1]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "breakpoints": [float(b) for b in self.breakpoints],
            "levels": list(self.levels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StepFunction":
        try:
            return cls(
                breakpoints=tuple(data["breakpoints"]),
                levels=tuple(data["levels"]),
                n=int(data.get("n", 1)),
            )
        except KeyError as e:
            raise DomainError(f"step function JSON is missing {e}") from e


def zero_step(n: int = 1) -> StepFunction:
    return StepFunction(breakpoints=(0,), levels=(), n=n)


def distribution_function(f: StepFunction, a: float):
    """|{f > a}|; a Fraction for n = 1, a float for radial data."""
    if a < 0.0:
        raise DomainError(f"level must be non-negative, got {a}")
    total = Fraction(0) if f.n == 1 else 0.0
    for lo, hi, level in f.pieces():
        if level > a:
            total += f.piece_measure(lo, hi)
    return total


def _level_masses(f: StepFunction) -> list[tuple[float, object]]:
    masses: dict[float, object] = {}
    for lo, hi, level in f.pieces():
        if level > 0.0:
            masses[level] = masses.get(level, 0) + f.piece_measure(lo, hi)
    return sorted(masses.items(), key=lambda item: item[0], reverse=True)


def decreasing_rearrangement(f: StepFunction) -> StepFunction:
    """Symmetric decreasing rearrangement f* (layer cake on the distinct levels)."""
    layers = _level_masses(f)
    if not layers:
        return zero_step(f.n)
    cumulative = []
    running = Fraction(0) if f.n == 1 else 0.0
    for _, mass in layers:
        running += mass
        cumulative.append(running)
    levels = [level for level, _ in layers]
    if f.n == 1:
        halves = [c / 2 for c in cumulative]
        points = [-h for h in reversed(halves)] + halves
        mirrored = levels[::-1] + levels[1:]
        return StepFunction(breakpoints=tuple(points), levels=tuple(mirrored), n=1)
    volume = unit_ball_volume(f.n)
    radii = [0.0] + [(c / volume) ** (1.0 / f.n) for c in cumulative]
    return StepFunction(breakpoints=tuple(radii), levels=tuple(levels), n=f.n)


def lp_step(f: StepFunction, p: float) -> float:
    """Integral of f^p over R^n (p > 0)."""
    if not p > 0.0:
        raise DomainError(f"p must be positive, got {p}")
    return math.fsum(float(f.piece_measure(lo, hi)) * level**p for lo, hi, level in f.pieces() if level > 0.0)


def step_to_profile(f: StepFunction) -> RadialProfile:
    """Radial step data as a RadialProfile (n = 1 needs an even function)."""
    if not f.is_symmetric():
        raise DomainError("only even step functions on the line are radial")
    if not f.levels:
        return RadialProfile(radii=np.array([0.0, 1.0]), values=np.zeros(2), n=f.n, kind="step", label="zero")
    if f.radial:
        radii = [float(b) for b in f.breakpoints]
        levels = list(f.levels)
    else:
        # the middle piece (or the breakpoint at 0) starts the radial data
        half = len(f.levels) // 2
        radii = [0.0] + [float(b) for b in f.breakpoints[half + 1 :]]
        levels = list(f.levels[half:])
    return RadialProfile(
        radii=np.array(radii),
        values=np.array(levels + [0.0]),
        n=f.n,
        kind="step",
        label="step",
    )


def _rectangle_integral(a: float, b: float, c: float, d: float, lam: float) -> float:
    # int_a^b int_c^d |x - y|^lam dy dx from the antiderivative |t|^(lam+2) / ((lam+1)(lam+2))
    scale = (lam + 1.0) * (lam + 2.0)

    def corner(t: float) -> float:
        return abs(t) ** (lam + 2.0) / scale

    return math.fsum((corner(b - c), corner(a - d), -corner(b - d), -corner(a - c)))


def line_bilinear(f: StepFunction, g: StepFunction, lam: float) -> float:
    """Exact I(f, g) on the line, summed over pairs of pieces."""
    if f.n != 1 or g.n != 1:
        raise DomainError("exact rectangle integrals are for n = 1")
    terms = []
    for a, b, level_f in f.pieces():
        if level_f == 0.0:
            continue
        for c, d, level_g in g.pieces():
            if level_g == 0.0:
                continue
            terms.append(level_f * level_g * _rectangle_integral(float(a), float(b), float(c), float(d), lam))
    return math.fsum(terms)


def line_potential(f: StepFunction, lam: float, x: np.ndarray) -> np.ndarray:
    """(I_lambda f)(x) on the line in closed form."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for a, b, level in f.pieces():
        if level == 0.0:
            continue
        # int_a^b |x - y|^lam dy = G(x - a) - G(x - b), G(t) = sign(t)|t|^(lam+1)/(lam+1)
        upper = x - float(a)
        lower = x - float(b)
        total += level * (np.sign(upper) * np.abs(upper) ** (lam + 1.0) - np.sign(lower) * np.abs(lower) ** (lam + 1.0))
    return total / (lam + 1.0)


def line_neg_exponent_norm(f: StepFunction, lam: float, q: float, spec: QuadSpec | None = None) -> float:
    """||I_lambda f||_q on the line for q < 0 and lambda * q < -1."""
    if not q < 0.0 or not lam * q < -1.0:
        raise DomainError(f"need q < 0 and lambda*q < -1, got q={q}, lambda={lam}")
    if not any(level > 0.0 for level in f.levels):
        raise DomainError("the potential of the zero function has no negative-exponent norm")
    spec = spec or QuadSpec()
    points = np.array([float(b) for b in f.breakpoints])
    edge = 2.0 * max(1.0, float(np.max(np.abs(points))))
    edges = [np.linspace(-edge, edge, 2 * spec.radial_nodes_per_decade + 1), points]
    for i, mark in enumerate(points):
        left = points[i - 1] if i > 0 else -edge
        right = points[i + 1] if i + 1 < points.size else edge
        edges.append(graded_breakpoints(mark, left, right, 6))
    nodes, weights = panel_rule(np.concatenate(edges))
    middle = float(np.sum(weights * line_potential(f, lam, nodes) ** q))
    far, far_weights = tail_rule(edge, -(lam * q + 1.0), spec)
    tails = float(np.sum(far_weights * (line_potential(f, lam, far) ** q + line_potential(f, lam, -far) ** q)))
    return (middle + tails) ** (1.0 / q)


@dataclass(frozen=True)
class RieszCheck:
    lhs: float
    rhs: float
    passed: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


def check_reversed_riesz(f: StepFunction, g: StepFunction, lam: float, spec: QuadSpec | None = None) -> RieszCheck:
    """I(f, g) >= I(f*, g*): exact rectangle sums for n = 1, radial quadrature otherwise."""
    if f.n != g.n:
        raise DomainError(f"step functions live in different dimensions ({f.n} and {g.n})")
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")
    f_star = decreasing_rearrangement(f)
    g_star = decreasing_rearrangement(g)
    if f.n == 1:
        lhs = line_bilinear(f, g, lam)
        rhs = line_bilinear(f_star, g_star, lam)
        tolerance = EXACT_TOLERANCE
    else:
        spec = spec or QuadSpec()
        lhs = bilinear_functional(step_to_profile(f), step_to_profile(g), lam, spec)
        rhs = bilinear_functional(step_to_profile(f_star), step_to_profile(g_star), lam, spec)
        tolerance = 10.0 * spec.target_rel_tol
    passed = lhs >= rhs - tolerance * abs(rhs)
    logger.debug(f"Reversed Riesz n={f.n}, lambda={lam}: lhs={lhs:.12g}, rhs={rhs:.12g}")
    return RieszCheck(lhs=lhs, rhs=rhs, passed=passed)


def random_step_function(rng: np.random.Generator, n: int = 1) -> StepFunction:
    """1 to 8 pieces, levels in [0, 4], support in [-10, 10] (radii up to 10 for n >= 2)."""
    pieces = int(rng.integers(1, MAX_PIECES + 1))
    levels = tuple(float(v) for v in rng.uniform(0.0, MAX_LEVEL, size=pieces))
    if n == 1:
        points = np.unique(rng.uniform(-SUPPORT_HALF_WIDTH, SUPPORT_HALF_WIDTH, size=pieces + 1))
    else:
        points = np.concatenate(([0.0], np.unique(rng.uniform(0.0, SUPPORT_HALF_WIDTH, size=pieces))))
        points = points[np.concatenate(([True], points[1:] > 0.0))]
    levels = levels[: points.size - 1]
    return StepFunction(breakpoints=tuple(points.tolist()), levels=levels, n=n)


def write_step_json(f: StepFunction, path: str | Path) -> None:
    Path(path).write_text(json.dumps(f.to_dict(), indent=2), encoding="utf-8")


def read_step_json(path: str | Path) -> StepFunction:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DomainError(f"invalid step function JSON in {path}: {e}") from e
    return StepFunction.from_dict(data)
