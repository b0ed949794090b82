"""
Radial grids and composite Gauss-Legendre panel rules
"""

from functools import lru_cache

import numpy as np

GL_ORDER = 8


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1], cached per order."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_rule(breakpoints: np.ndarray, order: int = GL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on consecutive breakpoint pairs.

    Zero-width panels are dropped. Returns flat (nodes, weights).
    """
    edges = np.unique(np.asarray(breakpoints, dtype=float))
    if edges.size < 2:
        return np.empty(0), np.empty(0)
    lo, hi = edges[:-1], edges[1:]
    x, w = gauss_legendre(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def log_breakpoints(lo: float, hi: float, per_decade: int) -> np.ndarray:
    """Geometric breakpoints from lo to hi (inclusive) with `per_decade` panels per decade."""
    if hi <= lo:
        return np.array([hi])
    count = max(1, int(np.ceil(np.log10(hi / lo) * per_decade)))
    return np.geomspace(lo, hi, count + 1)


def graded_breakpoints(center: float, left: float, right: float, levels: int, ratio: float = 0.25) -> np.ndarray:
    """Breakpoints accumulating geometrically at `center` from both sides.

    `left` and `right` are the nearest existing breakpoints around `center`;
    the graded points stay strictly inside (left, right).
    """
    points = [center]
    if center > left:
        width = center - left
        points.extend(center - width * ratio ** (k + 1) for k in range(levels))
    if right > center:
        width = right - center
        points.extend(center + width * ratio ** (k + 1) for k in range(levels))
    return np.asarray(points)


def make_grid(radius: float, nodes: int, spacing: str = "log", inner_fraction: float = 1e-4) -> np.ndarray:
    """Grid 0 = r_0 < r_1 < ... < r_M = radius with M = nodes - 1 intervals."""
    if nodes < 2:
        raise ValueError(f"grid needs at least two nodes, got {nodes}")
    if spacing == "uniform":
        return np.linspace(0.0, radius, nodes)
    if spacing == "log":
        return np.concatenate(([0.0], np.geomspace(inner_fraction * radius, radius, nodes - 1)))
    raise ValueError(f"unknown grid spacing {spacing!r}")


def tail_rule(start: float, beta: float, per_decade: int, w_min: float = 1e-12, max_log: float = 600.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [start, inf) for integrands decaying like s^(-beta - 1).

    Uses s = start * w^(-1/beta), under which c * s^(-beta - 1) ds becomes a
    constant in w on (0, 1]. Nodes beyond exp(max_log) are dropped.
    """
    if start <= 0.0 or beta <= 0.0:
        raise ValueError(f"tail rule needs start > 0 and beta > 0, got start={start}, beta={beta}")
    edges = np.concatenate(([0.0], log_breakpoints(w_min, 1.0, per_decade)))
    w, weights = panel_rule(edges)
    log_s = np.log(start) - np.log(w) / beta
    keep = log_s < max_log
    w, weights, log_s = w[keep], weights[keep], log_s[keep]
    return np.exp(log_s), weights * (start / beta) * np.exp(-(1.0 / beta + 1.0) * np.log(w))
