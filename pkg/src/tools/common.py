"""
Shared helpers for the report tools: profile specs, report headers, JSON output
"""

import json
import logging
import math
from pathlib import Path

import numpy as np

from engine import __version__
from engine.errors import DomainError
from engine.params import Params, QuadSpec
from engine.profiles import ExtremizerKind, RadialProfile, ball_profile, extremizer, read_profile_csv

logger = logging.getLogger(__name__)


def parse_profile(spec: str, params: Params) -> RadialProfile:
    """Resolve `ball`, `bubble:<a>:<b>` or `file:<path>` to a density profile in R^n.

    Raises:
        DomainError: for unknown names, bad bubble parameters or missing files.
    """
    name, _, rest = spec.partition(":")
    if name == "ball":
        return ball_profile(params.n)
    if name == "bubble":
        parts = rest.split(":")
        if len(parts) != 2:
            raise DomainError(f"bubble profiles are written bubble:<a>:<b>, got {spec!r}")
        try:
            a, b = float(parts[0]), float(parts[1])
        except ValueError as e:
            raise DomainError(f"bubble parameters must be numbers, got {spec!r}") from e
        return extremizer(ExtremizerKind.INEQUALITY_EXTREMIZER, params, a=a, b=b)
    if name == "file":
        path = Path(rest)
        if not path.is_file():
            raise DomainError(f"profile file not found: {path}")
        profile = read_profile_csv(path)
        if profile.n != params.n:
            raise DomainError(f"profile {path} lives in R^{profile.n}, expected n={params.n}")
        return profile
    raise DomainError(f"unknown profile {spec!r}; use ball, bubble:<a>:<b> or file:<path>")


def quad_with_tol(quad: QuadSpec, tol: float | None) -> QuadSpec:
    """Apply a --tol override to the quadrature target when it is a valid target."""
    if tol is None or not 1e-12 < tol < 1e-2:
        return quad
    return quad.model_copy(update={"target_rel_tol": tol})


def make_report(header: dict, body: dict, rel_err: float | None, warnings: list[str] | None = None) -> dict:
    return {
        "version": __version__,
        "config": header,
        "rel_err": rel_err,
        **body,
        "warnings": list(warnings or []),
    }


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.floating):
        return _clean(float(value))
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {key: _clean(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dump_report(report: dict) -> str:
    """Deterministic JSON: sorted keys, numpy scalars converted, non-finite floats as null."""
    return json.dumps(_clean(report), indent=2, sort_keys=True)


def error_envelope(message: str, error: Exception) -> str:
    return json.dumps({"error": message, "details": str(error)}, indent=2)
