"""
Environment and experiment configuration
"""

import json
import logging
import os
from enum import Enum
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from engine.errors import DomainError
from engine.params import QuadSpec

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DEFAULT_SEED = 20240601

logger = logging.getLogger(__name__)


class Command(str, Enum):
    CONSTANTS = "constants"
    VERIFY = "verify"
    REARRANGE = "rearrange"
    MINIMIZE = "minimize"
    SOLVE_SYSTEM = "solve-system"
    SPHERES = "spheres"
    LOG_LIMIT = "log-limit"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


def setup_logging() -> None:
    """Load .env and configure the root logger once."""
    load_dotenv()
    logging.basicConfig(level=os.getenv("RHLS_LOG_LEVEL", "INFO").upper(), format=LOG_FORMAT)


def default_seed() -> int:
    return int(os.getenv("RHLS_SEED", str(DEFAULT_SEED)))


def default_quad_spec() -> QuadSpec:
    """QuadSpec from the RHLS_* environment variables."""
    return QuadSpec(
        angular_nodes=int(os.getenv("RHLS_ANGULAR_NODES", "64")),
        radial_nodes_per_decade=int(os.getenv("RHLS_RADIAL_NODES_PER_DECADE", "64")),
        truncation_radius=float(os.getenv("RHLS_TRUNCATION_RADIUS", "50")),
        target_rel_tol=float(os.getenv("RHLS_TARGET_REL_TOL", "1e-6")),
        max_refinements=int(os.getenv("RHLS_MAX_REFINEMENTS", "6")),
    )


class ExperimentConfig(BaseModel):
    """Flat experiment description; a JSON file mirrors the CLI flags."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    command: Command
    n: int = Field(default=1, ge=1)
    p: float | None = None
    r: float | None = None
    lam: float = Field(default=1.0, alias="lambda")
    f: str = "ball"
    g: str | None = None
    center: list[float] | None = None
    radius: float | None = None
    samples: int = Field(default=64, ge=1)
    cases: int = Field(default=1, ge=1)
    max_iter: int | None = Field(default=None, ge=1)
    tol: float | None = Field(default=None, gt=0.0)
    strict: bool = False
    seed: int = Field(default_factory=default_seed)
    out: str | None = None
    format: OutputFormat = OutputFormat.JSON
    quad: QuadSpec = Field(default_factory=default_quad_spec)

    def report_header(self) -> dict:
        """The config as embedded in every report."""
        return self.model_dump(mode="json", by_alias=True, exclude={"out"})


def load_config(path: str | Path | None, overrides: dict) -> ExperimentConfig:
    """Read a flat JSON config file, then apply non-None flag overrides on top.

    Raises:
        DomainError: if the file is missing or the merged values do not validate.
    """
    values: dict = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise DomainError(f"config file not found: {config_path}")
        with config_path.open(encoding="utf-8") as handle:
            values = json.load(handle)
        if not isinstance(values, dict):
            raise DomainError(f"config file {config_path} must hold a JSON object")
        logger.info(f"Loaded config from {config_path}")
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise DomainError(f"invalid experiment config: {e}") from e
