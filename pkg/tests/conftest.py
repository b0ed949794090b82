import pytest

from engine.params import QuadSpec


@pytest.fixture
def coarse_spec() -> QuadSpec:
    """Resolution used by the randomized suites."""
    return QuadSpec(radial_nodes_per_decade=32, target_rel_tol=1e-4, max_refinements=1)


@pytest.fixture
def fine_spec() -> QuadSpec:
    return QuadSpec()
