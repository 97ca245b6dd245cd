import numpy as np
import pytest


@pytest.fixture
def rng():
    """Deterministic generator for tests that sample their own inputs."""
    return np.random.default_rng(20260825)
