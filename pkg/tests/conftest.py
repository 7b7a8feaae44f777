from __future__ import annotations

import numpy as np
import pytest

from shadowlab import Flow, VectorField


@pytest.fixture(scope="session")
def flows():
    """One Flow per catalog field, shared across the session (warms the
    compiled kernels once)."""
    from shadowlab.fields import CATALOG_NAMES

    return {name: Flow(VectorField.catalog(name)) for name in CATALOG_NAMES}


# Sampling boxes that keep |t| <= 2 excursions inside the default patch.
SAMPLE_SCALE = {
    "sink": 1.0,
    "source": 0.5,
    "saddle": 0.5,
    "center": 1.0,
    "monkey": 0.3,
    "saddle_node": 0.3,
    "limit_cycle": 0.8,
    "semistable_cycle": 0.8,
    "torus_gradient": np.pi,
}


def sample_points(name: str, rng: np.random.Generator, n: int) -> np.ndarray:
    s = SAMPLE_SCALE[name]
    if name == "torus_gradient":
        return rng.uniform(0, 2 * np.pi, size=(n, 2))
    return rng.uniform(-s, s, size=(n, 2))
