import math

import pytest

from feedback_core.models import ModelParams, TimeGrid


@pytest.fixture
def mirror_params() -> ModelParams:
    return ModelParams(gamma=1.0, tau=1.0)


@pytest.fixture
def jcm_params() -> ModelParams:
    """Rabi regime: one delay per Rabi period."""
    return ModelParams(gamma=1.0, tau=2.0 * math.pi, coupling_M=1.0)


@pytest.fixture
def short_grid() -> TimeGrid:
    return TimeGrid.from_tau(1.0, steps_per_tau=200, n_intervals=5)
