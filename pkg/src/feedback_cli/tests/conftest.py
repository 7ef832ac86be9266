from typing import Any

import pytest


@pytest.fixture
def small_document() -> dict[str, Any]:
    """A three-interval hierarchy run that finishes in well under a second."""
    return {
        "name": "small",
        "solver": "hierarchy",
        "params": {"gamma": 1.0, "tau": 1.0, "coupling_M": 1.0, "phase": 0.0},
        "grid": {"steps_per_tau": 50, "n_intervals": 3},
    }
