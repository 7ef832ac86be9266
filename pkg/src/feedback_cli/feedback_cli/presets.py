"""Scenario presets for the three delay regimes and the many-photon runs.

Each preset is a partial scenario document; file fields and CLI flags are
merged on top of it. With M = Γ = 1 the regimes are set by τM/2π:

* long_tau: 4 (the returning field meets a decayed system),
* rabi_tau: 1 (the delay matches one Rabi period, oscillations stabilize),
* short_tau: 0.1 (in- and outgoing field overlap).

Step counts keep M·dt ≈ 2π·10⁻³.
"""

import math
from enum import StrEnum
from typing import Any


class Preset(StrEnum):
    """Available scenario presets."""

    LONG_TAU = "long_tau"
    RABI_TAU = "rabi_tau"
    SHORT_TAU = "short_tau"
    MANY_PHOTONS = "many_photons"


# τ·M/2π per delay regime
REGIME_RATIOS: dict[Preset, float] = {
    Preset.LONG_TAU: 4.0,
    Preset.RABI_TAU: 1.0,
    Preset.SHORT_TAU: 0.1,
}

_STEPS_PER_PERIOD = 1000


def _regime(ratio: float) -> dict[str, Any]:
    return {
        "solver": "hierarchy",
        "params": {
            "gamma": 1.0,
            "coupling_M": 1.0,
            "tau": 2.0 * math.pi * ratio,
            "phase": 0.0,
        },
        "grid": {
            "steps_per_tau": round(_STEPS_PER_PERIOD * ratio),
            "n_intervals": 12,
        },
        "initial": {"kind": "emitter_excited"},
    }


PRESETS: dict[Preset, dict[str, Any]] = {
    **{preset: _regime(ratio) for preset, ratio in REGIME_RATIOS.items()},
    # Mτ = 2π·k for M ∈ {0.5, 1, 2}
    Preset.MANY_PHOTONS: {
        "solver": "factorized",
        "params": {
            "gamma": 1.0,
            "coupling_M": 1.0,
            "tau": 4.0 * math.pi,
            "phase": 0.0,
        },
        "grid": {"steps_per_tau": 2500, "n_intervals": 10},
        "initial": {"kind": "cavity_photons", "photons": 15.0},
    },
}
