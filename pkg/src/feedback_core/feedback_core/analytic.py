"""Closed-form reference solutions.

* Emitter (or, identically, a single cavity photon) decaying in front of a
  mirror: c_e(t) = Σ_n Γ_τ^n (t−nτ)^n e^{−Γ(t−nτ)} / n!, summed over the
  n with t − nτ > 0.
* Emitter coupled to a feedback cavity at M = Γ/2: the Laplace-series form of
  the cavity amplitude c_g(t).
* Empty cavity (M = 0): the photon number on the first two τ-intervals.

The delay terms vanish for t − nτ ≤ 0, so every series is finite.
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import gammaln

from .errors import NegativeTime, OutOfRangeTime, UnsupportedCoupling
from .models import ModelParams, gamma_tau

# Beyond this delay order the JCM inner sum is built from log-gamma terms.
LOG_GAMMA_ORDER = 20

COUPLING_RTOL = 1e-12


class SeriesTruncation(BaseModel):
    """Highest delay order kept, plus an optional tail bound for early stop."""

    model_config = ConfigDict(frozen=True)

    n_max: int = Field(ge=0)
    tolerance: float = Field(default=0.0, ge=0.0)


def series_truncation(params: ModelParams, t: float) -> SeriesTruncation:
    """Smallest exact truncation at time ``t``: n_max = floor(t/τ)."""
    if t < 0:
        raise NegativeTime(f"t must be non-negative, got {t}")
    return SeriesTruncation(n_max=math.floor(t / params.tau))


def _orders(params: ModelParams, t: float, truncation: SeriesTruncation | None):
    exact = series_truncation(params, t)
    if truncation is None:
        return exact.n_max, 0.0
    return min(truncation.n_max, exact.n_max), truncation.tolerance


def mirror_emitter_amplitude(
    params: ModelParams, t: float, truncation: SeriesTruncation | None = None
) -> complex:
    """c_e(t) for an emitter in front of a mirror, c_e(0) = 1.

    The printed series carries e^{Γ_τ τ} where the delay equation requires
    e^{Γτ}; the form summed here is the one that solves the delay equation.
    The same amplitude describes a decaying cavity mode holding one photon.
    """
    n_max, tolerance = _orders(params, t, truncation)
    rate = gamma_tau(params)
    total = 0j
    for n in range(n_max + 1):
        x = t - n * params.tau
        if x <= 0 and n > 0:
            break
        # (Γ_τ x)^n / n! as a running product
        term = complex(np.prod(rate * x / np.arange(1, n + 1))) if n else 1 + 0j
        term *= math.exp(-params.gamma * x)
        total += term
        if tolerance and abs(term) < tolerance and n >= abs(rate) * t:
            break
    return total


def mirror_emitter_amplitudes(params: ModelParams, times: np.ndarray) -> np.ndarray:
    return np.array([mirror_emitter_amplitude(params, float(t)) for t in times])


def _jcm_inner_sum(n: int, ax: float) -> float:
    """n!·Σ_k (−1)^k / (k!(n−k)!) · (ax)^{n+1+k} / (n+1+k)!"""
    if ax <= 0:
        return 0.0
    if n <= LOG_GAMMA_ORDER:
        return sum(
            (-1) ** k
            * math.comb(n, k)
            * ax ** (n + 1 + k)
            / math.factorial(n + 1 + k)
            for k in range(n + 1)
        )
    k = np.arange(n + 1)
    log_terms = (
        gammaln(n + 1)
        - gammaln(k + 1)
        - gammaln(n - k + 1)
        + (n + 1 + k) * math.log(ax)
        - gammaln(n + 2 + k)
    )
    signs = np.where(k % 2 == 0, 1.0, -1.0)
    shift = log_terms.max()
    return float(math.exp(shift) * np.sum(signs * np.exp(log_terms - shift)))


def jcm_ground_amplitude(
    params: ModelParams, t: float, truncation: SeriesTruncation | None = None
) -> complex:
    """Cavity amplitude c_g(t) with the emitter excited at t = 0, for M = Γ/2.

    Global phase: the factor −i solves ċ_e = −iM c_g; the printed +i differs
    from it only by a frame convention.
    """
    if not math.isclose(
        params.coupling_M, params.gamma / 2, rel_tol=COUPLING_RTOL, abs_tol=1e-15
    ):
        raise UnsupportedCoupling(
            f"closed form needs M = gamma/2, got M={params.coupling_M},"
            f" gamma={params.gamma}",
            field="coupling_M",
        )
    n_max, tolerance = _orders(params, t, truncation)
    if params.gamma == 0:
        return 0j
    a = params.gamma / 2
    # Γ_τ^n / a^n with Γ/a = 2
    ratio = 2.0 * np.exp(1j * params.phase)
    total = 0j
    for n in range(n_max + 1):
        x = t - n * params.tau
        if x <= 0:
            break
        term = ratio**n * math.exp(-a * x) * _jcm_inner_sum(n, a * x)
        total += term
        if tolerance and abs(term) < tolerance:
            break
    return -1j * total


def jcm_ground_amplitudes(params: ModelParams, times: np.ndarray) -> np.ndarray:
    return np.array([jcm_ground_amplitude(params, float(t)) for t in times])


def empty_cavity_photon_number(params: ModelParams, N0: float, t: float) -> float:
    """⟨c†c⟩(t) of a cavity without emitter, for 0 ≤ t < 2τ.

    M is ignored: without the emitter the photon manifolds decouple.
    """
    if t < 0:
        raise NegativeTime(f"t must be non-negative, got {t}")
    tau, gamma = params.tau, params.gamma
    if t >= 2 * tau:
        raise OutOfRangeTime(f"closed form covers [0, 2tau), got t={t}")
    if t < tau:
        return N0 * math.exp(-2 * gamma * t)
    rate = gamma_tau(params)
    s = t - tau
    return (
        N0 * abs(rate) ** 2 * math.exp(-2 * gamma * s) * s**2
        + 2 * N0 * rate.real * math.exp(-gamma * (2 * t - tau)) * s
        + N0 * math.exp(-2 * gamma * t)
    )


def empty_cavity_two_time(params: ModelParams, N0: float, t: float) -> float:
    """⟨c†(t)c(0)⟩ of the empty cavity on the first interval."""
    if t < 0:
        raise NegativeTime(f"t must be non-negative, got {t}")
    if t >= params.tau:
        raise OutOfRangeTime(f"closed form covers [0, tau), got t={t}")
    return N0 * math.exp(-params.gamma * t)
