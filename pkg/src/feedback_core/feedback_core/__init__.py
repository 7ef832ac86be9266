"""Solvers for coherent time-delayed self-feedback of a cavity-QED system."""

from .enums import Channel, InitialKind, MirrorModel, RhsVariant
from .errors import ConfigError, FeedbackError, NonFiniteState
from .models import ComplexTrajectory, ModelParams, TimeGrid, gamma_tau, validate

__all__ = [
    "Channel",
    "ComplexTrajectory",
    "ConfigError",
    "FeedbackError",
    "InitialKind",
    "MirrorModel",
    "ModelParams",
    "NonFiniteState",
    "RhsVariant",
    "TimeGrid",
    "gamma_tau",
    "validate",
]
