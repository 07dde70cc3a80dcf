"""Gaussian-state phase estimation: QFI, detector sensitivities and a Fock-space oracle."""

from .elements import (
    PHI,
    BeamSplitter,
    Loss,
    Opa,
    PhaseShifter,
    Pipeline,
    build_mzi,
    build_single_mode_chain,
    build_su11,
    g_from_gain,
    propagate_with_derivative,
)
from .errors import ConfigError, GaussMetroError, PhysicsError, TruncationError
from .estimation import detector_sensitivity, m_detection, qcrb, qfi, sld
from .state import GaussianState, InputSpec

__version__ = "0.1.0"

__all__ = [
    "PHI",
    "BeamSplitter",
    "ConfigError",
    "GaussMetroError",
    "GaussianState",
    "InputSpec",
    "Loss",
    "Opa",
    "PhaseShifter",
    "PhysicsError",
    "Pipeline",
    "TruncationError",
    "build_mzi",
    "build_single_mode_chain",
    "build_su11",
    "detector_sensitivity",
    "g_from_gain",
    "m_detection",
    "propagate_with_derivative",
    "qcrb",
    "qfi",
    "sld",
]
