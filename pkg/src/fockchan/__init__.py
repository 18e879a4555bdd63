"""Photon-added Gaussian channels in the Fock basis."""

from .errors import DomainError, ToleranceError, TruncationWarning
from .fock_core import (
    DiagonalState,
    FockDensityMatrix,
    PureState,
    Truncation,
    fock_state,
    pats_state,
    thermal_state,
)
from .kraus import (
    PhotonAddedChannel,
    build_amplifier,
    build_attenuator,
    build_channel,
    build_conjugator,
)
from .channel import apply, apply_diagonal, complementary, mixture_noisy
from .info import coherent_information, von_neumann_entropy

__all__ = [
    "DiagonalState", "DomainError", "FockDensityMatrix", "PhotonAddedChannel", "PureState",
    "ToleranceError", "Truncation", "TruncationWarning", "apply", "apply_diagonal",
    "build_amplifier", "build_attenuator", "build_channel", "build_conjugator",
    "coherent_information", "complementary", "fock_state", "mixture_noisy", "pats_state",
    "thermal_state", "von_neumann_entropy",
]
__version__ = "0.1.0"
