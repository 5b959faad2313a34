"""Robustness of magic for noisy hypergraph states: exact LPs, analytic bounds and qudit Wigner negativity."""
from __future__ import annotations

from .errors import (
    BasisFormatError,
    CapacityError,
    InputError,
    MagicDecayError,
    NumericalError,
    SolverError,
    UnsupportedError,
)
from .hypergraph import Hypergraph, reduced_density, state_vector
from .pauli import NoiseModel, PauliVector, apply_noise, stabilizer_norm
from .rom import RomResult, ThresholdResult, magic_capacity_diagonal, rom, rom_noisy, threshold
from .stabilizer import BasisStore, StabilizerBasis, enumerate_basis

__all__ = [
    "BasisFormatError",
    "BasisStore",
    "CapacityError",
    "Hypergraph",
    "InputError",
    "MagicDecayError",
    "NoiseModel",
    "NumericalError",
    "PauliVector",
    "RomResult",
    "SolverError",
    "StabilizerBasis",
    "ThresholdResult",
    "UnsupportedError",
    "apply_noise",
    "enumerate_basis",
    "magic_capacity_diagonal",
    "reduced_density",
    "rom",
    "rom_noisy",
    "stabilizer_norm",
    "state_vector",
    "threshold",
]
