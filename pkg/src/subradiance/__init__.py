"""Cooperative single-photon decay of De Moivre states in 3D atomic arrays."""

from .dmstates import DMState, bare_to_dm, coupling_strength, coupling_strengths, dm_basis, dm_state, dm_to_bare
from .dynamics import (EvolutionResult, WeightingTable, beat_frequencies, dominant_beats,
                       effective_decay_rate, evolve_dm, oracle_integrate, weighting_matrix, weightings)
from .errors import AmbiguousDominanceError, IllConditionedError, NumericFailureError
from .kernel import CouplingMatrix, build_coupling_matrix, kernel_F, kernel_G
from .lattice import REFERENCE_LABELING, FieldConfig, LatticeGeometry, build_lattice
from .spectrum import SpectralDecomposition, decompose, propagate_bare

__all__ = [
    "AmbiguousDominanceError", "CouplingMatrix", "DMState", "EvolutionResult", "FieldConfig",
    "IllConditionedError", "LatticeGeometry", "NumericFailureError", "REFERENCE_LABELING",
    "SpectralDecomposition", "WeightingTable", "bare_to_dm", "beat_frequencies",
    "build_coupling_matrix", "build_lattice", "coupling_strength", "coupling_strengths",
    "decompose", "dm_basis", "dm_state", "dm_to_bare", "dominant_beats", "effective_decay_rate",
    "evolve_dm", "kernel_F", "kernel_G", "oracle_integrate", "propagate_bare", "weighting_matrix",
    "weightings",
]
