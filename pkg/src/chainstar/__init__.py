"""Spin-chain-star systems: N-wise Hamiltonians, their reduction to spin-star
models, exact dynamics, and W/GHZ chain-entanglement checks."""

from .dynamics import (
    EvolutionTrace,
    RabiParams,
    analytic_trace,
    calibrate_convention,
    evolve_dense,
    evolve_matrix_free,
    evolve_spec,
    revival_check,
    w_chain_state,
    w_fidelity_peak,
    w_state,
    xx_amplitudes,
)
from .entanglement import (
    ConcurrenceReport,
    chain_pair_concurrence,
    concurrence,
    ghz_chain_state,
    ghz_postselect,
    spin_pair_concurrence,
)
from .models import (
    EffectiveStarParams,
    ModelSpec,
    SpinLayout,
    build_chain_star,
    build_standard_star,
    detuning,
    load_model_spec,
)
from .pauli import DensityMatrix, PauliString, PauliSum, StateVector, apply_string, materialize, partial_trace
from .reduction import (
    ReductionReport,
    chain_transform,
    conjugate,
    enumerate_sectors,
    invariant_subspace_basis,
    reduce_chain_axis,
    reduce_field,
    sector_effective_model,
    triplet_transform,
)

__version__ = "0.1.0"

__all__ = [
    "ConcurrenceReport",
    "DensityMatrix",
    "EffectiveStarParams",
    "EvolutionTrace",
    "ModelSpec",
    "PauliString",
    "PauliSum",
    "RabiParams",
    "ReductionReport",
    "SpinLayout",
    "StateVector",
    "analytic_trace",
    "apply_string",
    "build_chain_star",
    "build_standard_star",
    "calibrate_convention",
    "chain_pair_concurrence",
    "chain_transform",
    "concurrence",
    "conjugate",
    "detuning",
    "enumerate_sectors",
    "evolve_dense",
    "evolve_matrix_free",
    "evolve_spec",
    "ghz_chain_state",
    "ghz_postselect",
    "invariant_subspace_basis",
    "load_model_spec",
    "materialize",
    "partial_trace",
    "reduce_chain_axis",
    "reduce_field",
    "revival_check",
    "sector_effective_model",
    "spin_pair_concurrence",
    "triplet_transform",
    "w_chain_state",
    "w_fidelity_peak",
    "w_state",
    "xx_amplitudes",
]
