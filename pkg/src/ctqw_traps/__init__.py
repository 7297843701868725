"""Coherent vs incoherent exciton transport on graphs with trap nodes."""

from .analysis import (
    CollapseReport,
    FitResult,
    NoCrossoverError,
    collapse_curves,
    detect_crossover,
    fit_decay_exponent,
    fit_exponential_tail,
    fit_prefactor_scaling,
    fit_spectral_exponent,
    gamma_sweep,
    intermediate_window,
    physical_time,
)
from .classical import (
    classical_curve,
    classical_mean_survival,
    classical_transition,
    master_equation_oracle,
)
from .curves import Model, SurvivalCurve, TimeGrid
from .graph import (
    DiagonalMode,
    HamiltonianSpec,
    TrapSet,
    build_chain,
    build_from_adjacency,
    build_long_range_chain,
    classical_transfer_matrix,
    quantum_hamiltonian,
)
from .quantum import (
    InvalidConfigurationError,
    mean_survival,
    mean_survival_longtime,
    node_survival,
    powerlaw_model,
    propagate_oracle,
    spectrum_of,
    survival_curve,
    transition_amplitude,
)
from .spectral import (
    ExceptionalPointError,
    SignConventionError,
    Spectrum,
    decompose,
    gamma_min,
    sort_by_decay,
    verify,
)

__all__ = [
    "Model",
    "SurvivalCurve",
    "TimeGrid",
    "build_chain",
    "build_from_adjacency",
    "build_long_range_chain",
    "classical_curve",
    "classical_mean_survival",
    "classical_transfer_matrix",
    "classical_transition",
    "collapse_curves",
    "CollapseReport",
    "decompose",
    "detect_crossover",
    "DiagonalMode",
    "ExceptionalPointError",
    "fit_decay_exponent",
    "fit_exponential_tail",
    "fit_prefactor_scaling",
    "fit_spectral_exponent",
    "FitResult",
    "gamma_min",
    "gamma_sweep",
    "HamiltonianSpec",
    "intermediate_window",
    "InvalidConfigurationError",
    "master_equation_oracle",
    "mean_survival",
    "mean_survival_longtime",
    "NoCrossoverError",
    "node_survival",
    "physical_time",
    "powerlaw_model",
    "propagate_oracle",
    "quantum_hamiltonian",
    "SignConventionError",
    "sort_by_decay",
    "Spectrum",
    "spectrum_of",
    "survival_curve",
    "transition_amplitude",
    "TrapSet",
    "verify",
]

__version__ = "0.1.0"
