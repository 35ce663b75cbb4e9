"""Single-photon scattering and localization in quasiperiodic waveguide-QED chains."""

from .model import (
    ConfigError,
    FibonacciApproximant,
    Golden,
    LatticeSpec,
    Rational,
    approximant_for_eta,
    fibonacci_approximant,
    parse_beta,
    qubit_positions,
)
from .transfer import chain_matrix, resistance, scatter, scatter_many
from .effective import AtFrequency, Markov, build_effective_hamiltonian, eigendecompose, spectrum
from .green import reflection_green, reflection_modal, scatter_green, transmission_green
from .bands import BandLabel, bloch_hamiltonian, inverse_bands, localization_fraction
from .analysis import Phase, classify, overall_reflection, phase_map, scaling_fits, transmission_vs_size

__version__ = "0.1.0"
