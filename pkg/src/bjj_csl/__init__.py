"""CSL collapse and laboratory decoherence in a two-mode Bose Josephson junction."""
from .fock import DensityMatrix, DomainError, NumericalError, TwoModeState
from .dynamics import ModelParams, evolve_csl_analytic, integrate_master_equation
from .kernels import WellGeometry, gamma_bar
from .states import noon_state, phase_state, superposition_state

__all__ = [
    "DensityMatrix",
    "DomainError",
    "ModelParams",
    "NumericalError",
    "TwoModeState",
    "WellGeometry",
    "evolve_csl_analytic",
    "gamma_bar",
    "integrate_master_equation",
    "noon_state",
    "phase_state",
    "superposition_state",
]

__version__ = "0.1.0"
