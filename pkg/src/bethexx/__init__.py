"""Longitudinal form factors of the spin-1/2 isotropic Heisenberg chain.

Finite-size Slavnov/Gaudin/Foda-Wheeler determinant representations for
|<ground| sigma^z |excited>|^2, their large-M extraction into perturbed
Cauchy determinants (including close-pair, quartet and wide-pair complex
roots and the higher-level Gaudin system of the hole rapidities), and a
brute-force diagonalization oracle that cross-checks all of it.
"""

from .core import (
    BetheState,
    ClosePair,
    PAULI_ENERGY_SCALE,
    baxter_q,
    bethe_residuals,
    counting_derivative_at_root,
    counting_function,
    counting_log_derivative,
    kernel,
    momentum_phase,
    root_energy,
    spinon_energy_momentum,
    state_energy,
    t_kernel,
    transfer_eigenvalue,
)
from .dets import (
    FormFactorResult,
    LogComplex,
    finite_form_factor,
    foda_wheeler_matrix,
    gaudin_extract,
    gaudin_matrix,
    gaudin_norm,
    logdet,
    regularized_close_pair_columns,
    scalar_product,
    slavnov_matrix,
)
from .solve import (
    DLClassification,
    classify,
    higher_level_roots,
    solve_close_pair_state,
    solve_ground_state,
    solve_hole_excitation,
)
from .thermo import (
    HigherLevelSystem,
    barnes_log_g,
    build_f_excited,
    build_f_ground,
    close_pair_factorization,
    convolution_table_check,
    density,
    hole_density,
    spinon_scattering_factor,
    string_center_condensed,
    thermo_form_factor,
)
from . import core, dets, ed, errors, quadrature, solve, thermo, verify

__all__ = [
    "BetheState", "ClosePair", "PAULI_ENERGY_SCALE", "baxter_q",
    "bethe_residuals", "counting_derivative_at_root", "counting_function",
    "counting_log_derivative", "kernel", "momentum_phase", "root_energy",
    "spinon_energy_momentum", "state_energy", "t_kernel",
    "transfer_eigenvalue",
    "FormFactorResult", "LogComplex", "finite_form_factor",
    "foda_wheeler_matrix", "gaudin_extract", "gaudin_matrix", "gaudin_norm",
    "logdet", "regularized_close_pair_columns", "scalar_product",
    "slavnov_matrix",
    "DLClassification", "classify", "higher_level_roots",
    "solve_close_pair_state", "solve_ground_state", "solve_hole_excitation",
    "HigherLevelSystem", "barnes_log_g", "build_f_excited", "build_f_ground",
    "close_pair_factorization", "convolution_table_check", "density",
    "hole_density", "spinon_scattering_factor", "string_center_condensed",
    "thermo_form_factor",
    "core", "dets", "ed", "errors", "quadrature", "solve", "thermo", "verify",
]
