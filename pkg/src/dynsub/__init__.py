"""Dynamic substructuring toolkit.

Craig-Bampton model-order reduction of linear substructures plus a
partitioned trapezoidal co-simulation solver coupling them to nonlinear
substructures through Lagrange-multiplier interface forces.
"""

from .coupling import (
    CouplingError,
    CouplingTopology,
    InterfaceOperator,
    compatibility_matrix,
    locator_matrix,
    steklov_poincare,
)
from .metrics import FrequencyErrorTable, MacMatrix, Smoothness, frequency_error_table, mac, smoothness, trajectory_mse
from .models import (
    FirstOrderForm,
    LinearSubstructure,
    ModelError,
    NonlinearSubstructure,
    StateVector,
    SuspensionElement,
    assemble_first_order,
    finite_difference_tangent,
    rayleigh_damping,
    restoring_force,
    tangent_at_zero,
)
from .monolithic import AssembledSystem, analytic_sdof, assemble_global, solve_monolithic, solve_newmark
from .reduction import (
    CraigBamptonReduction,
    ReductionError,
    constraint_modes,
    expand,
    fixed_interface_modes,
    reduce,
)
from .signals import SignalSpec, generate_signal
from .solver import (
    CoupledSystem,
    DivergenceError,
    EffectiveMatrix,
    PartitionedSolver,
    SolverConfig,
    SolverError,
    Trajectory,
    coupling_step,
    effective_matrix,
    free_step,
    simulate,
    simulate_subcycled,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem",
    "CoupledSystem",
    "CouplingError",
    "CouplingTopology",
    "CraigBamptonReduction",
    "DivergenceError",
    "EffectiveMatrix",
    "FirstOrderForm",
    "FrequencyErrorTable",
    "InterfaceOperator",
    "LinearSubstructure",
    "MacMatrix",
    "ModelError",
    "NonlinearSubstructure",
    "PartitionedSolver",
    "ReductionError",
    "SignalSpec",
    "Smoothness",
    "SolverConfig",
    "SolverError",
    "StateVector",
    "SuspensionElement",
    "Trajectory",
    "analytic_sdof",
    "assemble_first_order",
    "assemble_global",
    "compatibility_matrix",
    "constraint_modes",
    "coupling_step",
    "effective_matrix",
    "expand",
    "finite_difference_tangent",
    "fixed_interface_modes",
    "frequency_error_table",
    "free_step",
    "generate_signal",
    "locator_matrix",
    "mac",
    "rayleigh_damping",
    "reduce",
    "restoring_force",
    "simulate",
    "simulate_subcycled",
    "smoothness",
    "solve_monolithic",
    "solve_newmark",
    "steklov_poincare",
    "tangent_at_zero",
    "trajectory_mse",
]
