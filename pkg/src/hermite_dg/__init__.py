"""Hermite spectral / discontinuous Galerkin solver for the 1D
Vlasov-Poisson-Fokker-Planck system, with diagnostics for its discrete
conservation laws and decay estimates.
"""

from .dg_space import DGField, l2_project
from .diagnostics import (DiagnosticsRecord, calibrate_alpha0, decay_rate_fit,
                          dissipation_functional, energy_functional, modified_entropy,
                          physical_invariants)
from .errors import (CompatibilityViolation, ConfigError, HermiteDGError, InvalidArgument,
                     InvalidWindow, NumericFailure, UndefinedRatio)
from .mesh import Mesh1D, build_mesh_from_nodes, build_uniform_mesh
from .poisson import ElectricSolution, assemble_poisson, solve_poisson
from .system import (HermiteState, ModelParams, VPFPSystem, equilibrium_state,
                     initial_condition_landau, reconstruct_f, rhs_linearized, rhs_nonlinear)
from .time_integration import TimeStepperConfig, run, step
from .transport import TransportOperator, assemble_transport, solve_auxiliary_elliptic

__version__ = "0.1.0"
