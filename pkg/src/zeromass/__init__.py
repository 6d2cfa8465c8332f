"""Variational solver and verification harness for zero-mass nonlinear
Schrodinger equations -Delta u + V(x) u = f(u) on R^N with potentials
vanishing at infinity.

The pieces: radial shooting for the limit-problem ground state, two-bump
trial fields with interaction scans, projection onto the Pohozaev manifold,
a projected-descent search for bound states, and hypothesis checkers that
gate all of it.
"""

from .errors import (ConfigError, DomainError, NumericalError,
                     ProjectionError, ResolutionError, TruncationError)
from .fields import (FDGrid, PanelGrid, McSampler, ScanResult, SlopeFit,
                     fit_log_slope, kernel_overlap_scan,
                     three_kernel_overlap_scan, unit_sphere_area)
from .functionals import (EnergyReport, evaluate, rho_lower_bound,
                          scaling_path, sobolev_constant)
from .limit_problem import (GroundState, RadialField, RadialProfile,
                            find_fast_decay, ground_state, limit_energy,
                            ode_residual, shoot)
from .nonlinearity import (Nonlinearity, builtin_model, check_f_hypotheses,
                           eval_g, from_table)
from .potential import (Potential, check_V_hypotheses, from_callable,
                        from_radial, model_potential)
from .projection import (LandscapeReport, ProjectionResult, project,
                         projection_landscape, two_bump_projection_scan, xi)
from .report import CheckItem, HypothesisReport
from .search import (GridField, LevelReport, SearchOpts, SearchState,
                     barycenter, grid_field_from_profile, level_diagnostics,
                     minimize_on_manifold, perturbed_start,
                     refined_radial_energy)
from .two_bump import (BumpsField, TwoBumpConfig, antipodal_config, build_U,
                       cross_term, epsilon, grad_interaction,
                       interaction_suite, mixed_power, near_additivity_check,
                       windowed_mass_sq)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
