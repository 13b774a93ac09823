"""Neumann boundary control of the variable-coefficient heat equation on a
half-axis through transformation operators."""
from ._accel import BACKEND
from .coeffs import (CoefficientSet, DerivedData, choose_truncation, compute_sigma, derive,
                     from_expressions, preset, validate_assumptions)
from .controlmap import (EstimateReport, VolterraProblem, build_volterra_problem,
                         map_control_forward, map_control_inverse, solve_volterra,
                         solve_volterra_marching, verify_estimates)
from .errors import (ConditioningWarning, ConvergenceError, DegenerateGridError, DomainError,
                     HeatCtlError, OutOfRangeError)
from .heat import (ControlSignal, HeatState, boundary_trace, heat_profile, solve_heat_fourier,
                   solve_heat_line)
from .kernels import (KernelK, KernelL, boundary_derivative_K, solve_goursat_K, solve_L_from_K,
                      verify_kernel_bounds)
from .numerics import GridSpec, SampledFunction
from .synth import (SynthesisSpec, lift_synthesis, null_target_experiment, synthesize_piecewise,
                    terminal_residual)
from .transforms import (TransformContext, apply_D_rhok, apply_S, apply_S_inv, apply_That,
                         apply_That_inv, apply_Tr, apply_Tr_inv, norm_H0, norm_H1, norm_HH0,
                         norm_HH1, operator_norms)

__version__ = "0.1.0"
