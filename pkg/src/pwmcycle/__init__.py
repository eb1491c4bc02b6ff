"""Exact discrete-time small-signal models of analog-controlled PWM
DC-DC converters.

The package computes periodic steady states of piecewise-linear switching
converters, linearizes the one-cycle map under four PWM logics
(constant-on-time, constant-off-time, fixed-frequency trailing- and
leading-edge), evaluates stability eigenvalues and z-domain transfer
functions, maps edge-time perturbations to equivalent duty, performs the
port-structured rank-1 reduction onto an integrator-cascade kernel, and
verifies everything against an in-package event-driven switching
simulator.
"""

from ._backend import NUMBA_ENABLED, backend_name
from .distill import (DistilledModel, amp_second_current,
                      cycle_start_current, distill, distilled_cycle_map,
                      distilled_segment_propagator, solve_distilled_dc,
                      volt_second_residual)
from .duty import (DutyKind, DutyOperatorSpec, duty_gain,
                   duty_sequence_from_edges, measured_duty_gain)
from .errors import (ConfigError, DegenerateEliminationError,
                     DivergenceError, EdgeCollisionError,
                     EventNotReachedError, ModelError, ModulatorError,
                     PoleError, PropagationOverflowError, PwmCycleError,
                     SingularMapError, SolverError)
from .model import (ComparatorSpec, ConverterModel, PwmKind, PwmLogic,
                    build_buck, validate)
from .propagation import (Composition, Propagator, PwlSegment, compose,
                          propagator, propagator_time_derivatives)
from .sim import (SimulationTrace, fd_jacobian, find_event_time,
                  measure_frequency_response, one_cycle_map,
                  simulate_cycles)
from .smallsignal import (JacobianBlocks, LinearizedCycleMap,
                          boundary_brackets, closed_loop_eigenvalues,
                          control_to_output_tf, jacobian_blocks,
                          linearized_map, stability_sweep)
from .steady import (PeriodicOperatingPoint, fixed_point_fixed_timing,
                     solve_periodic)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED", "backend_name",
    "PwlSegment", "Propagator", "Composition", "propagator",
    "propagator_time_derivatives", "compose",
    "ComparatorSpec", "ConverterModel", "PwmKind", "PwmLogic", "build_buck",
    "validate",
    "PeriodicOperatingPoint", "fixed_point_fixed_timing", "solve_periodic",
    "JacobianBlocks", "LinearizedCycleMap", "jacobian_blocks",
    "linearized_map", "closed_loop_eigenvalues", "control_to_output_tf",
    "stability_sweep", "boundary_brackets",
    "DutyKind", "DutyOperatorSpec", "duty_gain", "duty_sequence_from_edges",
    "measured_duty_gain",
    "DistilledModel", "distill", "distilled_segment_propagator",
    "distilled_cycle_map", "volt_second_residual", "amp_second_current",
    "cycle_start_current", "solve_distilled_dc",
    "SimulationTrace", "find_event_time", "simulate_cycles", "one_cycle_map",
    "fd_jacobian", "measure_frequency_response",
    "PwmCycleError", "ModelError", "ConfigError", "SolverError",
    "SingularMapError", "ModulatorError", "DegenerateEliminationError",
    "PoleError", "EventNotReachedError", "DivergenceError",
    "EdgeCollisionError", "PropagationOverflowError",
]
