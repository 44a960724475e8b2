"""Analytic regulator-equation solutions and flatness/regulator-based tracking."""

from .analysis import (check_solvability, invariant_zeros, relative_degrees,
                       rosenbrock_rank)
from .canonical import (brunovsky_normalize, kronecker_indices,
                        reldeg_transform, to_controllable_canonical)
from .errors import (NumericalError, PreconditionError, RegtrackError,
                     SolvabilityError, StructuralError, ValidationError)
from .model import (DampedSinusoid, Exosystem, Exponential, LinearSystem,
                    Polynomial, Sinusoid, TrajectorySpec, assemble_exosystem,
                    realize_bohl, validate_system)
from .regulator import RegulatorSolution, solve_oracle, solve_regulator
from .sim import SimTrace, TrackingMetrics, internal_spectrum, metrics, simulate
from .tracking import (ErrorDynamicsSpec, TrackingController, design_cancel,
                       design_fbt, design_ort, place_poles, verify_equivalence,
                       zero_cancel, zero_cancel_siso, zero_compensate_mimo)

__version__ = "0.1.0"
