"""Center-of-mass localization in quadratic many-body models."""
from .errors import (CMLimitError, InsufficientDataError, InvalidArgumentError, InvalidSpecError,
                     OracleFailureError, SingularModelError, UnsupportedScenarioError)
from .kernels import BACKEND
from .model import (InteractionSpec, QuadraticModel, ScalingPreset, SystemSpec, TrapSpec,
                    build_model, load_config, validate)
from .gaussian import (GaussianState, cm_observables, ground_cm_observables, ground_energy,
                       ground_state, normal_modes)
from .dynamics import ClassicalPoint, ehrenfest_compare, evolve_exact
from .asymptotics import (commutator_suppression, finite_volume_bound, fit_power_law,
                          localization_sweep, norm_distance_supremum, strong_convergence_distance)

__version__ = "0.1.0"
