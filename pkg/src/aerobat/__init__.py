"""Five-body flapping-wing flight model with a generalized-momentum force observer."""

__version__ = "0.1.0"

from .aero import AeroConfig, aero_evaluate, aero_matrices, strip_geometry
from .disturbance import Scenario, ground_truth_generalized, point_force_magnitude, sample_noise
from .errors import (
    AerobatError,
    ConfigError,
    DegenerateSeries,
    GimbalLock,
    NoConvergence,
    NonFiniteDerivative,
    NonPositiveDt,
    NumericalSingularity,
    SchemaMismatch,
    SingularConfiguration,
    UnknownChannel,
)
from .linkage import (
    KSConfig,
    KSGait,
    SinusoidalGait,
    computed_torque,
    default_ks_config,
    ks_solve_position,
    ks_velocity_accel,
    simulate_ks,
)
from .metrics import r_squared, rmse, step_response
from .model import (
    AerobatParams,
    coriolis_matrix,
    dynamics_terms,
    forward_dynamics,
    forward_kinematics,
    gravity_vector,
    mass_matrix,
)
from .observer import (
    ObserverState,
    conjugate_momentum,
    extract_point_force_estimate,
    observer_init,
    observer_step,
)
from .sim import SimConfig, SimLog, rk4_step, run_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
