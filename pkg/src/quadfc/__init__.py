"""Software-in-the-loop quadcopter flight control toolkit."""

from .vehicle import (GRAVITY, MotorCommand, PropulsorBank, StateVector,
                      VehicleParams, WrenchInput, dynamics_derivative,
                      hover_equilibrium, integrate_step, propulsor_steady_state,
                      propulsor_step, propulsor_wrench,
                      rotation_body_to_inertial, wrap_angle)
from .linmodels import (AXES, Axis, AugmentedSubmodel, ContinuousSubmodel,
                        DiscreteSubmodel, augment_integrator,
                        continuous_submodels, discrete_submodels, discretize)
from .controllers import (AntiWindupConfig, Cascade, CascadeConfig, LqrGains,
                          LqriState, PidConfig, PidState, SaturationLimits,
                          actuator_envelopes, cascade_step, command_mapping,
                          dare_solve, lqr_gains, lqr_step, lqri_step,
                          make_empc_cascade, make_lqr_cascade,
                          make_lqri_cascade, make_pd_cascade, make_pid_cascade,
                          pid_step)
from .empc import (CondensedQp, ExplicitTable, GridSpec, MpcConfig,
                   QpSolution, build_explicit_table, condense_qp,
                   default_grid, default_mpc_config, empc_lookup, load_table,
                   save_table, solve_qp)
from .estimation import (EstimatorBank, GaussMarkovModel, ImuSample, KfState,
                         MeasurementEvent, MeasurementKind,
                         estimator_bank_step, kf_predict, kf_update)
from .guidance import (CircleReference, CircleScenario, ReferenceVector,
                       StepScenario, align_bundle, circle_reference, yaw_align)
from .sim import (DisturbanceConfig, Metrics, SensorConfig, SimLog,
                  SimScenario, benchmark_controllers, build_empc_tables,
                  compute_metrics, run_closed_loop, sensor_simulate)
from .sysid import (FitResult, bifilar_inertia, fit_speed_map,
                    fit_thrust_moment, fit_time_constant, periodogram_peak)

__version__ = "0.1.0"
