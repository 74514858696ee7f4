"""Yaw-plane modeling, robust mixed-objective gain synthesis over polytopic
friction uncertainty, and a maneuver benchmark harness for an independently
driven and steered vehicle."""

from .model import (ChassisState, ControlInput, Disturbance, GeneralizedPlant,
                    LinearPlant, VehicleParams, generalized_plant,
                    integrate_step, linearize, nigel_params,
                    nonlinear_derivatives, tire_slip_angles)
from .uncertainty import (AffineBasis, PolytopicPlant, UncertaintyBox,
                          affine_decomposition, enumerate_vertices,
                          evaluate_at, reduce_to_single_steer)
from .synthesis import (RobustController, SynthesisSpec, certify,
                        export_controller, load_controller,
                        synthesize_pole_placement, synthesize_robust)
from .bench import (FrictionSchedule, ManeuverSpec, RunResult, WindSchedule,
                    benchmark_suite, default_maneuvers, friction_at,
                    generate_reference, run_closed_loop)

__version__ = "0.1.0"
