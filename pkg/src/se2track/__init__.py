"""Tracking, consensus and formation control of nonholonomic robots on SE(2)."""

from .controllers import Gains, single_follower_tracking, tracking_context
from .dynamics import ControlInput, InertiaParams, RelativeState, RobotState, relative_state, step
from .formation import formation_step_inputs, transformed_leader
from .liegroup import ExpCoords, LogBranch, Pose, Twist, exp_se2, log_se2
from .network import Topology, consensus_step_inputs
from .scenario import Scenario, load_scenario, parse_scenario
from .simulate import NumericalDivergence, TrajectoryLog, run

__version__ = "0.1.0"
