"""Deterministic simulation and analysis of event-triggered multi-agent
consensus under sensor and actuator attacks."""

from .analysis import (
    ConsensusReport,
    EventStats,
    cluster_report,
    disagreement,
    disagreement_series,
    inter_event_stats,
    settle_time,
)
from .attack import (
    AttackChannel,
    AttackSpec,
    DegenerateReplayError,
    ReplayState,
    StepSignal,
    apply_actuator_attack,
    apply_sensor_attack,
    arm_replay,
    replay_bounds,
    sample_theta,
)
from .dynamics import GainMatrix, GainReport, LinearDynamics, propagate, verify_gain
from .engine import (
    AgentFlag,
    Scenario,
    Trace,
    classify_agents,
    detect_continuous_triggering,
    detect_non_triggering,
    simulate,
)
from .fixtures import list_fixtures, load_fixture
from .graph import (
    Graph,
    LaplacianSpectrum,
    build_graph,
    components_after_removal,
    is_connected,
    is_vertex_cut,
    laplacian,
    laplacian_eigenpairs,
    laplacian_eigenvalues,
)
from .scenario_io import ScenarioDocument, ScenarioError, parse_scenario
from .triggering import (
    AgentBuffers,
    Mechanism,
    TriggerConfig,
    cs_control,
    cs_measurement_error,
    cs_trigger_check,
    local_tracking_error,
    on_trigger,
    s_control,
    s_measurement_error,
    s_trigger_check,
)

__version__ = "0.1.0"
