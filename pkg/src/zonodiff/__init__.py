"""Distributed set-based state estimation with zonotopes.

Two observers over a simulated sensor network: a set-membership observer
(strip intersection + diffusion + time update) and an interval-based
Luenberger observer (combined gain update + diffusion), both with
guaranteed containment of the true state under bounded noise.
"""

from .intersection import (
    DiffusionWeights,
    Strip,
    StripIntersectionGain,
    intersect_strips,
    intersect_zonotopes,
    optimal_diffusion_weights,
    optimal_strip_gain,
)
from .metrics import (
    RADIUS_FROBENIUS,
    RADIUS_HALF_DIAGONAL,
    SimRecord,
    StepSummary,
    RunSummary,
    bench_observer_updates,
    build_records,
    hausdorff_2d,
    radius,
    summarize,
    time_op,
)
from .network import (
    RoundTrace,
    SimulationResult,
    Topology,
    ring_topology,
    run_round,
    run_simulation,
    topology_from_json,
    topology_to_json,
)
from .observers import (
    NeighborhoodInput,
    NodeState,
    ObserverConfig,
    ObserverKind,
    iv_luenberger_update,
    luenberger_gain,
    sm_diffusion_update,
    sm_measurement_update,
    sm_time_update,
    step,
)
from .plant import (
    SystemModel,
    Trajectory,
    alternating_schedule,
    paper_scenario,
    sample_in_zonotope,
    simulate,
    trajectory_from_csv,
    trajectory_to_csv,
)
from .zonotope import (
    Zonotope,
    contains_point,
    f_radius,
    interval_hull,
    linear_map,
    minkowski_sum,
    reduce,
    vertices_2d,
)

__version__ = "0.1.0"
