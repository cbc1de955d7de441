"""Influence-maximizing billboard slot selection over trajectory data."""

from .corpus import (
    Billboard,
    ExposureModel,
    Slot,
    TrajectoryRecord,
    build_exposure_model,
    enumerate_slots,
    haversine_m,
    parse_billboards,
    parse_trajectories,
    write_billboards,
    write_trajectories,
)
from .errors import InternalInvariantError, ParseError, SlotmaxError, ValidationError
from .influence import (
    ResidualState,
    commit,
    deletion_marginal,
    init_state,
    marginal_gain,
    naive_influence,
    pair_conditional,
)
from .partition import (
    Cluster,
    Partition,
    influence_overlap,
    merge_members,
    overlap_ratio,
    prune_clusters,
    theta_partition,
)
from .pipelines import (
    ALGORITHMS,
    ExperimentRow,
    RunConfig,
    run,
    run_part_greedy,
    run_part_psg_greedy,
    run_psg_greedy,
    sweep,
    write_rows,
)
from .psg import PsgParams, PsgReduction, divergence, prune, psg_greedy, psg_random_k
from .selection import (
    SelectionResult,
    brute_force_opt,
    greedy,
    max_coverage,
    random_k,
    top_k,
)
from .synth import generate_synthetic

__version__ = "0.1.0"
