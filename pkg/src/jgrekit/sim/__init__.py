"""Attack/defense simulation, PoC synthesis, verification and benchmarks."""

from .bench import REQUEST_GRID, bench_creation, bench_grid, grid_csv
from .engine import Simulator, run, step
from .matrix import default_attacks, default_policies, outcome_matrix, render_matrix
from .model import (
    BUGGY_RESET_VALUE,
    AttackScript,
    BinderProxyLimit,
    Call,
    InvalidAction,
    NoDefense,
    OneBinder,
    PerInterfaceLimit,
    Purger,
    Restart,
    ServiceBased,
    Simple,
    SimConfig,
    SimEvent,
    SimOutcome,
    SimState,
    SimTrace,
    parse_policy,
    policy_label,
    policy_spec,
    script_from_dict,
)
from .poc import ParamRules, UnconstructibleParam, generate_poc
from .verify import Verification, verify

__all__ = [name for name in dir() if not name.startswith("_")]
