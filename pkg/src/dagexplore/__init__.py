"""Online exploration schedulers, offline baselines, and a competitive-ratio
harness for vertex-weighted DAGs whose structure is revealed during execution."""

from .actors import (
    Descriptor,
    RunResult,
    TraceEvent,
    TraceKind,
    Workload,
    check_work_conserving,
    quantized_instance,
    run,
    trace_stats,
    trace_to_work_table,
)
from .core import (
    CycleError,
    DagExploreError,
    DagInstance,
    Family,
    FamilyTag,
    InvalidInstanceError,
    Rule,
    SizeCapError,
    TableMode,
    ValidationReport,
    Violation,
    WorkTable,
    completion_time,
    total_idle,
    validate_instance,
    validate_work_table,
)
from .generators import (
    SyntheticWorkload,
    branching_paths,
    crossed_paths,
    disjoint_paths,
    random_layered_dag,
    subset_lattice_atlas,
    to_workload,
    uniform_sources,
    worst_case_instance,
)
from .offline import (
    PathWork,
    brute_force_offline_opt,
    min_path_work,
    offline_lower_bound,
    offline_schedule,
)
from .simulate import (
    Discipline,
    FrontierPolicy,
    ScriptOrderError,
    SimResult,
    competitive_ratio,
    simulate,
    worst_case_closed_form,
    worst_case_online,
)

__version__ = "0.1.0"
