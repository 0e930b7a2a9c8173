"""Experiments with Collatz-like residue-rule maps."""
from .census import (
    BasinReport,
    LoopRegistry,
    basin_scan,
    find_loops,
    interestingness_report,
    lowest_root_node,
)
from .checkpoint import CheckpointRecord, hunt, read_checkpoint, write_checkpoint
from .family import FamilySpec, family_lengths, find_islands, verify_common_branch
from .nullmodels import (
    DecayProfile,
    persistence_rate,
    predict_length,
    predicted_length_from_factor,
    residue_enrichment,
    stability_boundary,
    window_factor,
)
from .picket import (
    exit_census,
    exit_point,
    first_to_exit,
    is_picket_fence,
    picket_fence_value,
)
from .program import (
    DSLSyntaxError,
    Program,
    ProgramError,
    StepRule,
    canonical_program,
    parse_program_dsl,
    program_from_id,
    step,
    validate_program,
)
from .trajectory import (
    Loop,
    NonConvergenceError,
    StopPolicy,
    Trajectory,
    detect_cycle,
    iterate,
    merge_point,
    sequence_length,
)
from .trees import (
    OrbitForest,
    build_exit_tree,
    build_reverse_tree,
    export_graph,
    predecessors,
)

__version__ = "0.1.0"

__all__ = [
    "BasinReport",
    "CheckpointRecord",
    "DSLSyntaxError",
    "DecayProfile",
    "FamilySpec",
    "Loop",
    "LoopRegistry",
    "NonConvergenceError",
    "OrbitForest",
    "Program",
    "ProgramError",
    "StepRule",
    "StopPolicy",
    "Trajectory",
    "basin_scan",
    "build_exit_tree",
    "build_reverse_tree",
    "canonical_program",
    "detect_cycle",
    "exit_census",
    "exit_point",
    "export_graph",
    "family_lengths",
    "find_islands",
    "find_loops",
    "first_to_exit",
    "hunt",
    "interestingness_report",
    "is_picket_fence",
    "iterate",
    "lowest_root_node",
    "merge_point",
    "parse_program_dsl",
    "persistence_rate",
    "picket_fence_value",
    "predecessors",
    "predict_length",
    "predicted_length_from_factor",
    "program_from_id",
    "read_checkpoint",
    "residue_enrichment",
    "sequence_length",
    "stability_boundary",
    "step",
    "validate_program",
    "verify_common_branch",
    "window_factor",
    "write_checkpoint",
]
