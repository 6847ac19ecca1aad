"""Exact numerical worst-case bounds for block-coordinate first-order methods
on smooth convex functions, via semidefinite programming over one Gram matrix
per coordinate block, with dual certificates and reconstructed worst-case
instances."""

from .algos import (
    AmStep,
    CacdStep,
    CcdStep,
    Schedule,
    StepRule,
    Trajectory,
    build_am,
    build_cacd,
    build_ccd,
    build_custom,
    build_ensemble,
    theta_schedule,
)
from .bounds import (
    SandwichReport,
    beck_ccd_bound,
    sandwich_report,
    smoothness_zero_step_bound,
)
from .expr import (
    Atom,
    BlockVec,
    QuadExpr,
    evaluate,
    free_direction,
    fval,
    gradient_vec,
    initial_point,
    inner,
    lincomb,
    qconst,
    sqnorm,
    zero_vec,
)
from .interp import (
    ClassParams,
    EvaluatedPoint,
    InterpReport,
    NumericPoint,
    check_interpolable,
    interpolation_constraints,
    interpolation_pairs,
)
from .pep import (
    ENSEMBLE_AVG,
    GRAD_SQ,
    OBJ_GAP,
    OPTIMUM_PID,
    InitialCondition,
    NamedConstraint,
    PepProblem,
    SandwichResult,
    SdpProblem,
    WorstCaseResult,
    all_condition,
    assemble,
    compile,
    coordinate_sandwich,
    init_condition,
    solve_worst_case,
)
from .solve import (
    BACKENDS,
    CertificateReport,
    SdpSolution,
    SolveOptions,
    dump_sdp,
    solve,
    verify_certificate,
    write_sdp_dump,
)
from .witness import (
    OracleFunction,
    QuadraticFunction,
    SimTrace,
    Witness,
    WitnessReport,
    f_eps,
    reconstruct,
    simulate,
    validate_lower_bound,
    witness_csv,
    write_witness_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AmStep",
    "Atom",
    "BACKENDS",
    "BlockVec",
    "CacdStep",
    "CcdStep",
    "CertificateReport",
    "ClassParams",
    "ENSEMBLE_AVG",
    "EvaluatedPoint",
    "GRAD_SQ",
    "InitialCondition",
    "InterpReport",
    "NamedConstraint",
    "NumericPoint",
    "OBJ_GAP",
    "OPTIMUM_PID",
    "OracleFunction",
    "PepProblem",
    "QuadExpr",
    "QuadraticFunction",
    "SandwichReport",
    "SandwichResult",
    "Schedule",
    "SdpProblem",
    "SdpSolution",
    "SimTrace",
    "SolveOptions",
    "StepRule",
    "Trajectory",
    "Witness",
    "WitnessReport",
    "WorstCaseResult",
    "all_condition",
    "assemble",
    "beck_ccd_bound",
    "build_am",
    "build_cacd",
    "build_ccd",
    "build_custom",
    "build_ensemble",
    "check_interpolable",
    "compile",
    "coordinate_sandwich",
    "dump_sdp",
    "evaluate",
    "f_eps",
    "free_direction",
    "fval",
    "gradient_vec",
    "init_condition",
    "initial_point",
    "inner",
    "interpolation_constraints",
    "interpolation_pairs",
    "lincomb",
    "qconst",
    "reconstruct",
    "sandwich_report",
    "simulate",
    "smoothness_zero_step_bound",
    "solve",
    "solve_worst_case",
    "sqnorm",
    "theta_schedule",
    "validate_lower_bound",
    "verify_certificate",
    "witness_csv",
    "write_sdp_dump",
    "write_witness_csv",
    "zero_vec",
]
