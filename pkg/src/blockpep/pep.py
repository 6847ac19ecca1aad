"""Worst-case estimation problems and their multi-block SDP form.

assemble() turns a trajectory plus (function class, performance criterion,
initial condition) into an explicit maximization over interpolation
constraints; compile() lifts it to per-block Gram data.  The optimum is
normalized to the origin with value zero and gradient structurally zero,
so initial-condition balls become plain squared norms and no f-variable is
needed for the optimal value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .algos import Materialized, Trajectory
from .expr import Atom, QuadExpr, atom_key, fval, qconst, sqnorm, zero_vec
from .interp import ClassParams, EvaluatedPoint, interpolation_constraints, interpolation_pairs

OBJ_GAP = "obj-gap"
GRAD_SQ = "grad-sq"
ENSEMBLE_AVG = "ensemble-avg"

CRITERIA = (OBJ_GAP, GRAD_SQ, ENSEMBLE_AVG)


@dataclass(frozen=True)
class InitialCondition:
    """Ball constraints tying iterates to the (normalized) optimum.

    kind "init" bounds only the start; "all" additionally bounds every
    cycle endpoint.  include_x0 controls whether the "all" family keeps
    the ball on the start itself.
    """

    kind: str
    radius: float
    include_x0: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("init", "all"):
            raise ValueError("initial-condition kind must be 'init' or 'all'")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")


def init_condition(R: float) -> InitialCondition:
    return InitialCondition("init", float(R))


def all_condition(R: float, include_x0: bool = True) -> InitialCondition:
    return InitialCondition("all", float(R), include_x0)


@dataclass(frozen=True)
class NamedConstraint:
    name: str
    expr: QuadExpr
    sense: str = "<="


@dataclass(frozen=True, eq=False)
class PepProblem:
    p: int
    block_atoms: Mapping[int, tuple[Atom, ...]]
    fpids: tuple[int, ...]
    constraints: tuple[NamedConstraint, ...]
    objective: QuadExpr
    points: tuple[EvaluatedPoint, ...]
    trajectory: Trajectory
    materialized: Materialized
    params: ClassParams
    criterion: str
    condition: InitialCondition


OPTIMUM_PID = "star"


def _optimum_point(p: int) -> EvaluatedPoint:
    return EvaluatedPoint(OPTIMUM_PID, zero_vec(p), zero_vec(p), qconst(0.0))


def assemble(
    trajectory: Trajectory,
    params: ClassParams,
    criterion: str,
    condition: InitialCondition,
    alpha: float | None = None,
) -> PepProblem:
    """Build the finite maximization: interpolation + balls, one objective."""
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    mat = trajectory.materialize(class_L=params.L, alpha=alpha)
    p = mat.p

    points = mat.points + (_optimum_point(p),)
    exprs = interpolation_constraints(points, params)
    names = [
        f"interp:{n.pid}->{l.pid}" for n, l in interpolation_pairs(points)
    ]
    constraints = [
        NamedConstraint(nm, ex) for nm, ex in zip(names, exprs)
    ]

    R2 = condition.radius**2
    if condition.kind == "init":
        balls = [(0, mat.x0)]
    else:
        # endpoints[0] is always the start
        balls = list(enumerate(mat.endpoints))
        if not condition.include_x0:
            balls = balls[1:]
    for k, v in balls:
        constraints.append(
            NamedConstraint(f"ball:{k}", sqnorm(v) + qconst(-R2))
        )

    if criterion == OBJ_GAP:
        if mat.final_pid is None:
            raise ValueError("objective-gap criterion needs a single final iterate")
        objective = fval(mat.final_pid)
    elif criterion == GRAD_SQ:
        if mat.final_pid is None:
            raise ValueError("gradient-norm criterion needs a single final iterate")
        final = next(pt for pt in mat.points if pt.pid == mat.final_pid)
        if final.g.is_zero():
            raise ValueError("no gradient atom at the final iterate")
        objective = sqnorm(final.g)
    else:
        if not mat.ensemble:
            raise ValueError("ensemble-average criterion needs an ensemble trajectory")
        w = 1.0 / len(mat.branches)
        objective = QuadExpr()
        for b in mat.branches:
            objective = objective + fval(b.final_pid, w)

    block_atoms = _collect_atoms(p, points, [c.expr for c in constraints], objective)
    fpids = tuple(pt.pid for pt in mat.points)  # construction order = pid order

    return PepProblem(
        p=p,
        block_atoms=block_atoms,
        fpids=fpids,
        constraints=tuple(constraints),
        objective=objective,
        points=points,
        trajectory=trajectory,
        materialized=mat,
        params=params,
        criterion=criterion,
        condition=condition,
    )


def _collect_atoms(
    p: int,
    points: Sequence[EvaluatedPoint],
    exprs: Sequence[QuadExpr],
    objective: QuadExpr,
) -> dict[int, tuple[Atom, ...]]:
    atoms: set[Atom] = set()
    for pt in points:
        atoms.update(pt.x.coeffs)
        atoms.update(pt.g.coeffs)
    for ex in list(exprs) + [objective]:
        for a, b in ex.quad:
            atoms.add(a)
            atoms.add(b)
    out: dict[int, list[Atom]] = {b: [] for b in range(1, p + 1)}
    for a in atoms:
        out[a.block].append(a)
    return {b: tuple(sorted(lst, key=atom_key)) for b, lst in out.items()}


# ---------------------------------------------------------------------------
# SDP compilation


@dataclass(frozen=True, eq=False)
class SdpTerm:
    """Trace-linear data: per-block symmetric matrices, f-vector, constant."""

    mats: tuple[np.ndarray, ...]
    fvec: np.ndarray
    const: float


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """maximize objective subject to each constraint term <= 0 (or == 0),

    over one PSD Gram matrix per block plus free f-variables."""

    block_dims: tuple[int, ...]
    atom_index: Mapping[int, Mapping[Atom, int]]
    fpids: tuple[int, ...]
    objective: SdpTerm
    constraints: tuple[tuple[str, SdpTerm, str], ...]

    @property
    def p(self) -> int:
        return len(self.block_dims)


def _term(
    expr: QuadExpr,
    atom_index: Mapping[int, Mapping[Atom, int]],
    fidx: Mapping[int, int],
    dims: Sequence[int],
) -> SdpTerm:
    mats = [np.zeros((d, d)) for d in dims]
    for (a, b), q in sorted(
        expr.quad.items(), key=lambda kv: (atom_key(kv[0][0]), atom_key(kv[0][1]))
    ):
        blk = a.block
        idx = atom_index[blk]
        i, j = idx[a], idx[b]
        if i == j:
            mats[blk - 1][i, i] += q
        else:
            mats[blk - 1][i, j] += q / 2.0
            mats[blk - 1][j, i] += q / 2.0
    fvec = np.zeros(len(fidx))
    for pid, c in sorted(expr.fvals.items()):
        fvec[fidx[pid]] += c
    return SdpTerm(tuple(mats), fvec, float(expr.const))


def compile(problem: PepProblem) -> SdpProblem:  # noqa: A001 - domain verb
    """Deterministic Gram-block data; identical inputs give identical bytes."""
    atom_index = {
        b: {a: i for i, a in enumerate(atoms)}
        for b, atoms in sorted(problem.block_atoms.items())
    }
    dims = tuple(len(problem.block_atoms[b]) for b in range(1, problem.p + 1))
    fidx = {pid: i for i, pid in enumerate(problem.fpids)}

    objective = _term(problem.objective, atom_index, fidx, dims)
    constraints = tuple(
        (c.name, _term(c.expr, atom_index, fidx, dims), c.sense)
        for c in problem.constraints
    )
    return SdpProblem(
        block_dims=dims,
        atom_index=atom_index,
        fpids=problem.fpids,
        objective=objective,
        constraints=constraints,
    )


# ---------------------------------------------------------------------------
# solving and the two-class sandwich


@dataclass
class WorstCaseResult:
    value: float
    solution: "SdpSolution"  # noqa: F821 - forward ref into .solve
    sdp: SdpProblem
    problem: PepProblem


def solve_worst_case(
    problem: PepProblem,
    options: "SolveOptions | None" = None,  # noqa: F821
) -> WorstCaseResult:
    from .solve import solve as run_solve

    sdp = compile(problem)
    sol = run_solve(sdp, options)
    return WorstCaseResult(sol.value, sol, sdp, problem)


@dataclass
class SandwichResult:
    lower: float
    upper: float
    lower_result: WorstCaseResult
    upper_result: WorstCaseResult


def coordinate_sandwich(
    Lvec: Sequence[float],
    trajectory: Trajectory,
    criterion: str,
    condition: InitialCondition,
    alpha: float | None = None,
    options: "SolveOptions | None" = None,  # noqa: F821
) -> SandwichResult:
    """Bracket the coordinate-wise-smooth worst case between two classes.

    Solves the same problem over the class with constant min(Lvec) and the
    class with constant sum(Lvec).  Step sizes must already be numeric: a
    gradient-step trajectory needs an explicit alpha so that changing the
    class constant does not silently change the algorithm.
    """
    Ls = [float(v) for v in Lvec]
    if len(Ls) != trajectory.p:
        raise ValueError("Lvec length must equal the block count")
    if any(not (v > 0) for v in Ls):
        raise ValueError("Lvec entries must be positive")
    from .algos import CcdStep

    if isinstance(trajectory.rule, CcdStep) and alpha is None:
        raise ValueError(
            "sandwich requires a fixed numeric step: pass alpha explicitly"
        )
    lo_params = ClassParams(min(Ls))
    hi_params = ClassParams(sum(Ls))
    lo = solve_worst_case(
        assemble(trajectory, lo_params, criterion, condition, alpha=alpha), options
    )
    hi = solve_worst_case(
        assemble(trajectory, hi_params, criterion, condition, alpha=alpha), options
    )
    return SandwichResult(lo.value, hi.value, lo, hi)
