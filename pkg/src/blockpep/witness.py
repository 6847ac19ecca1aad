"""Worst-case instances: reconstruction, validation, and simulation.

A solved Gram block factors into concrete coordinates for every atom, and
those coordinates plus the solved f-values form a data set that some
smooth convex function interpolates.  Validating that data set (pairwise
inequalities, initial condition, forward replay of the update rules, and
the achieved criterion) certifies the solved value as attained, i.e. as a
lower bound too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .algos import AmStep, CacdStep, CcdStep, Trajectory, theta_schedule
from .expr import KIND_FREE, KIND_GRADIENT, KIND_INITIAL, Atom, BlockVec, atom_key, evaluate
from .interp import ClassParams, InterpReport, NumericPoint, check_interpolable
from .pep import OPTIMUM_PID, PepProblem
from .solve import SdpSolution


@dataclass
class Witness:
    coords: dict[Atom, np.ndarray]
    ranks: dict[int, int]
    x: dict[int | str, dict[int, np.ndarray]]
    g: dict[int | str, dict[int, np.ndarray]]
    f: dict[int | str, float]
    criterion_value: float


def _eval_vec(
    v: BlockVec, coords: Mapping[Atom, np.ndarray], ranks: Mapping[int, int]
) -> dict[int, np.ndarray]:
    out = {b: np.zeros(ranks[b]) for b in range(1, v.p + 1)}
    for a, c in v.coeffs.items():
        out[a.block] = out[a.block] + c * coords[a]
    return out


def reconstruct(
    sol: SdpSolution, problem: PepProblem, rank_tol: float = 1e-7
) -> Witness:
    """Factor each Gram block; eigenvalues below rank_tol (relative to the
    largest) are treated as numerical zeros and truncated."""
    if sol.status not in ("optimal", "near-optimal"):
        raise ValueError(f"cannot reconstruct from status {sol.status!r}")
    coords: dict[Atom, np.ndarray] = {}
    ranks: dict[int, int] = {}
    for b in range(1, problem.p + 1):
        atoms = problem.block_atoms[b]
        G = np.asarray(sol.grams[b - 1], dtype=float)
        G = 0.5 * (G + G.T)
        eigs, vecs = np.linalg.eigh(G)
        lmax = float(eigs.max()) if eigs.size else 0.0
        floor = rank_tol * max(lmax, 1.0)
        if eigs.size and float(eigs.min()) < -floor:
            raise ValueError(
                f"Gram block {b} indefinite: eigenvalue {eigs.min():.3e}"
            )
        keep = eigs > rank_tol * max(lmax, 0.0)
        C = vecs[:, keep] * np.sqrt(np.maximum(eigs[keep], 0.0))
        ranks[b] = int(keep.sum())
        for i, a in enumerate(atoms):
            coords[a] = C[i, :].copy()

    fmap = {pid: float(v) for pid, v in zip(problem.fpids, sol.fvals)}
    xs: dict[int | str, dict[int, np.ndarray]] = {}
    gs: dict[int | str, dict[int, np.ndarray]] = {}
    fs: dict[int | str, float] = {}
    for pt in problem.points:
        xs[pt.pid] = _eval_vec(pt.x, coords, ranks)
        gs[pt.pid] = _eval_vec(pt.g, coords, ranks)
        fs[pt.pid] = evaluate(pt.f, coords, fmap)
    crit = evaluate(problem.objective, coords, fmap)
    return Witness(coords, ranks, xs, gs, fs, crit)


# ---------------------------------------------------------------------------
# validation


@dataclass
class WitnessReport:
    passed: bool
    interp: InterpReport
    ball_residual: float
    replay_residual: float
    criterion_value: float
    primal: float | None
    failures: list[str] = field(default_factory=list)


def _replay(problem: PepProblem, w: Witness) -> float:
    """Run the update rules forward on witness data; return the largest
    coordinate deviation from the stored evaluated points."""
    mat = problem.materialized
    rule = problem.trajectory.rule
    p = mat.p
    x0 = _eval_vec(mat.x0, w.coords, w.ranks)
    worst = 0.0

    def diff(a: Mapping[int, np.ndarray], pid: int | str) -> float:
        stored = w.x[pid]
        return max(
            float(np.linalg.norm(a[b] - stored[b])) for b in range(1, p + 1)
        )

    for branch in mat.branches:
        N = len(branch.sequence)
        if isinstance(rule, CcdStep):
            alpha = mat.alpha
            assert alpha is not None
            x = {b: x0[b].copy() for b in x0}
            for depth, pid in enumerate(branch.point_pids):
                worst = max(worst, diff(x, pid))
                if depth < N:
                    i = branch.sequence[depth]
                    x[i] = x[i] - alpha * w.g[pid][i]
        elif isinstance(rule, CacdStep):
            th = theta_schedule(p, N)
            x = {b: x0[b].copy() for b in x0}
            z = {b: x0[b].copy() for b in x0}
            for n in range(1, N + 1):
                i = branch.sequence[n - 1]
                t = th[n - 1]
                y = {b: (1.0 - t) * x[b] + t * z[b] for b in x}
                pid = branch.point_pids[n - 1]
                worst = max(worst, diff(y, pid))
                denom = t if problem.trajectory.theta_index == "prev" else th[n]
                z_new = dict(z)
                z_new[i] = z[i] - w.g[pid][i] / (p * denom * rule.L)
                x = {b: y[b] + p * t * (z_new[b] - z[b]) for b in y}
                z = z_new
            worst = max(worst, diff(x, branch.final_pid))
        elif isinstance(rule, AmStep):
            x = {b: x0[b].copy() for b in x0}
            for n, pid in enumerate(branch.point_pids, start=1):
                i = branch.sequence[n - 1]
                d = w.coords[Atom(KIND_FREE, i, n)]
                x[i] = x[i] + d
                worst = max(worst, diff(x, pid))
                # exact minimization: the active partial gradient vanishes
                worst = max(worst, float(np.linalg.norm(w.g[pid][i])))
        else:  # pragma: no cover
            raise TypeError(f"unknown step rule {rule!r}")
    return worst


def validate_lower_bound(
    w: Witness,
    problem: PepProblem,
    tol: float = 1e-6,
    primal: float | None = None,
) -> WitnessReport:
    """Certify the witness: interpolable data, feasible start, faithful
    replay, and a criterion value meeting the solved one."""
    failures: list[str] = []

    data = [
        NumericPoint(pt.pid, w.x[pt.pid], w.g[pt.pid], w.f[pt.pid])
        for pt in problem.points
    ]
    report = check_interpolable(data, problem.params, tol)
    if not report.feasible:
        failures.append(
            f"interpolation residual {report.worst_residual:.3e} "
            f"at pair {report.violating_pair}"
        )

    fmap = {pid: w.f[pid] for pid in problem.fpids}
    ball_resid = -math.inf
    for c in problem.constraints:
        if c.name.startswith("ball:"):
            ball_resid = max(ball_resid, evaluate(c.expr, w.coords, fmap))
    if ball_resid > tol:
        failures.append(f"initial-condition residual {ball_resid:.3e}")

    replay_resid = _replay(problem, w)
    if replay_resid > tol:
        failures.append(f"replay residual {replay_resid:.3e}")

    if primal is not None and w.criterion_value < primal - tol:
        failures.append(
            f"criterion {w.criterion_value:.9e} below primal {primal:.9e}"
        )

    return WitnessReport(
        passed=not failures,
        interp=report,
        ball_residual=ball_resid,
        replay_residual=replay_resid,
        criterion_value=w.criterion_value,
        primal=primal,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# CSV export


def witness_csv(w: Witness) -> str:
    """Two sections: atom coordinates, then point f-values.  Coordinates are
    padded to the largest block rank; 17 significant digits."""
    rmax = max(w.ranks.values(), default=0)
    header = "block,atom-kind,point-id," + ",".join(
        f"coord-{k}" for k in range(rmax)
    )
    lines = [header.rstrip(",")]
    for a in sorted(w.coords, key=atom_key):
        vals = [f"{v:.17g}" for v in w.coords[a]]
        vals += [""] * (rmax - len(vals))
        ref = "" if a.kind == KIND_INITIAL else str(a.ref)
        lines.append(",".join([str(a.block), a.kind, ref] + vals))
    lines.append("")
    lines.append("point-id,f-value")
    for pid, fv in w.f.items():
        lines.append(f"{pid},{fv:.17g}")
    return "\n".join(lines) + "\n"


def write_witness_csv(w: Witness, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(witness_csv(w))


# ---------------------------------------------------------------------------
# concrete functions and simulation


def _block_slices(block_sizes: Sequence[int]) -> list[slice]:
    out = []
    off = 0
    for s in block_sizes:
        out.append(slice(off, off + s))
        off += s
    return out


@dataclass
class QuadraticFunction:
    """f(x) = x'Hx/2 + b'x with a declared block partition.

    Quadratics admit exact block minimization, which keeps alternating
    minimization runs free of line-search error.
    """

    H: np.ndarray
    block_sizes: tuple[int, ...]
    b: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.H = np.asarray(self.H, dtype=float)
        n = self.H.shape[0]
        if self.H.shape != (n, n) or not np.allclose(self.H, self.H.T):
            raise ValueError("H must be square symmetric")
        if sum(self.block_sizes) != n:
            raise ValueError("block sizes must partition the dimension")
        self.b = np.zeros(n) if self.b is None else np.asarray(self.b, dtype=float)
        eigs = np.linalg.eigvalsh(self.H)
        if eigs.min() < -1e-12:
            raise ValueError("H must be positive semidefinite (convexity)")

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def L(self) -> float:
        return float(np.linalg.eigvalsh(self.H).max())

    @property
    def Li(self) -> tuple[float, ...]:
        out = []
        for s in _block_slices(self.block_sizes):
            out.append(float(np.linalg.eigvalsh(self.H[s, s]).max()))
        return tuple(out)

    def oracle(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        g = self.H @ x + self.b
        return float(0.5 * x @ self.H @ x + self.b @ x), g

    def minimizer(self) -> np.ndarray:
        sol, *_ = np.linalg.lstsq(self.H, -self.b, rcond=None)
        return sol

    @property
    def f_star(self) -> float:
        return self.oracle(self.minimizer())[0]

    def argmin_block(self, x: np.ndarray, i: int) -> np.ndarray:
        """Exact minimization over block i with the rest held fixed."""
        s = _block_slices(self.block_sizes)[i - 1]
        n = self.dim
        rest = np.ones(n, dtype=bool)
        rest[s] = False
        rhs = -(self.b[s] + self.H[s.start : s.stop, :][:, rest] @ x[rest])
        sol, *_ = np.linalg.lstsq(self.H[s, s], rhs, rcond=None)
        out = x.copy()
        out[s] = sol
        return out


@dataclass
class OracleFunction:
    """Black-box oracle with declared constants; block search is limited to
    one-dimensional blocks."""

    oracle_fn: Callable[[np.ndarray], tuple[float, np.ndarray]]
    block_sizes: tuple[int, ...]
    L: float
    Li: tuple[float, ...] | None = None
    f_star: float | None = None

    @property
    def dim(self) -> int:
        return sum(self.block_sizes)

    def oracle(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        v, g = self.oracle_fn(np.asarray(x, dtype=float))
        return float(v), np.asarray(g, dtype=float)

    def argmin_block(self, x: np.ndarray, i: int) -> np.ndarray:
        from scipy.optimize import minimize_scalar

        s = _block_slices(self.block_sizes)[i - 1]
        if s.stop - s.start != 1:
            raise ValueError("scalar search handles only 1-dimensional blocks")
        j = s.start

        def phi(t: float) -> float:
            y = x.copy()
            y[j] = t
            return self.oracle(y)[0]

        res = minimize_scalar(phi, bracket=(x[j] - 1.0, x[j] + 1.0), options={"xtol": 1e-12})
        out = x.copy()
        out[j] = res.x
        return out


def f_eps(eps: float) -> QuadraticFunction:
    """Two-block family (x - y)^2 + eps (x^2 + y^2); smoothness 4 + 2 eps."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    H = np.array([[2.0 + 2.0 * eps, -2.0], [-2.0, 2.0 + 2.0 * eps]])
    return QuadraticFunction(H, (1, 1))


@dataclass
class SimTrace:
    xs: list[np.ndarray]
    f_gaps: list[float]
    grad_sqs: list[float]
    dists: list[float]


def simulate(
    func: QuadraticFunction | OracleFunction,
    trajectory: Trajectory,
    x0: np.ndarray,
    alpha: float | None = None,
    f_star: float | None = None,
) -> SimTrace:
    """Run a chain trajectory's update rules numerically and record the
    criterion values along the way."""
    if trajectory.ensemble:
        raise ValueError("simulation runs one coordinate sequence at a time")
    if len(func.block_sizes) != trajectory.p:
        raise ValueError("function block partition does not match the trajectory")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (func.dim,):
        raise ValueError(f"x0 must have dimension {func.dim}")

    if f_star is None:
        f_star = getattr(func, "f_star", None)
    if f_star is None:
        raise ValueError("f_star is unknown; pass it explicitly")
    if isinstance(func, QuadraticFunction):
        x_star = func.minimizer()
    else:
        x_star = None

    rule = trajectory.rule
    seq = trajectory.sequence or ()
    slices = _block_slices(func.block_sizes)

    if isinstance(rule, CcdStep) and alpha is None:
        alpha = rule.h / func.L

    trace = SimTrace([], [], [], [])

    def record(pt: np.ndarray) -> None:
        v, g = func.oracle(pt)
        if not (math.isfinite(v) and np.all(np.isfinite(g))):
            raise ValueError("oracle returned a non-finite value")
        trace.xs.append(pt.copy())
        trace.f_gaps.append(v - f_star)
        trace.grad_sqs.append(float(g @ g))
        trace.dists.append(
            float(np.linalg.norm(pt - x_star)) if x_star is not None else math.nan
        )

    record(x)
    if isinstance(rule, CacdStep):
        th = theta_schedule(trajectory.p, len(seq))
        z = x.copy()
        for n, i in enumerate(seq, start=1):
            t = th[n - 1]
            y = (1.0 - t) * x + t * z
            _, gy = func.oracle(y)
            denom = t if trajectory.theta_index == "prev" else th[n]
            z_new = z.copy()
            s = slices[i - 1]
            z_new[s] = z[s] - gy[s] / (trajectory.p * denom * rule.L)
            x = y + trajectory.p * t * (z_new - z)
            z = z_new
            record(x)
    else:
        for n, i in enumerate(seq, start=1):
            if isinstance(rule, CcdStep):
                _, g = func.oracle(x)
                s = slices[i - 1]
                x = x.copy()
                x[s] = x[s] - alpha * g[s]
            else:
                x = func.argmin_block(x, i)
            record(x)
    return trace
