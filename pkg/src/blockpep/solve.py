"""SDP backends, solutions, and independent dual-certificate checks.

The problems here are dense and desk-scale (Gram dimensions well under
two hundred), so we hand them to an established conic solver through
cvxpy rather than ship a bespoke interior-point method.  Verification is
solver-independent: given the multipliers alone we rebuild the dual slack
blocks and the dual objective and check them against the primal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .pep import SdpProblem, SdpTerm

BACKENDS = ("clarabel", "scs", "cvxopt")


@dataclass
class SolveOptions:
    tolerance: float = 1e-8
    max_iterations: int | None = None
    backend: str = "clarabel"
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if not (self.tolerance > 0):
            raise ValueError("tolerance must be positive")


@dataclass
class SdpSolution:
    grams: tuple[np.ndarray, ...]
    fvals: np.ndarray
    value: float
    duals: np.ndarray | None
    status: str
    gap: float | None = None


_STATUS_MAP = {
    "optimal": "optimal",
    "optimal_inaccurate": "near-optimal",
    "infeasible": "infeasible",
    "infeasible_inaccurate": "infeasible",
    "unbounded": "unbounded",
    "unbounded_inaccurate": "unbounded",
}


def _backend_kwargs(options: SolveOptions) -> tuple[str, dict]:
    tol = options.tolerance
    if options.backend == "clarabel":
        kw = {"tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol}
        if options.max_iterations is not None:
            kw["max_iter"] = options.max_iterations
        return "CLARABEL", kw
    if options.backend == "scs":
        kw = {"eps": tol}
        if options.max_iterations is not None:
            kw["max_iters"] = options.max_iterations
        return "SCS", kw
    kw = {"abstol": tol, "reltol": tol, "feastol": tol}
    if options.max_iterations is not None:
        kw["max_iters"] = options.max_iterations
    return "CVXOPT", kw


def _term_expr(term: SdpTerm, grams, fvar, cp):
    pieces = []
    for A, G in zip(term.mats, grams):
        if np.any(A):
            pieces.append(cp.sum(cp.multiply(cp.Constant(A), G)))
    if np.any(term.fvec):
        pieces.append(term.fvec @ fvar)
    expr = cp.Constant(term.const)
    for piece in pieces:
        expr = expr + piece
    return expr


def solve(sdp: SdpProblem, options: SolveOptions | None = None) -> SdpSolution:
    """Maximize the objective over PSD Gram blocks and free f-variables."""
    import cvxpy as cp

    options = options or SolveOptions()
    grams = [cp.Variable((d, d), PSD=True) for d in sdp.block_dims]
    fvar = cp.Variable(len(sdp.fpids)) if sdp.fpids else cp.Variable(1)

    cons = []
    for _name, term, sense in sdp.constraints:
        expr = _term_expr(term, grams, fvar, cp)
        cons.append(expr == 0 if sense == "=" else expr <= 0)
    objective = cp.Maximize(_term_expr(sdp.objective, grams, fvar, cp))
    prob = cp.Problem(objective, cons)

    solver, kwargs = _backend_kwargs(options)
    try:
        # accuracy is reported through the status field; cvxpy's warning
        # about inaccurate solutions would only duplicate it on stderr
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver=getattr(cp, solver), verbose=options.verbose, **kwargs)
    except cp.error.SolverError:
        return SdpSolution(
            tuple(np.zeros((d, d)) for d in sdp.block_dims),
            np.zeros(len(sdp.fpids)),
            math.nan,
            None,
            "failed",
        )

    status = _STATUS_MAP.get(prob.status, "failed")
    gmats = tuple(
        np.asarray(G.value) if G.value is not None else np.zeros((d, d))
        for G, d in zip(grams, sdp.block_dims)
    )
    fv = (
        np.asarray(fvar.value).reshape(-1)[: len(sdp.fpids)]
        if fvar.value is not None
        else np.zeros(len(sdp.fpids))
    )
    value = float(prob.value) if prob.value is not None else math.nan

    duals = None
    if status in ("optimal", "near-optimal"):
        dv = [c.dual_value for c in cons]
        if all(v is not None for v in dv):
            duals = np.array([float(np.asarray(v).reshape(())) for v in dv])

    gap = None
    if duals is not None:
        consts = np.array([term.const for _n, term, _s in sdp.constraints])
        dual_value = sdp.objective.const - float(duals @ consts)
        gap = abs(value - dual_value)
    return SdpSolution(gmats, fv, value, duals, status, gap)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class CertificateReport:
    """Independent reconstruction of the dual proof from multipliers alone."""

    passed: bool
    slack_min_eig: tuple[float, ...]
    min_multiplier: float
    stationarity_residual: float
    primal_value: float
    dual_value: float
    objective_match: float
    failures: list[str] = field(default_factory=list)


def verify_certificate(
    sdp: SdpProblem, sol: SdpSolution, tol: float = 1e-6
) -> CertificateReport:
    """Check the weighted-sum proof: slack PSD, signs, stationarity, value.

    For the maximization max <C, X> + c_f f + c_0 subject to
    <A_j, X> + phi_j f + b_j <= 0 and X PSD per block, multipliers lambda
    certify the bound c_0 - sum_j lambda_j b_j provided lambda >= 0,
    sum_j lambda_j phi_j = c_f, and S_i = sum_j lambda_j A_{j,i} - C_i is
    PSD in every block.
    """
    if sol.duals is None:
        raise ValueError("solution carries no dual multipliers")
    lam = np.asarray(sol.duals, dtype=float)
    failures: list[str] = []

    ineq = np.array([s != "=" for _n, _t, s in sdp.constraints])
    min_mult = float(lam[ineq].min()) if ineq.any() else 0.0
    if min_mult < -tol:
        failures.append(f"multiplier sign violation: min lambda = {min_mult:.3e}")

    phis = np.stack([term.fvec for _n, term, _s in sdp.constraints])
    resid = lam @ phis - sdp.objective.fvec
    stat = float(np.max(np.abs(resid))) if resid.size else 0.0
    if stat > tol:
        failures.append(f"f-coefficient stationarity residual {stat:.3e}")

    slack_eigs = []
    for b in range(sdp.p):
        S = -sdp.objective.mats[b].copy()
        for j, (_n, term, _s) in enumerate(sdp.constraints):
            if lam[j] != 0.0:
                S += lam[j] * term.mats[b]
        mineig = float(np.linalg.eigvalsh(0.5 * (S + S.T)).min()) if S.size else 0.0
        slack_eigs.append(mineig)
        if mineig < -tol:
            failures.append(f"block {b + 1} dual slack eigenvalue {mineig:.3e}")

    consts = np.array([term.const for _n, term, _s in sdp.constraints])
    dual_value = float(sdp.objective.const - lam @ consts)
    match = abs(dual_value - sol.value)
    if match > tol * (1.0 + abs(sol.value)):
        failures.append(
            f"objective mismatch: primal {sol.value:.9e} vs dual {dual_value:.9e}"
        )

    return CertificateReport(
        passed=not failures,
        slack_min_eig=tuple(slack_eigs),
        min_multiplier=min_mult,
        stationarity_residual=stat,
        primal_value=sol.value,
        dual_value=dual_value,
        objective_match=match,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# debug dump


def dump_sdp(sdp: SdpProblem) -> str:
    """Sparse text form.  Header `blocks d_1 ... d_p m`, then one line per
    nonzero `j b row col value` with j = 0 the objective and j = 1..m the
    constraints; block 0 carries the affine part (f-coefficient k as row k
    col 0, the scalar constant as row 0 col 1).  17 significant digits.
    """
    lines = [
        "blocks "
        + " ".join(str(d) for d in sdp.block_dims)
        + f" {len(sdp.constraints)}"
    ]

    def emit(j: int, term: SdpTerm) -> None:
        for b, A in enumerate(term.mats, start=1):
            d = A.shape[0]
            for r in range(d):
                for c in range(r, d):
                    if A[r, c] != 0.0:
                        lines.append(f"{j} {b} {r} {c} {A[r, c]:.17g}")
        for k, v in enumerate(term.fvec):
            if v != 0.0:
                lines.append(f"{j} 0 {k} 0 {v:.17g}")
        if term.const != 0.0:
            lines.append(f"{j} 0 0 1 {term.const:.17g}")

    emit(0, sdp.objective)
    for j, (_name, term, _sense) in enumerate(sdp.constraints, start=1):
        emit(j, term)
    return "\n".join(lines) + "\n"


def write_sdp_dump(sdp: SdpProblem, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dump_sdp(sdp))
