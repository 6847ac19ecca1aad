"""Interpolation conditions for smooth convex functions.

A finite set of (point, gradient, value) triples is consistent with some
convex function whose gradient is L-Lipschitz exactly when, for every
ordered pair (n, l) of triples,

    f_l - f_n + sum_i <g_i_l, x_i_n - x_i_l> + (1/2L) sum_i ||g_i_n - g_i_l||^2 <= 0.

The symbolic form feeds the SDP lift; the numeric form certifies
reconstructed worst-case data.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .expr import BlockVec, QuadExpr, inner, sqnorm


@dataclass(frozen=True)
class ClassParams:
    """Function class: convex with L-Lipschitz gradient."""

    L: float

    def __post_init__(self) -> None:
        if not (self.L > 0):
            raise ValueError("smoothness constant L must be positive")


@dataclass(frozen=True)
class EvaluatedPoint:
    """Symbolic triple: where the function was evaluated, and with what.

    g may be structurally zero in some blocks (exact partial minimization);
    f is affine in function-value variables so the optimum can carry the
    constant 0 after normalization.
    """

    pid: int | str
    x: BlockVec
    g: BlockVec
    f: QuadExpr


def _pair_constraint(n: EvaluatedPoint, l: EvaluatedPoint, L: float) -> QuadExpr:
    gap = l.f - n.f
    cross = inner(l.g, n.x - l.x)
    curv = (1.0 / (2.0 * L)) * sqnorm(n.g - l.g)
    return gap + cross + curv


def interpolation_pairs(
    points: Sequence[EvaluatedPoint],
) -> list[tuple[EvaluatedPoint, EvaluatedPoint]]:
    return list(itertools.permutations(points, 2))


def interpolation_constraints(
    points: Sequence[EvaluatedPoint], params: ClassParams
) -> list[QuadExpr]:
    """One `expr <= 0` constraint per ordered pair; M points give M(M-1)."""
    seen = set()
    for pt in points:
        if pt.pid in seen:
            raise ValueError(f"duplicate point id {pt.pid!r}")
        seen.add(pt.pid)
    return [_pair_constraint(n, l, params.L) for n, l in interpolation_pairs(points)]


# ---------------------------------------------------------------------------
# numeric check


@dataclass(frozen=True)
class NumericPoint:
    """Concrete data: per-block coordinates and gradients plus a value."""

    pid: int | str
    x: Mapping[int, np.ndarray]
    g: Mapping[int, np.ndarray]
    f: float


@dataclass(frozen=True)
class InterpReport:
    feasible: bool
    worst_residual: float
    violating_pair: tuple[int | str, int | str] | None = None


def _block_dims(data: Sequence[NumericPoint]) -> dict[int, int]:
    blocks = sorted(set(data[0].x) | set(data[0].g))
    dims: dict[int, int] = {}
    for pt in data:
        if sorted(set(pt.x) | set(pt.g)) != blocks:
            raise ValueError(f"point {pt.pid!r} covers a different block set")
        for blk in blocks:
            if blk not in pt.x or blk not in pt.g:
                raise ValueError(f"point {pt.pid!r} block {blk}: missing x or g")
            dx = np.atleast_1d(np.asarray(pt.x[blk], dtype=float)).shape[0]
            dg = np.atleast_1d(np.asarray(pt.g[blk], dtype=float)).shape[0]
            if dx != dg:
                raise ValueError(
                    f"point {pt.pid!r} block {blk}: x has dim {dx}, g has dim {dg}"
                )
            if dims.setdefault(blk, dx) != dx:
                raise ValueError(
                    f"block {blk} dimension mismatch: {dims[blk]} vs {dx} "
                    f"(point {pt.pid!r})"
                )
    return dims


def check_interpolable(
    data: Sequence[NumericPoint], params: ClassParams, tol: float = 1e-7
) -> InterpReport:
    """Evaluate every ordered-pair inequality; feasible iff all within tol."""
    seen = set()
    for pt in data:
        if pt.pid in seen:
            raise ValueError(f"duplicate point id {pt.pid!r}")
        seen.add(pt.pid)
    if not data:
        return InterpReport(True, -math.inf)
    blocks = sorted(_block_dims(data))

    worst = -math.inf
    worst_pair: tuple[int | str, int | str] | None = None
    for n, l in itertools.permutations(data, 2):
        resid = l.f - n.f
        for blk in blocks:
            xn = np.atleast_1d(np.asarray(n.x[blk], dtype=float))
            xl = np.atleast_1d(np.asarray(l.x[blk], dtype=float))
            gn = np.atleast_1d(np.asarray(n.g[blk], dtype=float))
            gl = np.atleast_1d(np.asarray(l.g[blk], dtype=float))
            resid += float(np.dot(gl, xn - xl))
            resid += float(np.dot(gn - gl, gn - gl)) / (2.0 * params.L)
        if resid > worst:
            worst = resid
            worst_pair = (n.pid, l.pid)
    feasible = worst <= tol
    return InterpReport(feasible, worst, None if feasible else worst_pair)
