"""Symbolic trajectory builders for block-coordinate methods.

A trajectory records which points get evaluated (and therefore carry
gradient atoms and f-value variables), how each iterate is an affine
combination of atoms, and enough structural metadata to replay the update
rules on concrete data.  Step rules:

  - coordinate gradient step with size h/L (L supplied at assembly, since
    the class constant is part of the estimation problem, not the recipe);
  - exact block minimization (a free direction plus a structurally zero
    partial gradient at the new point);
  - the momentum scheme driven by the theta recursion, whose gradients are
    evaluated at auxiliary combination points.

The ensemble builder lays out all p^N coordinate choices over one shared
function and initial point, deduplicating common prefixes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .expr import (
    BlockVec,
    atom_key,
    free_direction,
    fval,
    gradient_vec,
    initial_point,
)
from .interp import EvaluatedPoint


def theta_schedule(p: int, N: int) -> tuple[float, ...]:
    """Momentum coefficients theta_0..theta_N with theta_0 = 1/p.

    Each step solves theta_n^2 = theta_{n-1}^2 (1 - theta_n) for the
    positive root, so the identity holds to machine precision.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if N < 0:
        raise ValueError("N must be nonnegative")
    th = [1.0 / p]
    for _ in range(N):
        t = th[-1]
        t2 = t * t
        th.append((math.sqrt(t2 * t2 + 4.0 * t2) - t2) / 2.0)
    return tuple(th)


# ---------------------------------------------------------------------------
# step rules


@dataclass(frozen=True)
class CcdStep:
    """Coordinate gradient step of size h/L (h fixed, L from the class)."""

    h: float

    def __post_init__(self) -> None:
        if self.h < 0:
            raise ValueError("step coefficient h must be nonnegative")


@dataclass(frozen=True)
class CacdStep:
    """Momentum coordinate step; L here is the algorithm's own input."""

    L: float

    def __post_init__(self) -> None:
        if not (self.L > 0):
            raise ValueError("algorithm smoothness input L must be positive")


@dataclass(frozen=True)
class AmStep:
    """Exact minimization over the active block."""


StepRule = CcdStep | CacdStep | AmStep


@dataclass(frozen=True)
class Schedule:
    p: int
    sequence: tuple[int, ...]
    cyclic: bool
    K: int | None


@dataclass(frozen=True)
class BranchInfo:
    """One coordinate sequence: its evaluated-point pids in step order."""

    sequence: tuple[int, ...]
    point_pids: tuple[int, ...]
    final_pid: int


@dataclass(frozen=True)
class Materialized:
    """Concrete symbolic points for one trajectory at fixed step sizes."""

    p: int
    points: tuple[EvaluatedPoint, ...]
    x0: BlockVec
    endpoints: tuple[BlockVec, ...]
    branches: tuple[BranchInfo, ...]
    final_pid: int | None
    alpha: float | None
    zero_grad: Mapping[int, int]
    ensemble: bool


@dataclass(frozen=True)
class Trajectory:
    """Recipe: block count, coordinate sequence (or ensemble depth), rule."""

    p: int
    kind: str
    rule: StepRule
    sequence: tuple[int, ...] | None
    n_steps: int
    K: int | None
    cyclic: bool
    ensemble: bool = False
    theta_index: str = "prev"
    cap: int = 128

    @property
    def N(self) -> int:
        return self.n_steps

    @property
    def schedule(self) -> Schedule | None:
        if self.ensemble:
            return None
        return Schedule(self.p, self.sequence or (), self.cyclic, self.K)

    def theta(self) -> tuple[float, ...] | None:
        if isinstance(self.rule, CacdStep):
            return theta_schedule(self.p, self.n_steps)
        return None

    def materialize(
        self, class_L: float | None = None, alpha: float | None = None
    ) -> Materialized:
        """Fix numeric step sizes and lay out the evaluated points.

        For the gradient rule, alpha defaults to h / class_L; passing alpha
        explicitly pins the step independently of the class constant, which
        the sandwich machinery requires.
        """
        if isinstance(self.rule, CcdStep):
            if alpha is None:
                if class_L is None:
                    raise ValueError(
                        "gradient-step trajectories need class_L (or an explicit alpha)"
                    )
                alpha = self.rule.h / class_L
        else:
            alpha = None
        if self.ensemble:
            return _materialize_ensemble(
                self.p, self.n_steps, self.rule, self.theta_index, alpha
            )
        assert self.sequence is not None
        return _materialize_chain(
            self.p, self.sequence, self.rule, self.theta_index, alpha
        )


def _cyclic_sequence(p: int, K: int) -> tuple[int, ...]:
    return tuple(itertools.islice(itertools.cycle(range(1, p + 1)), p * K))


def _expr_key(v: BlockVec) -> tuple:
    return tuple(sorted((atom_key(a), c) for a, c in v.coeffs.items()))


def _materialize_chain(
    p: int,
    sequence: tuple[int, ...],
    rule: StepRule,
    theta_index: str,
    alpha: float | None,
) -> Materialized:
    N = len(sequence)
    x0 = initial_point(p)
    zero_grad: dict[int, int] = {}
    points: list[EvaluatedPoint]

    if N == 0:
        points = [EvaluatedPoint(0, x0, gradient_vec(0, p), fval(0))]
        return Materialized(
            p,
            tuple(points),
            x0,
            (x0,),
            (BranchInfo((), (0,), 0),),
            0,
            alpha,
            {},
            False,
        )

    if isinstance(rule, CcdStep):
        assert alpha is not None
        xs = [x0]
        x = x0
        for n, i in enumerate(sequence, start=1):
            x = x - alpha * gradient_vec(n - 1, p).restrict(i)
            xs.append(x)
        points = [
            EvaluatedPoint(n, xs[n], gradient_vec(n, p), fval(n))
            for n in range(N + 1)
        ]
        pids = tuple(range(N + 1))
        endpoints = tuple(xs[n] for n in range(N + 1) if n % p == 0)
    elif isinstance(rule, AmStep):
        xs = [x0]
        x = x0
        for n, i in enumerate(sequence, start=1):
            x = x + free_direction(n, i, p)
            xs.append(x)
            zero_grad[n] = i
        points = [
            EvaluatedPoint(n, xs[n], gradient_vec(n, p, (zero_grad[n],)), fval(n))
            for n in range(1, N + 1)
        ]
        pids = tuple(range(1, N + 1))
        endpoints = tuple(xs[n] for n in range(N + 1) if n % p == 0)
    elif isinstance(rule, CacdStep):
        th = theta_schedule(p, N)
        x = z = x0
        ys: list[BlockVec] = []
        ends = [x0]
        for n in range(1, N + 1):
            i = sequence[n - 1]
            t = th[n - 1]
            y = (1.0 - t) * x + t * z
            ys.append(y)
            g_i = gradient_vec(n - 1, p).restrict(i)
            denom = t if theta_index == "prev" else th[n]
            z_new = z - (1.0 / (p * denom * rule.L)) * g_i
            x = y + (p * t) * (z_new - z)
            z = z_new
            if n % p == 0:
                ends.append(x)
        points = [
            EvaluatedPoint(n, ys[n], gradient_vec(n, p), fval(n)) for n in range(N)
        ]
        points.append(EvaluatedPoint(N, x, gradient_vec(N, p), fval(N)))
        pids = tuple(range(N + 1))
        endpoints = tuple(ends)
    else:  # pragma: no cover
        raise TypeError(f"unknown step rule {rule!r}")

    final = points[-1].pid
    assert isinstance(final, int)
    branch = BranchInfo(tuple(sequence), pids, final)
    return Materialized(
        p,
        tuple(points),
        x0,
        endpoints,
        (branch,),
        final,
        alpha,
        zero_grad,
        False,
    )


def _materialize_ensemble(
    p: int,
    N: int,
    rule: StepRule,
    theta_index: str,
    alpha: float | None,
) -> Materialized:
    if isinstance(rule, AmStep):
        raise ValueError("the ensemble builder supports gradient and momentum rules")
    x0 = initial_point(p)
    points: list[EvaluatedPoint] = []
    branches: list[BranchInfo] = []
    endpoints: list[BlockVec] = []
    seen_endpoints: set[tuple] = set()
    counter = itertools.count()

    def note_endpoint(v: BlockVec) -> None:
        key = _expr_key(v)
        if key not in seen_endpoints:
            seen_endpoints.add(key)
            endpoints.append(v)

    if isinstance(rule, CcdStep):
        assert alpha is not None

        def rec_ccd(x: BlockVec, depth: int, seq: tuple, pids: tuple) -> None:
            pid = next(counter)
            points.append(EvaluatedPoint(pid, x, gradient_vec(pid, p), fval(pid)))
            pids = pids + (pid,)
            if depth % p == 0:
                note_endpoint(x)
            if depth == N:
                branches.append(BranchInfo(seq, pids, pid))
                return
            g = gradient_vec(pid, p)
            for i in range(1, p + 1):
                rec_ccd(x - alpha * g.restrict(i), depth + 1, seq + (i,), pids)

        rec_ccd(x0, 0, (), ())
    else:
        th = theta_schedule(p, N)

        def rec_cacd(
            x: BlockVec, z: BlockVec, depth: int, seq: tuple, pids: tuple
        ) -> None:
            if depth % p == 0:
                note_endpoint(x)
            if depth == N:
                pid = next(counter)
                points.append(
                    EvaluatedPoint(pid, x, gradient_vec(pid, p), fval(pid))
                )
                branches.append(BranchInfo(seq, pids + (pid,), pid))
                return
            t = th[depth]
            y = (1.0 - t) * x + t * z
            pid = next(counter)
            points.append(EvaluatedPoint(pid, y, gradient_vec(pid, p), fval(pid)))
            pids = pids + (pid,)
            denom = t if theta_index == "prev" else th[depth + 1]
            scale = 1.0 / (p * denom * rule.L)
            g = gradient_vec(pid, p)
            for i in range(1, p + 1):
                z_new = z - scale * g.restrict(i)
                x_new = y + (p * t) * (z_new - z)
                rec_cacd(x_new, z_new, depth + 1, seq + (i,), pids)

        rec_cacd(x0, x0, 0, (), ())

    single = branches[0].final_pid if len(branches) == 1 else None
    return Materialized(
        p,
        tuple(points),
        x0,
        tuple(endpoints),
        tuple(branches),
        single,
        alpha,
        {},
        True,
    )


# ---------------------------------------------------------------------------
# public builders


def _check_sizes(p: int, K: int, min_K: int = 0) -> None:
    if p < 1:
        raise ValueError("p must be at least 1")
    if K < min_K:
        raise ValueError(f"K must be at least {min_K}")


def build_ccd(p: int, K: int, h: float) -> Trajectory:
    """Cyclic coordinate descent: N = pK steps of size h/L, blocks 1..p."""
    _check_sizes(p, K)
    return Trajectory(
        p=p,
        kind="ccd",
        rule=CcdStep(float(h)),
        sequence=_cyclic_sequence(p, K),
        n_steps=p * K,
        K=K,
        cyclic=True,
    )


def build_am(p: int, K: int) -> Trajectory:
    """Cyclic alternating minimization; needs at least two blocks."""
    if p < 2:
        raise ValueError("alternating minimization needs p >= 2")
    _check_sizes(p, K, min_K=1)
    return Trajectory(
        p=p,
        kind="am",
        rule=AmStep(),
        sequence=_cyclic_sequence(p, K),
        n_steps=p * K,
        K=K,
        cyclic=True,
    )


def build_cacd(p: int, K: int, L: float, theta_index: str = "prev") -> Trajectory:
    """Cyclic momentum coordinate descent over N = pK steps."""
    _check_sizes(p, K)
    _check_theta_index(theta_index)
    return Trajectory(
        p=p,
        kind="cacd",
        rule=CacdStep(float(L)),
        sequence=_cyclic_sequence(p, K),
        n_steps=p * K,
        K=K,
        cyclic=True,
        theta_index=theta_index,
    )


def build_custom(
    p: int,
    sequence: Sequence[int],
    rule: StepRule,
    theta_index: str = "prev",
) -> Trajectory:
    """Arbitrary coordinate sequence under a gradient or momentum rule."""
    seq = tuple(int(i) for i in sequence)
    if not seq:
        raise ValueError("sequence must be nonempty")
    if p < 1:
        raise ValueError("p must be at least 1")
    for i in seq:
        if not 1 <= i <= p:
            raise ValueError(f"block id {i} out of range [1, {p}]")
    if isinstance(rule, AmStep):
        raise ValueError("custom sequences support gradient and momentum rules")
    _check_theta_index(theta_index)
    N = len(seq)
    cyclic = seq == _cyclic_sequence(p, N // p) and N % p == 0
    return Trajectory(
        p=p,
        kind="custom",
        rule=rule,
        sequence=seq,
        n_steps=N,
        K=N // p if N % p == 0 else None,
        cyclic=cyclic,
        theta_index=theta_index,
    )


def build_ensemble(
    p: int,
    N: int,
    rule: StepRule,
    cap: int = 128,
    theta_index: str = "prev",
) -> Trajectory:
    """All p^N coordinate choices over one shared function and start."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if N < 0:
        raise ValueError("N must be nonnegative")
    _check_theta_index(theta_index)
    if isinstance(rule, AmStep):
        raise ValueError("the ensemble builder supports gradient and momentum rules")
    if p**N * N > cap:
        raise ValueError(
            f"ensemble size p^N*N = {p**N * N} exceeds the cap {cap}"
        )
    return Trajectory(
        p=p,
        kind="ensemble",
        rule=rule,
        sequence=None,
        n_steps=N,
        K=None,
        cyclic=False,
        ensemble=True,
        theta_index=theta_index,
        cap=cap,
    )


def _check_theta_index(theta_index: str) -> None:
    if theta_index not in ("prev", "next"):
        raise ValueError("theta-index must be 'prev' or 'next'")
