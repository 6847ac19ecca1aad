"""Symbolic linear algebra over per-block basis atoms.

Iterates and gradients of a fixed-step block-coordinate method are affine
combinations of a small set of unknown vectors: the initial point, the
gradients at evaluated points, and (for exact block minimization) free
directions.  This module represents such combinations exactly, per block,
and builds the degree-two scalar expressions (inner products, squared
norms, function-value combinations) that the SDP lift consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

KIND_INITIAL = "initial"
KIND_GRADIENT = "gradient"
KIND_FREE = "free"

_KIND_RANK = {KIND_INITIAL: 0, KIND_GRADIENT: 1, KIND_FREE: 2}


@dataclass(frozen=True)
class Atom:
    """One basis vector: kind, owning block, and a reference id.

    ref is the point id for gradient atoms, the step id for free
    directions, and None for the initial point.
    """

    kind: str
    block: int
    ref: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if self.block < 1:
            raise ValueError("block ids start at 1")
        if (self.ref is None) != (self.kind == KIND_INITIAL):
            raise ValueError("initial atoms take no ref; others require one")


def atom_key(a: Atom) -> tuple[int, int, int]:
    """Total order: block, then initial < gradients < free, then ref."""
    return (a.block, _KIND_RANK[a.kind], -1 if a.ref is None else a.ref)


@dataclass(frozen=True, eq=True)
class BlockVec:
    """Sparse affine combination of atoms; canonical (no zero coefficients).

    The block universe size p is carried so that restriction and block
    iteration are well defined even for expressions that happen to touch
    fewer blocks.
    """

    p: int
    coeffs: Mapping[Atom, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError("p must be at least 1")
        for a in self.coeffs:
            if a.block > self.p:
                raise ValueError(f"atom block {a.block} outside universe p={self.p}")

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, a: Atom) -> float:
        return self.coeffs.get(a, 0.0)

    def atoms(self) -> list[Atom]:
        return sorted(self.coeffs, key=atom_key)

    def restrict(self, i: int) -> "BlockVec":
        if not 1 <= i <= self.p:
            raise ValueError(f"block id {i} not in [1, {self.p}]")
        kept = {a: c for a, c in self.coeffs.items() if a.block == i}
        return BlockVec(self.p, kept)

    def by_block(self) -> dict[int, dict[Atom, float]]:
        out: dict[int, dict[Atom, float]] = {}
        for a, c in self.coeffs.items():
            out.setdefault(a.block, {})[a] = c
        return out

    def __add__(self, other: "BlockVec") -> "BlockVec":
        return lincomb([(1.0, self), (1.0, other)])

    def __sub__(self, other: "BlockVec") -> "BlockVec":
        return lincomb([(1.0, self), (-1.0, other)])

    def __mul__(self, s: float) -> "BlockVec":
        return lincomb([(float(s), self)])

    __rmul__ = __mul__


def zero_vec(p: int) -> BlockVec:
    return BlockVec(p, {})


def lincomb(terms: Sequence[tuple[float, BlockVec]]) -> BlockVec:
    """Coefficient-wise linear combination, dropping exact zeros."""
    if not terms:
        raise ValueError("lincomb needs at least one term")
    p = terms[0][1].p
    acc: dict[Atom, float] = {}
    for s, v in terms:
        if v.p != p:
            raise ValueError("mixed block universes in lincomb")
        if s == 0.0:
            continue
        for a, c in v.coeffs.items():
            acc[a] = acc.get(a, 0.0) + s * c
    return BlockVec(p, {a: c for a, c in acc.items() if c != 0.0})


def initial_point(p: int) -> BlockVec:
    return BlockVec(p, {Atom(KIND_INITIAL, b): 1.0 for b in range(1, p + 1)})


def gradient_vec(pid: int, p: int, zero_blocks: Iterable[int] = ()) -> BlockVec:
    """Full gradient at point `pid`, split by blocks.

    Blocks in `zero_blocks` are structurally zero (no atom), which encodes
    first-order optimality of an exact partial minimization.
    """
    dead = set(zero_blocks)
    return BlockVec(
        p,
        {
            Atom(KIND_GRADIENT, b, pid): 1.0
            for b in range(1, p + 1)
            if b not in dead
        },
    )


def free_direction(step: int, block: int, p: int) -> BlockVec:
    return BlockVec(p, {Atom(KIND_FREE, block, step): 1.0})


# ---------------------------------------------------------------------------
# degree-two scalar expressions


def _pair_key(a: Atom, b: Atom) -> tuple[Atom, Atom]:
    return (a, b) if atom_key(a) <= atom_key(b) else (b, a)


@dataclass(frozen=True, eq=True)
class QuadExpr:
    """Scalar expression: quadratic in atoms plus affine in f-values.

    quad maps an unordered same-block atom pair (a, b) to its coefficient;
    the represented value is sum q_ab * <v_a, v_b> over stored pairs.
    Cross-block pairs never appear (blocks are orthogonal subspaces).
    fvals maps a point id to the coefficient of that point's f-value.
    """

    quad: Mapping[tuple[Atom, Atom], float] = field(default_factory=dict)
    fvals: Mapping[int, float] = field(default_factory=dict)
    const: float = 0.0

    def is_zero(self) -> bool:
        return not self.quad and not self.fvals and self.const == 0.0

    def __add__(self, other: "QuadExpr") -> "QuadExpr":
        q = dict(self.quad)
        for k, v in other.quad.items():
            q[k] = q.get(k, 0.0) + v
        f = dict(self.fvals)
        for k2, v in other.fvals.items():
            f[k2] = f.get(k2, 0.0) + v
        return QuadExpr(
            {k: v for k, v in q.items() if v != 0.0},
            {k: v for k, v in f.items() if v != 0.0},
            self.const + other.const,
        )

    def __sub__(self, other: "QuadExpr") -> "QuadExpr":
        return self + (-1.0) * other

    def __mul__(self, s: float) -> "QuadExpr":
        s = float(s)
        if s == 0.0:
            return QuadExpr()
        return QuadExpr(
            {k: s * v for k, v in self.quad.items()},
            {k: s * v for k, v in self.fvals.items()},
            s * self.const,
        )

    __rmul__ = __mul__


def qconst(c: float) -> QuadExpr:
    return QuadExpr({}, {}, float(c))


def fval(pid: int, coeff: float = 1.0) -> QuadExpr:
    if coeff == 0.0:
        return QuadExpr()
    return QuadExpr({}, {pid: float(coeff)}, 0.0)


def inner(a: BlockVec, b: BlockVec) -> QuadExpr:
    """Bilinear inner product; decomposes as a sum of per-block products."""
    if a.p != b.p:
        raise ValueError("mixed block universes in inner")
    quad: dict[tuple[Atom, Atom], float] = {}
    bb = b.by_block()
    for blk, a_atoms in a.by_block().items():
        b_atoms = bb.get(blk)
        if not b_atoms:
            continue
        for ua, ca in a_atoms.items():
            for ub, cb in b_atoms.items():
                k = _pair_key(ua, ub)
                quad[k] = quad.get(k, 0.0) + ca * cb
    return QuadExpr({k: v for k, v in quad.items() if v != 0.0}, {}, 0.0)


def sqnorm(v: BlockVec) -> QuadExpr:
    return inner(v, v)


def evaluate(
    expr: QuadExpr,
    atom_vectors: Mapping[Atom, np.ndarray],
    fvalues: Mapping[int, float] | None = None,
) -> float:
    """Numeric substitution; atoms absent from the map count as zero."""
    total = expr.const
    for (a, b), q in expr.quad.items():
        va = atom_vectors.get(a)
        vb = atom_vectors.get(b)
        if va is None or vb is None:
            continue
        total += q * float(np.dot(va, vb))
    if expr.fvals:
        if fvalues is None:
            raise ValueError("expression references f-values but none given")
        for pid, c in expr.fvals.items():
            total += c * fvalues[pid]
    return total
