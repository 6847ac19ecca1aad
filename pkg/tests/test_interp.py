import itertools

import numpy as np
import pytest

from blockpep.expr import evaluate, gradient_vec, initial_point, fval, zero_vec, qconst
from blockpep.interp import (
    ClassParams,
    EvaluatedPoint,
    NumericPoint,
    check_interpolable,
    interpolation_constraints,
    interpolation_pairs,
)


def _points(m, p=2):
    pts = [EvaluatedPoint(0, initial_point(p), gradient_vec(0, p), fval(0))]
    for n in range(1, m):
        pts.append(
            EvaluatedPoint(n, initial_point(p), gradient_vec(n, p), fval(n))
        )
    return pts


def test_pair_count_is_m_times_m_minus_one():
    for m in range(1, 6):
        pts = _points(m)
        assert len(list(interpolation_pairs(pts))) == m * (m - 1)
        assert len(interpolation_constraints(pts, ClassParams(1.0))) == m * (m - 1)


def test_duplicate_pids_rejected():
    p = 2
    pts = [
        EvaluatedPoint(0, initial_point(p), gradient_vec(0, p), fval(0)),
        EvaluatedPoint(0, zero_vec(p), gradient_vec(1, p), fval(1)),
    ]
    with pytest.raises(ValueError):
        interpolation_constraints(pts, ClassParams(1.0))


def test_constraint_formula_against_hand_expansion():
    """One ordered pair, concrete data, constraint value recomputed by hand."""
    L = 2.0
    p = 1
    pts = [
        EvaluatedPoint(0, initial_point(p), gradient_vec(0, p), fval(0)),
        EvaluatedPoint(1, zero_vec(p), gradient_vec(1, p), fval(1)),
    ]
    cons = interpolation_constraints(pts, ClassParams(L))
    rng = np.random.default_rng(3)
    coords = {a: rng.standard_normal(2) for c in cons for a in _quad_atoms(c)}
    fv = {0: 0.7, 1: -0.2}

    # pair (n=0, l=1): f1 - f0 + <g1, x0 - x1> + ||g0 - g1||^2 / (2L)
    from blockpep.expr import Atom, KIND_GRADIENT, KIND_INITIAL

    x0 = coords.get(Atom(KIND_INITIAL, 1, None), np.zeros(2))
    g0 = coords.get(Atom(KIND_GRADIENT, 1, 0), np.zeros(2))
    g1 = coords.get(Atom(KIND_GRADIENT, 1, 1), np.zeros(2))
    want = fv[1] - fv[0] + g1 @ (x0 - 0.0) + (g0 - g1) @ (g0 - g1) / (2 * L)
    got = evaluate(cons[0], coords, fv)
    assert got == pytest.approx(want, abs=1e-12)


def _quad_atoms(expr):
    out = set()
    for a, b in expr.quad:
        out.add(a)
        out.add(b)
    return out


def _quad_data(L, xs):
    """Data for f(x) = L/2 x^2 on scalars, as two-block points with the
    second block frozen at zero."""
    pts = []
    for pid, x in xs.items():
        pts.append(
            NumericPoint(
                pid,
                {1: np.array([x]), 2: np.zeros(1)},
                {1: np.array([L * x]), 2: np.zeros(1)},
                0.5 * L * x * x,
            )
        )
    return pts


def test_quadratic_data_is_interpolable():
    pts = _quad_data(1.0, {0: 1.0, 1: 0.25, "star": 0.0})
    feasible, report = True, check_interpolable(pts, ClassParams(1.0))
    assert report.feasible is feasible
    assert report.worst_residual <= 1e-12
    assert report.violating_pair is None


def test_smoothness_violation_detected():
    # inflate one f-value: convexity between the two points breaks
    pts = _quad_data(1.0, {0: 1.0, 1: 0.0})
    pts[0] = NumericPoint(0, pts[0].x, pts[0].g, pts[0].f + 1.0)
    report = check_interpolable(pts, ClassParams(1.0))
    assert not report.feasible
    assert report.worst_residual > 0.1
    assert report.violating_pair is not None


def test_class_constant_matters():
    # f = x^2 has slope-2 gradients; its data needs L >= 2
    pts = _quad_data(2.0, {0: 1.0, 1: -0.5})
    assert check_interpolable(pts, ClassParams(2.0)).feasible
    assert not check_interpolable(pts, ClassParams(1.0)).feasible


def test_point_order_invariance():
    base = _quad_data(1.0, {0: 1.0, 1: 0.25, 2: -0.5})
    r0 = check_interpolable(base, ClassParams(1.0))
    for perm in itertools.permutations(base):
        r = check_interpolable(list(perm), ClassParams(1.0))
        assert r.feasible == r0.feasible
        assert r.worst_residual == pytest.approx(r0.worst_residual, abs=1e-15)


def test_empty_and_single_point_data():
    assert check_interpolable([], ClassParams(1.0)).feasible
    one = _quad_data(1.0, {0: 0.3})
    rep = check_interpolable(one, ClassParams(1.0))
    assert rep.feasible and rep.worst_residual == -np.inf


def test_block_set_mismatch_raises():
    a = NumericPoint(0, {1: np.zeros(1)}, {1: np.zeros(1)}, 0.0)
    b = NumericPoint(
        1, {1: np.zeros(1), 2: np.zeros(1)}, {1: np.zeros(1), 2: np.zeros(1)}, 0.0
    )
    with pytest.raises(ValueError):
        check_interpolable([a, b], ClassParams(1.0))


def test_dimension_mismatch_raises():
    a = NumericPoint(0, {1: np.zeros(2)}, {1: np.zeros(2)}, 0.0)
    b = NumericPoint(1, {1: np.zeros(3)}, {1: np.zeros(3)}, 0.0)
    with pytest.raises(ValueError):
        check_interpolable([a, b], ClassParams(1.0))


def test_missing_gradient_entry_raises():
    a = NumericPoint(0, {1: np.zeros(1)}, {}, 0.0)
    with pytest.raises(ValueError):
        check_interpolable([a], ClassParams(1.0))


def test_params_validate():
    with pytest.raises(ValueError):
        ClassParams(0.0)
    with pytest.raises(ValueError):
        ClassParams(-1.0)
    assert qconst(0.0).const == 0.0  # keep the import honest
