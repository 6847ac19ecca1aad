import numpy as np
import pytest

from blockpep.algos import CacdStep, CcdStep, build_am, build_ccd, build_custom, build_ensemble
from blockpep.interp import ClassParams
from blockpep.pep import (
    ENSEMBLE_AVG,
    GRAD_SQ,
    OBJ_GAP,
    OPTIMUM_PID,
    all_condition,
    assemble,
    compile,
    init_condition,
)
from blockpep.solve import dump_sdp


def _small_problem(setting="init", criterion=OBJ_GAP, K=1):
    traj = build_ccd(2, K, 0.5)
    cond = init_condition(1.0) if setting == "init" else all_condition(1.0)
    return assemble(traj, ClassParams(1.0), criterion, cond)


def test_point_and_constraint_counts():
    prob = _small_problem()
    # x0, x1, x2 plus the optimum
    assert len(prob.points) == 4
    pids = [pt.pid for pt in prob.points]
    assert OPTIMUM_PID in pids
    interp = [c for c in prob.constraints if c.name.startswith("interp:")]
    balls = [c for c in prob.constraints if c.name.startswith("ball:")]
    assert len(interp) == 4 * 3
    assert len(balls) == 1


def test_optimum_is_normalized_out():
    prob = _small_problem()
    star = next(pt for pt in prob.points if pt.pid == OPTIMUM_PID)
    assert star.x.is_zero()
    assert star.g.is_zero()
    assert not star.f.fvals and star.f.const == 0.0
    # and it owns no f-variable
    assert OPTIMUM_PID not in prob.fpids


def test_setting_all_ball_count():
    traj = build_ccd(2, 3, 0.5)
    with_x0 = assemble(traj, ClassParams(1.0), OBJ_GAP, all_condition(1.0))
    without = assemble(
        traj, ClassParams(1.0), OBJ_GAP, all_condition(1.0, include_x0=False)
    )
    balls_with = [c for c in with_x0.constraints if c.name.startswith("ball:")]
    balls_without = [c for c in without.constraints if c.name.startswith("ball:")]
    assert len(balls_with) == 4  # k = 0..3
    assert len(balls_without) == 3


def test_objective_obj_gap_is_final_fvalue():
    prob = _small_problem()
    # normalization puts f* = 0, so the gap is the final f-value alone
    assert prob.objective.fvals == {2: 1.0}
    assert not prob.objective.quad


def test_objective_grad_sq_is_pure_quadratic():
    prob = _small_problem(criterion=GRAD_SQ)
    assert not prob.objective.fvals
    assert prob.objective.quad


def test_criterion_compatibility():
    chain = build_ccd(2, 1, 0.5)
    with pytest.raises(ValueError):
        assemble(chain, ClassParams(1.0), ENSEMBLE_AVG, init_condition(1.0))
    ens = build_ensemble(2, 2, CcdStep(0.5))
    with pytest.raises(ValueError):
        assemble(ens, ClassParams(1.0), OBJ_GAP, init_condition(1.0))
    assemble(ens, ClassParams(1.0), ENSEMBLE_AVG, init_condition(1.0))


def test_condition_validation():
    with pytest.raises(ValueError):
        init_condition(-1.0)
    init_condition(0.0)


def test_gram_blocks_and_dims():
    prob = _small_problem()
    sdp = compile(prob)
    assert len(sdp.block_dims) == 2
    # atoms per block: initial + one gradient per evaluated point (star has none)
    assert sdp.block_dims == (4, 4)
    assert sdp.fpids == (0, 1, 2)
    assert len(sdp.constraints) == 13


def test_constraint_matrices_are_symmetric():
    sdp = compile(_small_problem(setting="all", K=2))
    for _name, term, _sense in sdp.constraints:
        for A in term.mats:
            assert np.allclose(A, A.T)
    for A in sdp.objective.mats:
        assert np.allclose(A, A.T)


def test_compile_determinism():
    a = dump_sdp(compile(_small_problem(setting="all", K=2)))
    b = dump_sdp(compile(_small_problem(setting="all", K=2)))
    assert a == b


def test_ensemble_objective_averages_branches():
    traj = build_ensemble(2, 2, CacdStep(1.0))
    prob = assemble(traj, ClassParams(1.0), ENSEMBLE_AVG, init_condition(1.0))
    # four branch finals, each weighted 1/4
    weights = sorted(prob.objective.fvals.values())
    assert weights == [0.25, 0.25, 0.25, 0.25]


def test_ensemble_point_count_two_blocks_two_steps():
    traj = build_ensemble(2, 2, CacdStep(1.0))
    prob = assemble(traj, ClassParams(1.0), ENSEMBLE_AVG, init_condition(1.0))
    # 1 + 2 auxiliary points, 4 leaf finals, 1 optimum
    assert len(prob.points) == 8
    interp = [c for c in prob.constraints if c.name.startswith("interp:")]
    assert len(interp) == 8 * 7


def test_am_assembly_has_block_structured_gradients():
    traj = build_am(2, 1)
    prob = assemble(traj, ClassParams(1.0), OBJ_GAP, init_condition(1.0))
    sdp = compile(prob)
    # block atoms: initial, one free direction, gradients only where evaluated
    assert len(sdp.block_dims) == 2
    assert all(d >= 3 for d in sdp.block_dims)


def test_alpha_override_reaches_materialization():
    traj = build_ccd(2, 1, 0.5)
    prob = assemble(
        traj, ClassParams(4.0), OBJ_GAP, init_condition(1.0), alpha=0.5
    )
    assert prob.materialized.alpha == 0.5
    default = assemble(traj, ClassParams(4.0), OBJ_GAP, init_condition(1.0))
    assert default.materialized.alpha == pytest.approx(0.125)
