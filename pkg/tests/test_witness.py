import numpy as np
import pytest

from blockpep.algos import CacdStep, build_am, build_cacd, build_ccd, build_custom
from blockpep.expr import Atom, KIND_INITIAL
from blockpep.interp import ClassParams, check_interpolable, NumericPoint
from blockpep.pep import OBJ_GAP, assemble, compile, init_condition, solve_worst_case
from blockpep.solve import SdpSolution, SolveOptions
from blockpep.witness import (
    OracleFunction,
    QuadraticFunction,
    Witness,
    f_eps,
    reconstruct,
    simulate,
    validate_lower_bound,
    witness_csv,
)


def _solved(traj, L=1.0, R=1.0):
    prob = assemble(traj, ClassParams(L), OBJ_GAP, init_condition(R))
    res = solve_worst_case(prob, SolveOptions())
    assert res.solution.status in ("optimal", "near-optimal")
    return prob, res


def test_zero_gram_reconstructs_the_origin():
    prob = assemble(
        build_ccd(2, 1, 0.5), ClassParams(1.0), OBJ_GAP, init_condition(1.0)
    )
    sdp = compile(prob)
    sol = SdpSolution(
        grams=tuple(np.zeros((d, d)) for d in sdp.block_dims),
        fvals=np.zeros(len(sdp.fpids)),
        value=0.0,
        duals=None,
        status="optimal",
    )
    w = reconstruct(sol, prob)
    assert all(r == 0 for r in w.ranks.values())
    for pid in w.x:
        for b, vec in w.x[pid].items():
            assert vec.shape == (0,)
    assert w.criterion_value == 0.0


def test_rank_one_gram_factors_exactly():
    prob = assemble(
        build_ccd(1, 1, 1.0), ClassParams(1.0), OBJ_GAP, init_condition(1.0)
    )
    sdp = compile(prob)
    v = np.array([1.0, -0.5, 0.25])
    assert sdp.block_dims == (3,)
    sol = SdpSolution(
        grams=(np.outer(v, v),),
        fvals=np.zeros(len(sdp.fpids)),
        value=0.0,
        duals=None,
        status="optimal",
    )
    w = reconstruct(sol, prob)
    assert w.ranks[1] == 1
    coords = np.array([w.coords[a][0] for a in prob.block_atoms[1]])
    # recovery up to a global sign
    assert np.allclose(coords, v) or np.allclose(coords, -v)


def test_indefinite_gram_rejected():
    prob = assemble(
        build_ccd(1, 1, 1.0), ClassParams(1.0), OBJ_GAP, init_condition(1.0)
    )
    sdp = compile(prob)
    G = np.diag([1.0, -0.1, 0.0])
    sol = SdpSolution(
        grams=(G,),
        fvals=np.zeros(len(sdp.fpids)),
        value=0.0,
        duals=None,
        status="optimal",
    )
    with pytest.raises(ValueError):
        reconstruct(sol, prob)


def test_reconstruct_requires_solved_status():
    prob = assemble(
        build_ccd(1, 1, 1.0), ClassParams(1.0), OBJ_GAP, init_condition(1.0)
    )
    sdp = compile(prob)
    sol = SdpSolution(
        grams=tuple(np.zeros((d, d)) for d in sdp.block_dims),
        fvals=np.zeros(len(sdp.fpids)),
        value=float("nan"),
        duals=None,
        status="failed",
    )
    with pytest.raises(ValueError):
        reconstruct(sol, prob)


def test_gram_match_invariant():
    """Reconstructed coordinates reproduce the solved Gram entrywise."""
    prob, res = _solved(build_ccd(2, 1, 0.5))
    w = reconstruct(res.solution, prob)
    for b in (1, 2):
        atoms = prob.block_atoms[b]
        C = np.stack([w.coords[a] for a in atoms])
        G = C @ C.T
        assert np.allclose(G, res.solution.grams[b - 1], atol=1e-6)


def test_end_to_end_witness_on_the_small_instance():
    prob, res = _solved(build_ccd(2, 1, 0.5))
    w = reconstruct(res.solution, prob)
    report = validate_lower_bound(w, prob, tol=1e-6, primal=res.value)
    assert report.passed, report.failures
    assert report.criterion_value == pytest.approx(res.value, abs=1e-5)
    assert report.replay_residual <= 1e-8


def test_momentum_witness_replays():
    prob, res = _solved(build_custom(2, (2, 1, 2, 1), CacdStep(1.0)))
    w = reconstruct(res.solution, prob)
    report = validate_lower_bound(w, prob, tol=1e-6, primal=res.value)
    assert report.passed, report.failures
    assert report.replay_residual <= 1e-8


def test_am_witness_zero_partial_gradients():
    prob, res = _solved(build_am(2, 1))
    w = reconstruct(res.solution, prob)
    report = validate_lower_bound(w, prob, tol=1e-6, primal=res.value)
    assert report.passed, report.failures
    for pid, i in prob.materialized.zero_grad.items():
        assert np.linalg.norm(w.g[pid][i]) <= 1e-6


def test_scaled_start_breaks_the_ball():
    prob, res = _solved(build_ccd(2, 1, 0.5))
    w = reconstruct(res.solution, prob)
    coords = dict(w.coords)
    for b in (1, 2):
        a = Atom(KIND_INITIAL, b, None)
        coords[a] = 1.01 * coords[a]
    # rebuild the induced point data with the inflated start
    from blockpep.witness import _eval_vec

    xs = {pt.pid: _eval_vec(pt.x, coords, w.ranks) for pt in prob.points}
    bad = Witness(coords, w.ranks, xs, w.g, w.f, w.criterion_value)
    report = validate_lower_bound(bad, prob, tol=1e-6, primal=None)
    assert not report.passed
    assert any("initial-condition" in msg for msg in report.failures)
    assert report.ball_residual > 1e-4


def test_witness_csv_sections():
    prob, res = _solved(build_ccd(2, 1, 0.5))
    w = reconstruct(res.solution, prob)
    text = witness_csv(w)
    blocks = text.strip().split("\n\n")
    assert len(blocks) == 2
    atom_lines = blocks[0].split("\n")
    assert atom_lines[0].startswith("block,atom-kind,point-id,coord-0")
    assert len(atom_lines) == 1 + len(w.coords)
    f_lines = blocks[1].split("\n")
    assert f_lines[0] == "point-id,f-value"
    assert len(f_lines) == 1 + len(w.f)
    # star appears with value zero
    assert any(line.startswith("star,0") for line in f_lines)


# ---------------------------------------------------------------------------
# concrete functions


def test_f_eps_constants():
    f = f_eps(0.01)
    assert f.L == pytest.approx(4.02)
    assert f.Li == (pytest.approx(2.02), pytest.approx(2.02))
    v, g = f.oracle(np.array([1.0, -1.0]))
    assert v == pytest.approx(4.02)
    assert np.allclose(g, [2.02 * 1 + 2.0, -2.0 - 2.02])
    assert f.f_star == pytest.approx(0.0, abs=1e-12)


def test_quadratic_block_minimization_is_exact():
    f = f_eps(0.5)
    x = np.array([1.0, -2.0])
    y = f.argmin_block(x, 1)
    # partial gradient in the minimized block vanishes
    _, g = f.oracle(y)
    assert abs(g[0]) < 1e-12
    assert y[1] == x[1]


def test_quadratic_validation():
    with pytest.raises(ValueError):
        QuadraticFunction(np.array([[1.0, 2.0], [0.0, 1.0]]), (1, 1))
    with pytest.raises(ValueError):
        QuadraticFunction(np.eye(3), (1, 1))
    with pytest.raises(ValueError):
        QuadraticFunction(-np.eye(2), (1, 1))  # concave


def test_oracle_function_scalar_search():
    quad = f_eps(0.1)
    black = OracleFunction(quad.oracle, (1, 1), quad.L, f_star=0.0)
    x = np.array([0.8, -0.3])
    exact = quad.argmin_block(x, 2)
    approx = black.argmin_block(x, 2)
    assert np.allclose(exact, approx, atol=1e-8)


def test_oracle_function_rejects_wide_blocks():
    quad = QuadraticFunction(np.eye(3), (2, 1))
    black = OracleFunction(quad.oracle, (2, 1), 1.0, f_star=0.0)
    with pytest.raises(ValueError):
        black.argmin_block(np.zeros(3), 1)


# ---------------------------------------------------------------------------
# simulation


def test_simulate_zero_step_keeps_the_start():
    f = f_eps(0.01)
    traj = build_ccd(2, 3, 0.0)
    trace = simulate(f, traj, np.array([1.0, -1.0]))
    for x in trace.xs:
        assert np.allclose(x, [1.0, -1.0])


def test_simulate_descent_for_safe_steps():
    f = f_eps(0.01)
    traj = build_ccd(2, 5, 1.0)  # alpha = 1/L
    trace = simulate(f, traj, np.array([1.0, -1.0]))
    gaps = trace.f_gaps
    assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    assert gaps[0] == pytest.approx(4.02)


def test_simulate_alternating_minimization_descends():
    f = f_eps(0.01)
    traj = build_am(2, 4)
    trace = simulate(f, traj, np.array([1.0, -1.0]))
    gaps = trace.f_gaps
    assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    assert len(gaps) == 9


def test_simulate_momentum_runs():
    f = f_eps(0.01)
    traj = build_cacd(2, 4, f.L)
    trace = simulate(f, traj, np.array([1.0, -1.0]))
    assert len(trace.xs) == 9
    assert trace.f_gaps[-1] < trace.f_gaps[0]


def test_simulate_validates_shapes():
    f = f_eps(0.01)
    with pytest.raises(ValueError):
        simulate(f, build_ccd(2, 1, 0.5), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        simulate(f, build_ccd(3, 1, 0.5), np.array([1.0, -1.0, 0.0]))


def test_simulated_data_is_interpolable():
    """Any simulated quadratic run yields data the class check accepts."""
    f = f_eps(0.25)
    traj = build_ccd(2, 2, 1.0)
    trace = simulate(f, traj, np.array([1.0, -1.0]))
    pts = []
    for n, x in enumerate(trace.xs):
        v, g = f.oracle(x)
        pts.append(
            NumericPoint(
                n,
                {1: x[:1], 2: x[1:]},
                {1: g[:1], 2: g[1:]},
                v,
            )
        )
    star = f.minimizer()
    vs, gs = f.oracle(star)
    pts.append(NumericPoint("star", {1: star[:1], 2: star[1:]}, {1: gs[:1], 2: gs[1:]}, vs))
    assert check_interpolable(pts, ClassParams(f.L), tol=1e-9).feasible
