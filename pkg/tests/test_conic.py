import numpy as np
import pytest

from chebaps.cone import smat
from chebaps.conic import (FREE, L1, NONNEG, PSD, ZERO, Block, ConicProblem, SolverSettings,
                           solve_conic)

cvxpy = pytest.importorskip("cvxpy")

TIGHT = SolverSettings(max_iter=100_000, eps_abs=1e-10, eps_rel=1e-10, rho=1.0)


def random_problem(rng, n=8):
    g = rng.standard_normal((n + 3, n))
    blocks = [Block(PSD, rng.standard_normal((6, n)), rng.standard_normal(6), dim=3),
              Block(NONNEG, rng.standard_normal((3, n)), rng.standard_normal(3)),
              Block(ZERO, rng.standard_normal((1, n)), rng.standard_normal(1)),
              Block(L1, rng.standard_normal((4, n)), weight=0.5),
              Block(FREE, rng.standard_normal((2, n)))]
    return ConicProblem(g.T @ g, rng.standard_normal(n), blocks)


@pytest.mark.parametrize("seed", range(4))
def test_admm_matches_clarabel(seed):
    prob = random_problem(np.random.default_rng(seed))
    ours = solve_conic(prob, TIGHT)
    ref = solve_conic(prob, SolverSettings(backend="cvxpy"))
    assert ours.report.status == "optimal"
    assert ours.report.objective == pytest.approx(ref.report.objective, rel=1e-6, abs=1e-8)
    assert np.abs(ours.x - ref.x).max() < 1e-4


def test_slack_lies_in_cones(rng):
    prob = random_problem(rng)
    sol = solve_conic(prob, TIGHT)
    assert np.linalg.eigvalsh(smat(sol.block_values(0), 3))[0] >= -1e-12
    assert sol.block_values(1).min() >= 0
    assert np.all(sol.block_values(2) == 0)


def test_infeasibility_detected():
    # x >= 1 and -x >= 0 cannot both hold
    a = np.array([[1.0], [-1.0]])
    prob = ConicProblem(np.eye(1), np.zeros(1),
                        [Block(NONNEG, a[:1], [1.0]), Block(NONNEG, a[1:], [0.0])])
    assert solve_conic(prob, SolverSettings(max_iter=20000)).report.status == "infeasible"


def test_deterministic(rng):
    prob = random_problem(rng)
    s = SolverSettings(max_iter=300)
    a, b = solve_conic(prob, s), solve_conic(prob, s)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.z, b.z)


def test_warm_start_from_solution_is_immediate(rng):
    prob = random_problem(rng)
    sol = solve_conic(prob, TIGHT)
    again = solve_conic(prob, TIGHT, warm=sol)
    assert again.report.iterations <= 50


def test_adaptive_penalty_still_converges(rng):
    prob = random_problem(rng)
    s = SolverSettings(max_iter=100_000, eps_abs=1e-9, eps_rel=1e-9, adaptive_rho=True)
    ref = solve_conic(prob, SolverSettings(backend="cvxpy"))
    assert solve_conic(prob, s).report.objective == pytest.approx(ref.report.objective, rel=1e-5)


def test_problem_validation():
    with pytest.raises(ValueError):
        ConicProblem(np.eye(2), np.zeros(3), [Block(FREE, np.eye(3))])
    with pytest.raises(ValueError):
        Block(PSD, np.eye(4), dim=2)
    with pytest.raises(ValueError):
        Block(L1, np.eye(2), weight=-1.0)
    with pytest.raises(ValueError):
        solve_conic(ConicProblem(np.eye(1), np.zeros(1), [Block(FREE, np.eye(1))]),
                    SolverSettings(backend="magic"))
