import numpy as np
import pytest

from hybridnoma.conic import ClarabelBackend, SolveFailure
from hybridnoma.grouping import group_users
from hybridnoma.oracle import grid_maxmin
from hybridnoma.ratemodel import check_feasibility, evaluate
from hybridnoma.scenario import SystemParams, make_scenario
from hybridnoma.solver import (
    ScaConfig,
    equal_times,
    solve_equal_time,
    solve_maxmin,
    sweep_pmax,
)

from conftest import custom_scenario


class FlakyBackend:
    """Delegates to Clarabel for the first ``good`` solves, then fails."""

    name = "flaky"
    supports_exp = True

    def __init__(self, good: int) -> None:
        self.good = good
        self.calls = 0
        self.inner = ClarabelBackend()

    def solve(self, program):
        self.calls += 1
        if self.calls > self.good:
            raise SolveFailure("NumericalError", "injected")
        return self.inner.solve(program)


def test_huge_gain_gap_matches_oracle():
    sc = custom_scenario([1e-3, 4e-7])
    cl = group_users(sc.channels)
    rep = solve_maxmin(sc, cl)
    assert rep.converged
    oracle = grid_maxmin(sc, cl).min_rate
    assert abs(rep.gamma - oracle) <= 0.02 * oracle


def test_symmetric_clusters_get_equal_slots():
    sc = custom_scenario([1e-4, 1e-6, 1e-4, 1e-6])
    rep = solve_maxmin(sc, group_users(sc.channels))
    t = rep.allocation.times
    assert abs(t[0] - t[1]) <= 1e-3
    eq = solve_equal_time(sc, group_users(sc.channels))
    assert abs(rep.gamma - eq.gamma) <= 1e-3 * eq.gamma


def test_tiny_power_budget_lowers_gamma(default_case):
    sc, cl = default_case
    full = solve_maxmin(sc, cl).gamma
    tiny = solve_maxmin(sc.with_params(max_power=sc.params.max_power / 1e6), cl).gamma
    assert 0 < tiny < full


def test_equal_slots_for_default_frame(default_case):
    sc, cl = default_case
    assert list(equal_times(sc, cl)) == [2.0] * 5
    rep = solve_equal_time(sc, cl)
    assert rep.allocation.times == (2.0,) * 5


@pytest.mark.parametrize("seed", [0, 3, 11])
def test_solution_quality(seed):
    sc = make_scenario(seed=seed)
    cl = group_users(sc.channels)
    rep = solve_maxmin(sc, cl)
    eq = solve_equal_time(sc, cl)
    assert rep.converged and eq.converged
    assert rep.gamma >= eq.gamma * (1 - 1e-6)
    assert rep.iterations <= ScaConfig().max_iterations
    assert np.all(np.diff(rep.trace) >= -1e-6 * rep.gamma)
    for r in (rep, eq):
        assert check_feasibility(sc, r.allocation) == []
        true_min = evaluate(sc, cl, r.allocation).min_rate
        assert true_min == pytest.approx(r.gamma, rel=1e-5)
        assert min(r.point_margins) >= -1e-6


def test_deterministic(default_case):
    sc, cl = default_case
    a, b = solve_maxmin(sc, cl), solve_maxmin(sc, cl)
    assert a.trace == b.trace and a.allocation == b.allocation


def test_cut_backend_agrees_with_exponential_cone():
    sc = make_scenario(SystemParams(num_users=4, num_clusters=2), seed=1)
    cl = group_users(sc.channels)
    ref = solve_maxmin(sc, cl)
    cut = solve_maxmin(sc, cl, ScaConfig(backend="cvxopt"))
    assert cut.converged
    assert cut.gamma == pytest.approx(ref.gamma, rel=1e-5)
    assert all(r >= 1 for r in cut.cut_rounds)


def test_max_iterations_status(default_case):
    sc, cl = default_case
    rep = solve_maxmin(sc, cl, ScaConfig(max_iterations=1))
    assert rep.status == "max_iters" and rep.iterations == 1 and not rep.converged


def test_failure_on_first_iteration():
    sc = custom_scenario([1e-3, 4e-7])
    rep = solve_maxmin(sc, group_users(sc.channels), backend=FlakyBackend(0))
    assert rep.status == "subproblem_failed" and rep.allocation is None
    assert "iteration 1" in rep.message


def test_failure_later_returns_best_iterate():
    sc = make_scenario(SystemParams(num_users=4, num_clusters=2), seed=0)
    cl = group_users(sc.channels)
    rep = solve_maxmin(sc, cl, backend=FlakyBackend(2))
    assert rep.status == "subproblem_failed"
    assert rep.iterations == 2 and rep.gamma == max(rep.trace)
    assert check_feasibility(sc, rep.allocation) == []


def test_sweep_is_monotone_and_dominant(default_case):
    sc, cl = default_case
    pts = sweep_pmax(sc, cl, ScaConfig(), [1, 2, 5, 10, 20])
    opp = [p.gamma_opportunistic for p in pts]
    eq = [p.gamma_equal for p in pts]
    assert all(b >= a * (1 - 1e-6) for a, b in zip(opp, opp[1:]))
    assert all(b >= a * (1 - 1e-6) for a, b in zip(eq, eq[1:]))
    assert all(o >= e * (1 - 1e-6) for o, e in zip(opp, eq))


def test_single_point_sweep_equals_direct_solve(default_case):
    sc, cl = default_case
    (pt,) = sweep_pmax(sc, cl, ScaConfig(), [10.0])
    assert pt.gamma_opportunistic == solve_maxmin(sc, cl).gamma
    assert pt.gamma_equal == solve_equal_time(sc, cl).gamma


def test_sweep_input_validation(default_case):
    sc, cl = default_case
    with pytest.raises(ValueError):
        sweep_pmax(sc, cl, ScaConfig(), [])
    with pytest.raises(ValueError):
        sweep_pmax(sc, cl, ScaConfig(), [5, 1])


def test_config_validation():
    with pytest.raises(ValueError):
        ScaConfig(epsilon=0)
    with pytest.raises(ValueError):
        ScaConfig(max_iterations=0)


def test_dump_written(tmp_path, default_case):
    sc, cl = default_case
    path = tmp_path / "sub.txt"
    solve_maxmin(sc, cl, dump_path=path)
    assert path.read_text().startswith("variables ")
