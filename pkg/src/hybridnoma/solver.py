"""Sequential convex approximation for max-min time/power allocation."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .conic import ConicBackend, ConicSolution, SolveFailure, make_backend
from .grouping import ClusterAssignment
from .ratemodel import Allocation
from .scenario import Scenario
from .subproblem import (
    ExpansionPoint,
    LN2,
    build_subproblem,
    default_cut_points,
    extract_allocation,
    initial_point,
    point_from_amplitudes,
    point_vector,
)

log = logging.getLogger(__name__)

CUT_GAP_TOL = 1e-6
MAX_CUT_ROUNDS = 100
# amplitudes below this are lifted so the next Taylor point stays strictly positive
MIN_AMPLITUDE = 1e-9
POINT_MARGIN_TOL = 1e-6


@dataclass(frozen=True)
class ScaConfig:
    epsilon: float = 1e-4
    max_iterations: int = 50
    solver_tol: float | None = None  # None: backend default
    seed: int = 0
    backend: str = "clarabel"

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class SolveReport:
    allocation: Allocation | None
    gamma: float
    trace: list[float]
    iterations: int
    status: str
    wall_time: float
    point: ExpansionPoint | None = None
    message: str = ""
    cut_rounds: list[int] = field(default_factory=list)
    # smallest cone margin of each iteration's expansion point in its own subproblem
    point_margins: list[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def solve_with_cuts(
    backend: ConicBackend,
    scenario: Scenario,
    clusters: ClusterAssignment,
    point: ExpansionPoint,
    fixed_times: Sequence[float] | None = None,
) -> tuple[ConicSolution, object, int]:
    """Solve one subproblem; tangent-cut refinement when the backend lacks the exponential cone.

    Returns the solution, its variable layout and the number of cut rounds.
    """
    if backend.supports_exp:
        program, layout = build_subproblem(scenario, clusters, point, fixed_times)
        return backend.solve(program), layout, 0

    base = default_cut_points(scenario)
    cuts = {(c, d): list(base) for c in range(clusters.num_clusters) for d in range(2)}
    for rounds in range(1, MAX_CUT_ROUNDS + 1):
        program, layout = build_subproblem(scenario, clusters, point, fixed_times, cuts=cuts)
        sol = backend.solve(program)
        worst = 0.0
        for c in range(clusters.num_clusters):
            for d in range(2):
                theta = float(sol.x[layout.theta[c, d]])
                a = float(sol.x[layout.a[c, d]])
                # gap of a >= 2**theta / alpha0, in units of alpha0
                gap = math.exp(LN2 * theta - math.log(point.alpha[c, d])) - a
                if gap > CUT_GAP_TOL:
                    cuts[c, d].append(theta)
                worst = max(worst, gap)
        if worst <= CUT_GAP_TOL:
            return sol, layout, rounds
    raise SolveFailure("cut_limit", f"tangent cuts did not close the gap in {MAX_CUT_ROUNDS} rounds")


def _run_sca(
    scenario: Scenario,
    clusters: ClusterAssignment,
    config: ScaConfig,
    fixed_times: np.ndarray | None,
    backend: ConicBackend | None,
    start: ExpansionPoint | None,
    dump_path: str | Path | None,
) -> SolveReport:
    if backend is None:
        opts = {} if config.solver_tol is None else {"tol": config.solver_tol}
        backend = make_backend(config.backend, **opts)
    t0 = time.perf_counter()
    point = start if start is not None else initial_point(scenario, clusters, config.seed)
    trace: list[float] = []
    cut_rounds: list[int] = []
    margins: list[float] = []
    times = fixed_times if fixed_times is not None else equal_times(scenario, clusters)
    best: tuple[Allocation, float, ExpansionPoint] | None = None
    status, message = "max_iters", ""

    for it in range(config.max_iterations):
        try:
            try:
                sol, layout, rounds = solve_with_cuts(backend, scenario, clusters, point, fixed_times)
            except SolveFailure as exc:
                log.debug("iteration %d failed (%s); retrying from a perturbed point", it, exc)
                point = point.perturbed()
                sol, layout, rounds = solve_with_cuts(backend, scenario, clusters, point, fixed_times)
        except SolveFailure as exc:
            status, message = "subproblem_failed", f"iteration {it + 1}: {exc}"
            break
        program, _ = build_subproblem(scenario, clusters, point, fixed_times)
        margin = program.min_residual(point_vector(layout, times))
        margins.append(margin)
        if margin < -POINT_MARGIN_TOL:
            log.warning("iteration %d: expansion point violates its subproblem by %.3g", it + 1, -margin)
        if dump_path is not None and it == 0:
            Path(dump_path).write_text(program.to_text(), encoding="utf-8")

        values = extract_allocation(sol.x, layout)
        cut_rounds.append(rounds)
        gamma = values.gamma
        times = np.asarray(values.allocation.times)
        p_next = np.maximum(np.asarray(values.allocation.amplitudes), MIN_AMPLITUDE)
        point = point_from_amplitudes(scenario, clusters, p_next)
        if best is None or gamma >= best[1]:
            best = (values.allocation, gamma, point)
        trace.append(gamma)
        log.debug("iteration %d: gamma = %.9g", it + 1, gamma)
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) <= config.epsilon:
            status = "converged"
            break

    wall = time.perf_counter() - t0
    if best is None:
        return SolveReport(None, 0.0, trace, len(trace), status, wall, None, message, cut_rounds, margins)
    allocation, gamma, final_point = best
    if status != "subproblem_failed":
        allocation, gamma = values.allocation, trace[-1]
        final_point = point
    return SolveReport(allocation, gamma, trace, len(trace), status, wall, final_point, message,
                       cut_rounds, margins)


def solve_maxmin(
    scenario: Scenario,
    clusters: ClusterAssignment,
    config: ScaConfig = ScaConfig(),
    backend: ConicBackend | None = None,
    start: ExpansionPoint | None = None,
    dump_path: str | Path | None = None,
) -> SolveReport:
    """Jointly optimise slot durations and powers to maximise the minimum user rate."""
    return _run_sca(scenario, clusters, config, None, backend, start, dump_path)


def equal_times(scenario: Scenario, clusters: ClusterAssignment) -> np.ndarray:
    C = clusters.num_clusters
    return np.full(C, scenario.params.total_time / C)


def solve_equal_time(
    scenario: Scenario,
    clusters: ClusterAssignment,
    config: ScaConfig = ScaConfig(),
    backend: ConicBackend | None = None,
    start: ExpansionPoint | None = None,
    dump_path: str | Path | None = None,
) -> SolveReport:
    """Baseline: every cluster gets ``T / C`` and only powers are optimised."""
    return _run_sca(scenario, clusters, config, equal_times(scenario, clusters), backend, start, dump_path)


@dataclass(frozen=True)
class SweepPoint:
    pmax: float
    opportunistic: SolveReport
    equal: SolveReport

    @property
    def gamma_opportunistic(self) -> float:
        return self.opportunistic.gamma

    @property
    def gamma_equal(self) -> float:
        return self.equal.gamma


def sweep_pmax(
    scenario: Scenario,
    clusters: ClusterAssignment,
    config: ScaConfig,
    pmax_list: Sequence[float],
    warm_start: bool = True,
    backend: ConicBackend | None = None,
) -> list[SweepPoint]:
    """Run both schemes for each power budget in ascending order.

    With ``warm_start`` each run starts from the previous budget's final
    point, which stays feasible because budgets only grow.
    """
    pmax_list = [float(x) for x in pmax_list]
    if not pmax_list:
        raise ValueError("pmax_list must not be empty")
    if any(b < a for a, b in zip(pmax_list, pmax_list[1:])):
        raise ValueError("pmax_list must be ascending")
    out: list[SweepPoint] = []
    start_opp = start_eq = None
    for pmax in pmax_list:
        sc = scenario.with_params(max_power=pmax)
        opp = solve_maxmin(sc, clusters, config, backend, start_opp)
        eq = solve_equal_time(sc, clusters, config, backend, start_eq)
        out.append(SweepPoint(pmax, opp, eq))
        if warm_start:
            start_opp = opp.point if opp.allocation is not None else None
            start_eq = eq.point if eq.allocation is not None else None
    return out
