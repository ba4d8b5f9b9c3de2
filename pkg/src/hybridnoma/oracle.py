"""Brute-force grid search for tiny instances, used to validate the SCA solver.

The grid lives inside the feasible set by construction: the power and time
budgets are saturated (the max-min rate is nondecreasing in both) and the
weak user of each cluster receives a fraction in ``[0.5, 1]`` of the cluster
power, which is exactly the SIC ordering for two users.

The strong user's share ``1 - f`` is gridded geometrically, down to well
below ``1 / SNR``: at high SNR the optimum gives the strong user a tiny
share (around ``1 / sqrt(SNR)``) that a linear grid cannot resolve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grouping import ClusterAssignment, UnsupportedConfigurationError
from .ratemodel import Allocation, evaluate
from .scenario import Scenario

SHRINK = 5.0
UNIT_DOMAIN = (0.0, 1.0)
MAX_STRONG_SHARE = 0.5


@dataclass(frozen=True)
class GridSpec:
    points_per_power_axis: int = 64
    points_per_time_axis: int = 64
    refinement_rounds: int = 3

    def __post_init__(self) -> None:
        if min(self.points_per_power_axis, self.points_per_time_axis, self.refinement_rounds) < 2:
            raise ValueError("grid sizes and refinement rounds must all be >= 2")


@dataclass
class OracleResult:
    allocation: Allocation
    min_rate: float
    rounds: list[float] = field(default_factory=list)


def _zoom(domain: tuple[float, float], centre: float, width: float, n: int) -> tuple[np.ndarray, float]:
    lo_d, hi_d = domain
    width = min(width, hi_d - lo_d)
    lo = min(max(centre - width / 2.0, lo_d), hi_d - width)
    return np.linspace(lo, lo + width, n), width


def _allocation(scenario: Scenario, C: int, strong, share: float, tau: float) -> Allocation:
    Pmax, T = scenario.params.max_power, scenario.params.total_time
    powers = [share * Pmax, (1.0 - share) * Pmax][:C]
    times = [tau * T, (1.0 - tau) * T][:C]
    amps = [(np.sqrt(x * P), np.sqrt((1.0 - x) * P)) for x, P in zip(strong, powers)]
    return Allocation.from_arrays(amps, times)


def _coordinates(scenario: Scenario, C: int, alloc: Allocation) -> tuple[list[float], float, float]:
    """Inverse of :func:`_allocation`: log strong shares, cluster-0 power share, cluster-0 time share."""
    p2 = [np.asarray(row) ** 2 for row in alloc.amplitudes]
    tot = [float(r.sum()) for r in p2]
    logs = [float(np.log(max(r[0] / t, 1e-300))) if t > 0 else 0.0 for r, t in zip(p2, tot)]
    share = tot[0] / sum(tot) if C == 2 and sum(tot) > 0 else 1.0
    tau = alloc.times[0] / scenario.params.total_time if C == 2 else 1.0
    return logs, share, tau


def grid_maxmin(
    scenario: Scenario,
    clusters: ClusterAssignment,
    spec: GridSpec = GridSpec(),
    kernel: str | None = None,
    progress=None,
    incumbent: Allocation | None = None,
) -> OracleResult:
    """Best grid allocation and its min rate (as scored by :func:`ratemodel.evaluate`).

    ``progress`` is called with ``(round, incumbent)`` after each round.  An
    ``incumbent`` (e.g. from a coarser grid) is kept unless the grid beats it,
    and the zoom centres on it.
    """
    C = clusters.num_clusters
    if C > 2 or scenario.params.num_users > 4:
        raise UnsupportedConfigurationError("the grid oracle handles at most K=4, C=2")
    search = kernels.get_kernel(kernel)
    idx = np.asarray(clusters.clusters)
    h = scenario.gains[idx]
    n = scenario.noise_vars[idx]
    args = [np.ascontiguousarray(a, dtype=float) for a in (h[:, 0], h[:, 1], n[:, 0], n[:, 1])]
    Pmax, T = scenario.params.max_power, scenario.params.total_time
    npow, ntime = spec.points_per_power_axis, spec.points_per_time_axis

    snr = Pmax * float(h.max()) / float(n.min())
    log_domain = (np.log(1e-3 / (1.0 + snr)), np.log(MAX_STRONG_SHARE))
    f_width = [log_domain[1] - log_domain[0]] * C
    s_width = t_width = 1.0
    centre_f = [0.5 * sum(log_domain)] * C
    centre_s = centre_t = 0.5
    best_val, best_alloc = -np.inf, None
    if incumbent is not None:
        best_alloc = incumbent
        best_val = evaluate(scenario, clusters, incumbent).min_rate
        logs, centre_s, centre_t = _coordinates(scenario, C, incumbent)
        centre_f = [min(max(v, log_domain[0]), log_domain[1]) for v in logs]
    rounds: list[float] = []

    for r in range(spec.refinement_rounds + 1):
        f_axes = []
        for c in range(C):
            axis, f_width[c] = _zoom(log_domain, centre_f[c], f_width[c], npow)
            f_axes.append(axis)
        strong_axes = np.exp(np.asarray(f_axes))
        if C == 2:
            s_axis, s_width = _zoom(UNIT_DOMAIN, centre_s, s_width, npow)
            t_axis, t_width = _zoom(UNIT_DOMAIN, centre_t, t_width, ntime)
        else:
            s_axis = t_axis = np.ones(1)
        val, arg = search(*args, Pmax, T, strong_axes, s_axis, t_axis)
        logs = [f_axes[c][arg[c]] for c in range(C)]
        share = s_axis[arg[2]] if C == 2 else 1.0
        tau = t_axis[arg[3]] if C == 2 else 1.0
        if val > best_val:
            best_val = val
            best_alloc = _allocation(scenario, C, np.exp(logs), share, tau)
            centre_f, centre_s, centre_t = logs, share, tau
        rounds.append(best_val)
        if progress is not None:
            progress(r, best_val)
        f_width = [w / SHRINK for w in f_width]
        s_width /= SHRINK
        t_width /= SHRINK

    report = evaluate(scenario, clusters, best_alloc)
    return OracleResult(best_alloc, report.min_rate, rounds)


def grid_convergence(
    scenario: Scenario,
    clusters: ClusterAssignment,
    sizes=(8, 16, 32, 64),
    refinement_rounds: int = 3,
    kernel: str | None = None,
) -> list[OracleResult]:
    """Grid optimum for each size, each grid seeded with the previous incumbent.

    Seeding makes the sequence nondecreasing in the grid size.
    """
    out: list[OracleResult] = []
    prev = None
    for n in sizes:
        res = grid_maxmin(scenario, clusters, GridSpec(n, n, refinement_rounds), kernel, incumbent=prev)
        out.append(res)
        prev = res.allocation
    return out
