"""Convex inner approximation of the max-min problem around an expansion point.

Decision variables per cluster ``c`` (users ``0`` strong, ``1`` weak):

``p[c,j]``      amplitude of user ``j`` (power ``p**2``)
``t[c]``        slot duration (omitted when slots are fixed)
``a[c,d]``      ``alpha / alpha0``; ``alpha = 1 + SINR`` of message ``d``
``theta[c,d]``  achievable spectral efficiency of message ``d`` (bit/s/Hz)
``e[c,m,d]``    ``eta / eta0``; ``eta`` bounds ``sqrt(interference + noise)``
                of message ``d`` seen at receiver ``m <= d``
``g``           square root of the common rate ``gamma``; maximised

The ``alpha`` and ``eta`` slacks are carried relative to their value at the
expansion point.  Their natural magnitudes span roughly 1e-7 to 1e11, which
an interior-point solver cannot handle unscaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .conic import ConicProgram, ProgramBuilder
from .grouping import ClusterAssignment, UnsupportedConfigurationError
from .ratemodel import Allocation
from .scenario import Scenario

LN2 = math.log(2.0)
NUM_TANGENT_CUTS = 17


def receiver_message_pairs(size: int = 2) -> list[tuple[int, int]]:
    return [(m, d) for d in range(size) for m in range(d + 1)]


@dataclass(frozen=True)
class ExpansionPoint:
    """Taylor point: amplitudes ``p`` (C, 2), ``eta`` (C, 2, 2) used for ``m <= d``, ``alpha`` (C, 2)."""

    p: np.ndarray
    eta: np.ndarray
    alpha: np.ndarray

    def __post_init__(self) -> None:
        C = self.p.shape[0]
        if self.p.shape != (C, 2) or self.alpha.shape != (C, 2) or self.eta.shape != (C, 2, 2):
            raise UnsupportedConfigurationError("expansion point must describe 2-user clusters")
        used_eta = np.array([self.eta[:, m, d] for m, d in receiver_message_pairs()])
        for name, arr in (("p", self.p), ("eta", used_eta), ("alpha", self.alpha)):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"expansion point entries of {name} must be strictly positive")

    def perturbed(self, factor: float = 1.0 + 1e-6) -> "ExpansionPoint":
        return ExpansionPoint(self.p.copy(), self.eta * factor, self.alpha * factor)


def _cluster_arrays(scenario: Scenario, clusters: ClusterAssignment) -> tuple[np.ndarray, np.ndarray]:
    for pair in clusters.clusters:
        if len(pair) != 2:
            raise UnsupportedConfigurationError("only two-user clusters are supported")
    idx = np.asarray(clusters.clusters)
    return scenario.gains[idx], scenario.noise_vars[idx]


def point_from_amplitudes(scenario: Scenario, clusters: ClusterAssignment, p: np.ndarray) -> ExpansionPoint:
    """Expansion point whose slacks sit exactly on their defining constraints at ``p``.

    ``eta`` is the interference-plus-noise norm and ``alpha`` is one plus the
    weakest decoding SINR of each message.
    """
    h, s2 = _cluster_arrays(scenario, clusters)
    p = np.asarray(p, dtype=float)
    C = p.shape[0]
    eta = np.ones((C, 2, 2))
    alpha = np.ones((C, 2))
    p2 = p ** 2
    for c in range(C):
        for d in range(2):
            sinrs = []
            for m in range(d + 1):
                eta[c, m, d] = math.sqrt(h[c, m] * p2[c, :d].sum() + s2[c, m])
                sinrs.append(h[c, m] * p2[c, d] / eta[c, m, d] ** 2)
            alpha[c, d] = 1.0 + min(sinrs)
    return ExpansionPoint(p.copy(), eta, alpha)


def initial_point(scenario: Scenario, clusters: ClusterAssignment, seed: int = 0) -> ExpansionPoint:
    """Random SIC-ordered amplitudes using 90% of the power budget."""
    rng = np.random.default_rng(seed)
    C = clusters.num_clusters
    power = np.sort(rng.uniform(0.05, 1.0, size=(C, 2)), axis=1)
    power *= 0.9 * scenario.params.max_power / power.sum()
    return point_from_amplitudes(scenario, clusters, np.sqrt(power))


@dataclass(frozen=True)
class VariableLayout:
    names: tuple[str, ...]
    p: np.ndarray
    t: np.ndarray | None
    g: int
    a: np.ndarray
    theta: np.ndarray
    e: dict[tuple[int, int, int], int]
    point: ExpansionPoint
    fixed_times: np.ndarray | None

    @property
    def num_vars(self) -> int:
        return len(self.names)


def default_cut_points(scenario: Scenario) -> np.ndarray:
    """17 tangent points over ``[0, log2(1 + Pmax * max gain / noise)]``."""
    snr = scenario.params.max_power * scenario.gains.max() / scenario.noise_vars.min()
    return np.linspace(0.0, math.log2(1.0 + snr), NUM_TANGENT_CUTS)


def build_subproblem(
    scenario: Scenario,
    clusters: ClusterAssignment,
    point: ExpansionPoint,
    fixed_times: Sequence[float] | None = None,
    cuts: Mapping[tuple[int, int], Sequence[float]] | None = None,
) -> tuple[ConicProgram, VariableLayout]:
    """Assemble the convexified problem around ``point``.

    With ``fixed_times`` the slot durations are constants (equal-time
    baseline).  With ``cuts`` the exponential cone ``alpha >= 2**theta`` is
    replaced by tangent planes at the given ``theta`` values per ``(c, d)``.
    """
    h, s2 = _cluster_arrays(scenario, clusters)
    C = clusters.num_clusters
    if point.p.shape[0] != C:
        raise ValueError("expansion point and cluster assignment disagree on C")
    T = scenario.params.total_time
    Pmax = scenario.params.max_power
    pairs = receiver_message_pairs()

    b = ProgramBuilder()
    p_idx = np.array([[b.var(f"p[{c},{j}]") for j in range(2)] for c in range(C)])
    t_idx = None
    if fixed_times is None:
        t_idx = np.array([b.var(f"t[{c}]") for c in range(C)])
    else:
        fixed_times = np.asarray(fixed_times, dtype=float)
        if fixed_times.shape != (C,) or np.any(fixed_times < 0):
            raise ValueError("fixed_times must be C nonnegative durations")
    g = b.var("g")
    a_idx = np.array([[b.var(f"a[{c},{d}]") for d in range(2)] for c in range(C)])
    th_idx = np.array([[b.var(f"theta[{c},{d}]") for d in range(2)] for c in range(C)])
    e_idx = {(c, m, d): b.var(f"e[{c},{m},{d}]") for c in range(C) for m, d in pairs}

    p0, eta0, alpha0 = point.p, point.eta, point.alpha

    if t_idx is not None:
        b.block("nonneg", "time_budget", [({int(i): -1.0 for i in t_idx}, T)])

    b.block("soc", "power_budget",
            [({}, math.sqrt(Pmax))] + [({int(i): 1.0}, 0.0) for i in p_idx.ravel()])

    for c in range(C):
        # linearised weak-user power bounds the strong-user power from above
        pw = p0[c, 1]
        b.block("rsoc", f"sic[{c}]", [
            ({int(p_idx[c, 1]): 2.0 * pw}, -pw * pw),
            ({}, 1.0),
            ({int(p_idx[c, 0]): 1.0}, 0.0),
        ])

    for c in range(C):
        for m, d in pairs:
            e0 = eta0[c, m, d]
            rows = [({e_idx[c, m, d]: 1.0}, 0.0)]
            rows += [({int(p_idx[c, s]): math.sqrt(h[c, m]) / e0}, 0.0) for s in range(d)]
            rows.append(({}, math.sqrt(s2[c, m]) / e0))
            b.block("soc", f"interference[{c},{m},{d}]", rows)

    for c in range(C):
        for m, d in pairs:
            e0, al0, pd0 = eta0[c, m, d], alpha0[c, d], p0[c, d]
            k = h[c, m] * pd0 / (e0 * e0 * al0)
            r = (al0 - 1.0) / al0
            b.block("nonneg", f"taylor[{c},{m},{d}]", [(
                {int(p_idx[c, d]): 2.0 * k, e_idx[c, m, d]: -2.0 * r, int(a_idx[c, d]): -1.0},
                -k * pd0 + r + 1.0,
            )])

    for c in range(C):
        for d in range(2):
            log_a0 = math.log(alpha0[c, d])
            th, a = int(th_idx[c, d]), int(a_idx[c, d])
            if cuts is None:
                b.block("exp", f"rate_exp[{c},{d}]", [({th: LN2}, -log_a0), ({}, 1.0), ({a: 1.0}, 0.0)])
            else:
                rows = []
                for tk in cuts[c, d]:
                    val = math.exp(LN2 * tk - log_a0)
                    # row scaled by 1/max(1, val) to keep coefficients O(1)
                    sc = 1.0 / max(1.0, val)
                    rows.append(({a: sc, th: -sc * val * LN2}, -sc * val * (1.0 - LN2 * tk)))
                b.block("nonneg", f"rate_cut[{c},{d}]", rows)

    for c in range(C):
        for d in range(2):
            t_row = ({int(t_idx[c]): 1.0}, 0.0) if t_idx is not None else ({}, float(fixed_times[c]))
            b.block("rsoc", f"rate_time[{c},{d}]", [t_row, ({int(th_idx[c, d]): 1.0}, 0.0), ({g: 1.0}, 0.0)])

    bounds = [({int(i): 1.0}, 0.0) for i in p_idx.ravel()]
    if t_idx is not None:
        bounds += [({int(i): 1.0}, 0.0) for i in t_idx]
    bounds.append(({g: 1.0}, 0.0))
    bounds += [({int(i): 1.0}, 0.0) for i in th_idx.ravel()]
    bounds += [({i: 1.0}, 0.0) for i in e_idx.values()]
    bounds += [({int(a_idx[c, d]): 1.0}, -1.0 / alpha0[c, d]) for c in range(C) for d in range(2)]
    b.block("nonneg", "bounds", bounds)

    program = b.build(objective=g)
    layout = VariableLayout(
        names=program.names, p=p_idx, t=t_idx, g=g, a=a_idx, theta=th_idx, e=e_idx,
        point=point, fixed_times=None if fixed_times is None else np.array(fixed_times),
    )
    return program, layout


@dataclass(frozen=True)
class SubproblemValues:
    allocation: Allocation
    gamma: float
    alpha: np.ndarray
    eta: np.ndarray
    theta: np.ndarray


def extract_allocation(x: np.ndarray, layout: VariableLayout) -> SubproblemValues:
    """Map a solution vector back to named quantities in natural units."""
    x = np.asarray(x, dtype=float)
    if x.shape != (layout.num_vars,):
        raise ValueError(f"solution has {x.size} entries, layout expects {layout.num_vars}")
    p = np.clip(x[layout.p], 0.0, None)
    t = layout.fixed_times if layout.t is None else np.clip(x[layout.t], 0.0, None)
    g = max(float(x[layout.g]), 0.0)
    alpha = layout.point.alpha * x[layout.a]
    eta = np.ones_like(layout.point.eta)
    for (c, m, d), i in layout.e.items():
        eta[c, m, d] = layout.point.eta[c, m, d] * x[i]
    return SubproblemValues(
        allocation=Allocation.from_arrays(p, t),
        gamma=g * g,
        alpha=alpha,
        eta=eta,
        theta=x[layout.theta].copy(),
    )


def pack_solution(
    layout: VariableLayout,
    allocation: Allocation,
    gamma: float,
    alpha: np.ndarray,
    eta: np.ndarray,
    theta: np.ndarray,
) -> np.ndarray:
    """Inverse of :func:`extract_allocation` (used to place known points in the variable space)."""
    x = np.zeros(layout.num_vars)
    x[layout.p] = np.asarray(allocation.amplitudes)
    if layout.t is not None:
        x[layout.t] = np.asarray(allocation.times)
    x[layout.g] = math.sqrt(gamma)
    x[layout.a] = np.asarray(alpha) / layout.point.alpha
    x[layout.theta] = theta
    for (c, m, d), i in layout.e.items():
        x[i] = eta[c, m, d] / layout.point.eta[c, m, d]
    return x


def point_vector(layout: VariableLayout, times: Sequence[float]) -> np.ndarray:
    """The expansion point itself as a candidate solution of its own subproblem.

    Slacks sit at their point values (``a = e = 1``), ``theta = log2(alpha0)``
    and ``g`` is the largest common rate the point supports with ``times``.
    """
    pt = layout.point
    times = np.asarray(times if layout.fixed_times is None else layout.fixed_times, dtype=float)
    theta = np.log2(pt.alpha)
    x = np.zeros(layout.num_vars)
    x[layout.p] = pt.p
    if layout.t is not None:
        x[layout.t] = times
    x[layout.a] = 1.0
    x[layout.theta] = theta
    for i in layout.e.values():
        x[i] = 1.0
    x[layout.g] = math.sqrt(max(float(np.min(times[:, None] * theta)), 0.0))
    return x
