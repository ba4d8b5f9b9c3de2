"""Exact SINR, rate and feasibility evaluation for a hybrid TDMA-NOMA allocation.

Within a cluster users are ordered strong to weak (index 0 is the strongest).
The message of user ``d`` is decoded by its own receiver and, during SIC, by
every stronger receiver ``m < d``; the signals of users ``s < d`` (stronger
users, which carry less power) remain as interference.  All indices here are
zero-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grouping import ClusterAssignment
from .scenario import Scenario

TOL_TIME = 1e-6
TOL_POWER = 1e-6
TOL_SIC = 1e-8


@dataclass(frozen=True)
class Allocation:
    """Amplitudes ``p`` (transmit power is ``p**2``) per cluster and slot times.

    ``amplitudes[i][j]`` belongs to user ``j`` (strong first) of cluster ``i``.
    """

    amplitudes: tuple[tuple[float, ...], ...]
    times: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.amplitudes) != len(self.times):
            raise ValueError("one time slot per cluster is required")
        for row in self.amplitudes:
            if any(not np.isfinite(a) or a < 0 for a in row):
                raise ValueError(f"amplitudes must be finite and nonnegative, got {row}")
        if any(not np.isfinite(t) or t < 0 for t in self.times):
            raise ValueError(f"times must be finite and nonnegative, got {self.times}")

    @classmethod
    def from_arrays(cls, amplitudes: Sequence[Sequence[float]], times: Sequence[float]) -> "Allocation":
        return cls(
            tuple(tuple(float(a) for a in row) for row in amplitudes),
            tuple(float(t) for t in times),
        )

    @property
    def powers(self) -> list[np.ndarray]:
        return [np.asarray(row) ** 2 for row in self.amplitudes]

    @property
    def total_power(self) -> float:
        return float(sum(np.sum(p) for p in self.powers))

    def flat_amplitudes(self) -> list[float]:
        return [a for row in self.amplitudes for a in row]


@dataclass(frozen=True)
class RateReport:
    sinr: tuple[tuple[float, ...], ...]
    rates: tuple[tuple[float, ...], ...]
    min_rate: float
    sum_rate: float

    def flat_rates(self) -> list[float]:
        return [r for row in self.rates for r in row]


@dataclass(frozen=True)
class Violation:
    constraint: str
    slack: float
    indices: tuple[int, ...] = ()

    def __str__(self) -> str:
        where = f" at {self.indices}" if self.indices else ""
        return f"{self.constraint}{where}: slack {self.slack:.3e}"


def decode_sinr(
    cluster_gains: Sequence[float],
    noise_vars: Sequence[float],
    amplitudes: Sequence[float],
    receiver: int,
    message: int,
) -> float:
    """SINR at which ``receiver`` decodes the message meant for user ``message``."""
    if receiver > message:
        raise ValueError(
            f"receiver {receiver} is weaker than message owner {message}; "
            "only stronger receivers decode another user's message"
        )
    h = float(cluster_gains[receiver])
    p2 = np.asarray(amplitudes, dtype=float) ** 2
    interference = h * float(np.sum(p2[:message]))
    return h * float(p2[message]) / (interference + float(noise_vars[receiver]))


def effective_sinr(
    cluster_gains: Sequence[float],
    noise_vars: Sequence[float],
    amplitudes: Sequence[float],
    user: int,
) -> float:
    """Worst decoding SINR of ``user``'s message over its own and all stronger receivers."""
    return min(
        decode_sinr(cluster_gains, noise_vars, amplitudes, m, user) for m in range(user + 1)
    )


def rate(
    cluster_gains: Sequence[float],
    noise_vars: Sequence[float],
    amplitudes: Sequence[float],
    time: float,
    user: int,
) -> float:
    if time < 0:
        raise ValueError("slot time must be nonnegative")
    if time == 0:
        return 0.0
    return time * float(np.log2(1.0 + effective_sinr(cluster_gains, noise_vars, amplitudes, user)))


def evaluate(scenario: Scenario, clusters: ClusterAssignment, allocation: Allocation) -> RateReport:
    """Per-user effective SINR and rate, plus the max-min objective and the sum."""
    if len(allocation.amplitudes) != clusters.num_clusters:
        raise ValueError("allocation and cluster assignment disagree on C")
    gains, noise = scenario.gains, scenario.noise_vars
    sinrs, rates = [], []
    for members, amps, t in zip(clusters.clusters, allocation.amplitudes, allocation.times):
        if len(amps) != len(members):
            raise ValueError("amplitude count differs from cluster size")
        g = gains[list(members)]
        s = noise[list(members)]
        row_sinr = tuple(effective_sinr(g, s, amps, j) for j in range(len(members)))
        sinrs.append(row_sinr)
        rates.append(tuple(t * float(np.log2(1.0 + x)) for x in row_sinr))
    flat = [r for row in rates for r in row]
    return RateReport(tuple(sinrs), tuple(rates), float(min(flat)), float(sum(flat)))


def check_feasibility(
    scenario: Scenario,
    allocation: Allocation,
    tol_time: float = TOL_TIME,
    tol_power: float = TOL_POWER,
    tol_sic: float = TOL_SIC,
) -> list[Violation]:
    """Time budget, power budget and SIC power ordering; empty list means feasible."""
    out: list[Violation] = []
    T = scenario.params.total_time
    Pmax = scenario.params.max_power
    slack_t = T - float(sum(allocation.times))
    if slack_t < -tol_time:
        out.append(Violation("time_budget", slack_t))
    slack_p = Pmax - allocation.total_power
    if slack_p < -tol_power:
        out.append(Violation("power_budget", slack_p))
    for i, p2 in enumerate(allocation.powers):
        # weaker users (higher index) must carry at least as much power
        for j in range(len(p2) - 1):
            slack = float(p2[j + 1] - p2[j])
            if slack < -tol_sic:
                out.append(Violation("sic_ordering", slack, (i, j, j + 1)))
    return out
