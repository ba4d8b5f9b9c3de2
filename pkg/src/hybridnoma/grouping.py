"""Pairing users into two-user NOMA clusters by channel strength."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import ChannelRealization


class UnsupportedConfigurationError(ValueError):
    """The requested cluster structure is not handled by this code path."""


@dataclass(frozen=True)
class ClusterAssignment:
    """``clusters[i] == (strong_user, weak_user)`` as indices into the gain vector."""

    clusters: tuple[tuple[int, int], ...]

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)

    def cluster_gains(self, gains: np.ndarray) -> np.ndarray:
        """Gains arranged as a ``(C, 2)`` array, strong user first."""
        return np.asarray(gains, dtype=float)[np.asarray(self.clusters)]

    def flat_order(self) -> list[int]:
        return [k for pair in self.clusters for k in pair]


def strength_order(gains: Sequence[float]) -> list[int]:
    """User indices by descending gain; equal gains keep ascending index."""
    return sorted(range(len(gains)), key=lambda k: (-gains[k], k))


def group_users(
    channels: ChannelRealization | Sequence[float], mode: str = "paired"
) -> ClusterAssignment:
    """Cluster ``K`` users into ``K/2`` pairs.

    ``paired`` (the default) matches the i-th strongest user with the i-th
    weakest, which maximises the in-cluster gain gap that SIC relies on.
    ``adjacent`` pairs consecutive users in strength order and exists only
    as a comparison point.
    """
    gains = list(channels.gains if isinstance(channels, ChannelRealization) else channels)
    K = len(gains)
    if K == 0 or K % 2:
        raise UnsupportedConfigurationError(f"pairing needs an even, positive K; got K={K}")
    order = strength_order(gains)
    if mode == "paired":
        pairs = [(order[i], order[K - 1 - i]) for i in range(K // 2)]
    elif mode == "adjacent":
        pairs = [(order[2 * i], order[2 * i + 1]) for i in range(K // 2)]
    else:
        raise ValueError(f"unknown grouping mode {mode!r}")
    return ClusterAssignment(tuple(pairs))
