"""Vectorised max-min grid evaluation; reference for the compiled kernel.

Per cluster with power ``P`` and strong-user share ``x`` the strong user
gets ``x P`` and the weak user ``(1 - x) P``.  The weak message must be
decodable both at the strong receiver (SIC) and at its own.
"""

from __future__ import annotations

import numpy as np


def cluster_se(hs, hw, ns, nw, power, share):
    """Per-unit-time max-min rate of a 2-user cluster (bit/s/Hz)."""
    ps = share * power
    pw = (1.0 - share) * power
    strong = np.log2(1.0 + hs * ps / ns)
    weak_sinr = np.minimum(hs * pw / (hs * ps + ns), hw * pw / (hw * ps + nw))
    return np.minimum(strong, np.log2(1.0 + weak_sinr))


def maxmin_grid(h_strong, h_weak, n_strong, n_weak, pmax, total_time,
                strong_axes, share_axis, time_axis):
    C = len(h_strong)
    if C == 1:
        vals = total_time * cluster_se(h_strong[0], h_weak[0], n_strong[0], n_weak[0],
                                       pmax, strong_axes[0])
        i1 = int(np.argmax(vals))
        return float(vals[i1]), (i1,)

    tau = np.asarray(time_axis)[None, None, :]
    best, arg = -1.0, (0, 0, 0, 0)
    for i_s, s in enumerate(share_axis):
        m1 = cluster_se(h_strong[0], h_weak[0], n_strong[0], n_weak[0], s * pmax, strong_axes[0])
        m2 = cluster_se(h_strong[1], h_weak[1], n_strong[1], n_weak[1], (1.0 - s) * pmax, strong_axes[1])
        vals = np.minimum(tau * total_time * m1[:, None, None],
                          (1.0 - tau) * total_time * m2[None, :, None])
        k = int(np.argmax(vals))
        if vals.flat[k] > best:
            best = float(vals.flat[k])
            i1, i2, it = np.unravel_index(k, vals.shape)
            arg = (int(i1), int(i2), i_s, int(it))
    return best, arg
