# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled exhaustive max-min grid evaluation (see ``_grid_numpy`` for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log2

cnp.import_array()


cdef inline double _cluster_se(double hs, double hw, double ns, double nw,
                               double power, double share) nogil:
    cdef double ps = share * power
    cdef double pw = (1.0 - share) * power
    cdef double strong = log2(1.0 + hs * ps / ns)
    cdef double at_strong = hs * pw / (hs * ps + ns)
    cdef double at_weak = hw * pw / (hw * ps + nw)
    cdef double weak = log2(1.0 + (at_strong if at_strong < at_weak else at_weak))
    return strong if strong < weak else weak


def maxmin_grid(double[::1] h_strong, double[::1] h_weak,
                double[::1] n_strong, double[::1] n_weak,
                double pmax, double total_time,
                double[:, ::1] strong_axes, double[::1] share_axis, double[::1] time_axis):
    cdef Py_ssize_t C = h_strong.shape[0]
    cdef Py_ssize_t nf1 = strong_axes.shape[1]
    cdef Py_ssize_t ns = share_axis.shape[0]
    cdef Py_ssize_t nt = time_axis.shape[0]
    cdef Py_ssize_t i_s, i1, i2, it, nf2
    cdef double best = -1.0, val, r1, r2, s, tau
    cdef Py_ssize_t b_s = 0, b1 = 0, b2 = 0, b_t = 0
    cdef double[::1] m1 = np.empty(nf1)
    cdef double[::1] m2

    if C == 1:
        for i1 in range(nf1):
            val = total_time * _cluster_se(h_strong[0], h_weak[0], n_strong[0], n_weak[0],
                                           pmax, strong_axes[0, i1])
            if val > best:
                best = val
                b1 = i1
        return best, (b1,)

    nf2 = strong_axes.shape[1]
    m2 = np.empty(nf2)
    with nogil:
        for i_s in range(ns):
            s = share_axis[i_s]
            for i1 in range(nf1):
                m1[i1] = _cluster_se(h_strong[0], h_weak[0], n_strong[0], n_weak[0],
                                     s * pmax, strong_axes[0, i1])
            for i2 in range(nf2):
                m2[i2] = _cluster_se(h_strong[1], h_weak[1], n_strong[1], n_weak[1],
                                     (1.0 - s) * pmax, strong_axes[1, i2])
            for i1 in range(nf1):
                for i2 in range(nf2):
                    for it in range(nt):
                        tau = time_axis[it]
                        r1 = tau * total_time * m1[i1]
                        r2 = (1.0 - tau) * total_time * m2[i2]
                        val = r1 if r1 < r2 else r2
                        if val > best:
                            best = val
                            b_s = i_s
                            b1 = i1
                            b2 = i2
                            b_t = it
    return best, (b1, b2, b_s, b_t)
