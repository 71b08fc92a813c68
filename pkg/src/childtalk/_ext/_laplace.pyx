# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-group Newton solve; same contract as kernels._py_laplace.laplace_mode."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs

cnp.import_array()


cdef inline double _expit(double z) nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef void _group_sums(cnp.int64_t[::1] y, double[::1] eta, double[::1] theta_ext,
                      cnp.int64_t[::1] idx, Py_ssize_t lo, Py_ssize_t hi, double u,
                      double* s0, double* s1, double* s2) noexcept nogil:
    cdef Py_ssize_t t, i
    cdef double a, b, Fa, Fca, Fb, Fcb, fa, fb, f1a, f1b, G, Gu, Guu, lu
    s0[0] = 0.0
    s1[0] = 0.0
    s2[0] = 0.0
    for t in range(lo, hi):
        i = idx[t]
        a = theta_ext[y[i] + 1] - eta[i] - u
        b = theta_ext[y[i]] - eta[i] - u
        Fa = _expit(a)
        Fca = _expit(-a)
        Fb = _expit(b)
        Fcb = _expit(-b)
        fa = Fa * Fca
        fb = Fb * Fcb
        f1a = fa * (Fca - Fa)
        f1b = fb * (Fcb - Fb)
        if a + b > 0:
            G = Fcb - Fca
        else:
            G = Fa - Fb
        if G < 1e-300:
            G = 1e-300
        Gu = -(fa - fb)
        Guu = f1a - f1b
        lu = Gu / G
        s0[0] += log(G)
        s1[0] += lu
        s2[0] += Guu / G - lu * lu


def laplace_mode(cnp.int64_t[::1] y, double[::1] eta, double[::1] theta_ext,
                 cnp.int64_t[::1] group, Py_ssize_t n_groups, double sigma2, u0,
                 double tol=1e-10, int maxiter=100):
    cdef Py_ssize_t n = y.shape[0], g, lo, hi, it, ls
    cdef double inv = 1.0 / sigma2
    cdef double u, h, hu, huu, step, scale, trial, ht, s0, s1, s2
    idx_arr = np.argsort(np.asarray(group), kind="stable").astype(np.int64)
    starts_arr = np.searchsorted(np.asarray(group)[idx_arr], np.arange(n_groups + 1)).astype(np.int64)
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef cnp.int64_t[::1] starts = starts_arr
    out_arr = np.array(u0, dtype=float, copy=True)
    cdef double[::1] out = out_arr
    with nogil:
        for g in range(n_groups):
            lo = starts[g]
            hi = starts[g + 1]
            u = out[g]
            _group_sums(y, eta, theta_ext, idx, lo, hi, u, &s0, &s1, &s2)
            h = s0 - 0.5 * u * u * inv
            hu = s1 - u * inv
            huu = s2 - inv
            for it in range(maxiter):
                step = -hu / huu
                if fabs(step) <= tol:
                    break
                scale = 1.0
                for ls in range(40):
                    trial = u + scale * step
                    _group_sums(y, eta, theta_ext, idx, lo, hi, trial, &s0, &s1, &s2)
                    ht = s0 - 0.5 * trial * trial * inv
                    if ht >= h - 1e-12 * (1.0 + fabs(h)):
                        break
                    scale *= 0.5
                u = trial
                h = ht
                hu = s1 - trial * inv
                huu = s2 - inv
            out[g] = u
    return out_arr
