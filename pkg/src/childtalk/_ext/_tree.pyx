# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled split search; same contract as kernels._py_tree.best_splits."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def best_splits(double[:, ::1] X, cnp.int64_t[:, ::1] order, double[::1] resid,
                cnp.int64_t[::1] node_of, Py_ssize_t n_nodes, cnp.int64_t[::1] feat_perm,
                double[::1] node_sum, double[::1] node_cnt):
    cdef Py_ssize_t N = X.shape[0], p = X.shape[1]
    cdef Py_ssize_t jj, j, pos, row, k
    cdef double x, sl, nl, n, tot, g
    best_f_arr = np.full(n_nodes, -1, dtype=np.int64)
    best_t_arr = np.zeros(n_nodes)
    best_g_arr = np.full(n_nodes, -INFINITY)
    left_sum_arr = np.zeros(n_nodes)
    left_cnt_arr = np.zeros(n_nodes)
    last_x_arr = np.zeros(n_nodes)
    cdef cnp.int64_t[::1] best_f = best_f_arr
    cdef double[::1] best_t = best_t_arr
    cdef double[::1] best_g = best_g_arr
    cdef double[::1] left_sum = left_sum_arr
    cdef double[::1] left_cnt = left_cnt_arr
    cdef double[::1] last_x = last_x_arr

    for jj in range(p):
        j = feat_perm[jj]
        for k in range(n_nodes):
            left_sum[k] = 0.0
            left_cnt[k] = 0.0
        for pos in range(N):
            row = order[j, pos]
            k = node_of[row]
            if k < 0:
                continue
            n = node_cnt[k]
            x = X[row, j]
            if left_cnt[k] > 0.0 and x > last_x[k]:
                sl = left_sum[k]
                nl = left_cnt[k]
                tot = node_sum[k]
                g = sl * sl / nl + (tot - sl) * (tot - sl) / (n - nl) - tot * tot / n
                if g > best_g[k]:
                    best_g[k] = g
                    best_f[k] = j
                    best_t[k] = 0.5 * (last_x[k] + x)
            left_sum[k] += resid[row]
            left_cnt[k] += 1.0
            last_x[k] = x
    for k in range(n_nodes):
        if best_f[k] < 0:
            best_g[k] = 0.0
    return best_f_arr, best_t_arr, best_g_arr
