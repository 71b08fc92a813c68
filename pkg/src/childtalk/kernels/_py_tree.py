"""Numpy split search for one level of a regression tree."""
from __future__ import annotations

import numpy as np


def best_splits(X, order, resid, node_of, n_nodes, feat_perm, node_sum, node_cnt):
    """Best variance-reduction split for every active node at one tree level.

    ``order[j]`` lists row indices sorted by feature j. Rows with
    ``node_of == -1`` are ignored. Candidate thresholds are midpoints between
    consecutive distinct values inside a node. Among equal gains the earlier
    feature in ``feat_perm`` wins, then the smaller threshold.

    Returns (feature, threshold, gain) arrays of length ``n_nodes``; feature is
    -1 where no split exists.
    """
    p = X.shape[1]
    best_f = np.full(n_nodes, -1, dtype=np.int64)
    best_t = np.zeros(n_nodes)
    best_g = np.zeros(n_nodes)
    order = np.asarray(order)[np.asarray(feat_perm)]
    for k in range(n_nodes):
        n = int(node_cnt[k])
        if n < 2:
            continue
        member = node_of == k
        m = member[order]                                   # (p, N)
        rows = order[m].reshape(p, n)                       # members sorted per feature
        xs = X[rows, np.asarray(feat_perm)[:, None]]        # (p, n)
        sl = np.cumsum(resid[rows], axis=1)[:, :-1]         # left sums for split after position i
        nl = np.arange(1, n, dtype=float)
        total = node_sum[k]
        gain = sl * sl / nl + (total - sl) ** 2 / (n - nl) - total * total / n
        valid = xs[:, 1:] > xs[:, :-1]
        gain = np.where(valid, gain, -np.inf)
        flat = int(np.argmax(gain))
        g = gain.flat[flat]
        if not np.isfinite(g):
            continue
        jj, i = divmod(flat, n - 1)
        best_f[k] = feat_perm[jj]
        best_t[k] = 0.5 * (xs[jj, i] + xs[jj, i + 1])
        best_g[k] = g
    return best_f, best_t, best_g
