import numpy as np
import pytest

from childtalk import kernels


def test_backend_names():
    assert kernels.BACKEND in kernels.available()
    assert "python" in kernels.available()
    with pytest.raises(ValueError):
        kernels.get("fortran")


def _split_inputs(seed, n=80, p=5):
    rng = np.random.default_rng(seed)
    X = np.round(rng.normal(size=(n, p)), 1)            # ties on purpose
    resid = rng.normal(size=n)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))
    node_of = rng.integers(-1, 3, n).astype(np.int64)
    act = node_of >= 0
    sums = np.bincount(node_of[act], resid[act], 3)
    cnts = np.bincount(node_of[act], minlength=3).astype(float)
    perm = rng.permutation(p).astype(np.int64)
    return X, order, resid, node_of, 3, perm, sums, cnts


def _brute_splits(X, resid, node_of, n_nodes, perm):
    out = []
    for k in range(n_nodes):
        rows = np.flatnonzero(node_of == k)
        r = resid[rows]
        best = (0.0, -1, 0.0)
        for j in perm:
            x = X[rows, j]
            for t in sorted(set((a + b) / 2 for a, b in zip(np.unique(x)[:-1], np.unique(x)[1:]))):
                left = x <= t
                g = (r[left].sum() ** 2 / left.sum() + r[~left].sum() ** 2 / (~left).sum()
                     - r.sum() ** 2 / len(r))
                if g > best[0] + 1e-12:
                    best = (g, j, t)
        out.append(best)
    return out


@pytest.mark.parametrize("backend", kernels.available())
@pytest.mark.parametrize("seed", range(5))
def test_best_splits_brute_force(backend, seed):
    args = _split_inputs(seed)
    f, t, g = kernels.get(backend).best_splits(*args)
    X, _, resid, node_of, n_nodes, perm, _, _ = args
    for k, (bg, bf, bt) in enumerate(_brute_splits(X, resid, node_of, n_nodes, perm)):
        assert g[k] == pytest.approx(bg, abs=1e-9)
        assert f[k] == bf and t[k] == pytest.approx(bt)


@pytest.mark.skipif("compiled" not in kernels.available(), reason="extension not built")
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree(seed):
    args = _split_inputs(seed)
    a = kernels.get("python").best_splits(*args)
    b = kernels.get("compiled").best_splits(*args)
    for x, y in zip(a, b):
        assert np.allclose(x, y, atol=1e-10)

    rng = np.random.default_rng(seed)
    n, G = 300, 30
    group = rng.integers(0, G, n).astype(np.int64)
    y = rng.integers(0, 4, n).astype(np.int64)
    eta = rng.normal(size=n)
    theta_ext = np.array([-np.inf, -1.0, 0.2, 1.5, np.inf])
    u0 = np.zeros(G)
    ua = kernels.get("python").laplace_mode(y, eta, theta_ext, group, G, 0.8, u0)
    ub = kernels.get("compiled").laplace_mode(y, eta, theta_ext, group, G, 0.8, u0)
    assert np.allclose(ua, ub, atol=1e-8)


@pytest.mark.parametrize("backend", kernels.available())
def test_laplace_mode_is_stationary(backend):
    rng = np.random.default_rng(3)
    n, G = 200, 10
    group = rng.integers(0, G, n).astype(np.int64)
    y = rng.integers(0, 3, n).astype(np.int64)
    eta = rng.normal(size=n)
    theta_ext = np.array([-np.inf, -0.5, 0.7, np.inf])
    s2 = 1.3
    u = kernels.get(backend).laplace_mode(y, eta, theta_ext, group, G, s2, np.zeros(G))
    _, lu, _, _ = kernels.obs_terms(y, eta, theta_ext, u[group])
    grad = np.bincount(group, lu, G) - u / s2
    assert np.max(np.abs(grad)) < 1e-7
