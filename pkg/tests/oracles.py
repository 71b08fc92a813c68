"""Independent reference implementations used to check the package.

Each oracle takes a different computational route from the code under
test: brute-force enumeration, closed forms, exact expectations, or a
different optimizer and parametrization.
"""
from __future__ import annotations

import math
from collections import Counter
from itertools import combinations

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import expit

# --------------------------------------------------------------- corpus

ADULT_CODES = ("MOT", "FAT", "INV")
CONTENT_WORDS = ("dog", "ball", "red", "big", "go", "home", "cookie", "yes", "no", "park")
NOISE_BODIES = ("xxx .", "xxx yyy .", "www .", "&=laughs xxx .")


def random_session(rng, max_utts: int = 20):
    """A CHAT transcript plus the ground-truth item list it was built from.

    Items are ``(role, is_noise)`` with role "A" or "C". Headers and
    dependent tiers are sprinkled between speaker lines.
    """
    n = int(rng.integers(0, max_utts + 1))
    items = []
    lines = ["@Begin", "@ID:\teng|c|CHI|5;00.00|||||Target_Child|||"]
    for _ in range(n):
        child = rng.random() < 0.5
        noise = rng.random() < 0.2
        code = "CHI" if child else ADULT_CODES[rng.integers(len(ADULT_CODES))]
        if noise:
            body = NOISE_BODIES[rng.integers(len(NOISE_BODIES))]
        else:
            k = int(rng.integers(1, 5))
            words = [CONTENT_WORDS[i] for i in rng.integers(0, len(CONTENT_WORDS), k)]
            if rng.random() < 0.2:
                words[0] = words[0] + "_" + CONTENT_WORDS[rng.integers(len(CONTENT_WORDS))]
            body = " ".join(words) + " ."
        lines.append(f"*{code}:\t{body}")
        items.append(("C" if child else "A", noise))
        if rng.random() < 0.15:
            lines.append("%com:\tlooks around")
    lines.append("@End")
    return "\n".join(lines) + "\n", items


def brute_force_pairs(items) -> list[tuple[int, int]]:
    """All (i, j) with i an adult item, j a child item, both kept, and nothing kept between."""
    kept = [k for k, (_, noise) in enumerate(items) if not noise]
    out = []
    for i, j in combinations(range(len(items)), 2):
        if i not in kept or j not in kept:
            continue
        if items[i][0] != "A" or items[j][0] != "C":
            continue
        if any(i < k < j for k in kept):
            continue
        out.append((i, j))
    return out


# ------------------------------------------------------------ baselines

def vocd_curve_oracle(N, D):
    return D / N * (np.sqrt(1.0 + 2.0 * N / D) - 1.0)


def expected_ttr(tokens, N: int) -> float:
    """Exact expected TTR of an N-token sample drawn without replacement."""
    freqs = np.array(list(Counter(t.lower() for t in tokens).values()), dtype=float)
    T = len(tokens)
    total = 0.0
    for f in freqs:
        if T - f < N:
            total += 1.0
            continue
        # P(type absent) = C(T-f, N) / C(T, N)
        log_absent = (math.lgamma(T - f + 1) - math.lgamma(T - f - N + 1)
                      - math.lgamma(T + 1) + math.lgamma(T - N + 1))
        total += 1.0 - math.exp(log_absent)
    return total / N


def vocd_grid_oracle(tokens, n_range=(35, 50)) -> float:
    """D minimising squared error against the exact expected TTR curve, by grid search."""
    Ns = np.arange(n_range[0], n_range[1] + 1, dtype=float)
    target = np.array([expected_ttr(tokens, int(n)) for n in Ns])

    def sse(D):
        return float(np.sum((target - vocd_curve_oracle(Ns, D)) ** 2))

    grid = np.logspace(-1, 4, 5001)
    best = grid[int(np.argmin([sse(d) for d in grid]))]
    fine = np.linspace(best / 1.01, best * 1.01, 2001)
    return float(fine[int(np.argmin([sse(d) for d in fine]))])


# --------------------------------------------------------------- models

def best_stump(x, y):
    """Exhaustive single-split least-squares stump: (threshold, left mean, right mean)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    vals = np.unique(x)
    best = (np.inf, None, None, None)
    for a, b in zip(vals[:-1], vals[1:]):
        t = (a + b) / 2.0
        left, right = y[x <= t], y[x > t]
        sse = np.sum((left - left.mean()) ** 2) + np.sum((right - right.mean()) ** 2)
        if sse < best[0]:
            best = (sse, t, left.mean(), right.mean())
    return best[1], best[2], best[3]


def normal_equations(X, y):
    """(intercept, slopes) from solving X'X b = X'y with an explicit intercept column."""
    Z = np.column_stack([np.ones(len(y)), X])
    b = np.linalg.solve(Z.T @ Z, Z.T @ y)
    return b[0], b[1:]


# --------------------------------------------------------------- mixedfx

def anova_one_way_ml(y, groups):
    """ML variance components for a balanced one-way random-effects layout.

    sigma_e^2 = SSW / (G (m - 1)), sigma_u^2 = max(0, SSB / G / m - sigma_e^2 / m)
    where SSB is m times the spread of group means.
    """
    y = np.asarray(y, float)
    labels = sorted(set(groups))
    G = len(labels)
    g = np.array([labels.index(v) for v in groups])
    m = len(y) // G
    means = np.array([y[g == k].mean() for k in range(G)])
    ssw = sum(np.sum((y[g == k] - means[k]) ** 2) for k in range(G))
    ssb = m * np.sum((means - means.mean()) ** 2)
    s2e = ssw / (G * (m - 1))
    s2u = max(0.0, (ssb / G - s2e) / m)
    return float(y.mean()), float(s2u), float(s2e)


def _pom_loglik_grad(theta, beta, X, y):
    """Fixed-effects proportional-odds log-likelihood with P(Y <= k) = F(theta_k - x beta)."""
    R = len(theta) + 1
    eta = X @ beta
    ext = np.concatenate([[-np.inf], theta, [np.inf]])
    a = ext[y + 1] - eta
    b = ext[y] - eta
    Fa, Fb = expit(a), expit(b)
    fa = np.where(np.isfinite(a), Fa * (1 - Fa), 0.0)
    fb = np.where(np.isfinite(b), Fb * (1 - Fb), 0.0)
    p = Fa - Fb
    ll = float(np.sum(np.log(p)))
    g_theta = np.zeros(R - 1)
    up = y < R - 1
    np.add.at(g_theta, y[up], fa[up] / p[up])
    lo = y > 0
    np.add.at(g_theta, y[lo] - 1, -fb[lo] / p[lo])
    g_beta = -X.T @ ((fa - fb) / p)
    return ll, np.concatenate([g_theta, g_beta])


def pom_newton(X, y, tol: float = 1e-11, maxiter: int = 200):
    """Newton ascent directly on (thresholds, beta) with step halving.

    Levels of y are coded 0..R-1. The Hessian comes from central
    differences of the analytic gradient; threshold order is kept by
    rejecting steps that break it.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, int)
    R = int(y.max()) + 1
    cum = np.cumsum(np.bincount(y, minlength=R))[:-1] / len(y)
    psi = np.concatenate([np.log(cum / (1 - cum)), np.zeros(X.shape[1])])
    k = R - 1

    def f(v):
        th = v[:k]
        if np.any(np.diff(th) <= 0):
            return -np.inf, None
        return _pom_loglik_grad(th, v[k:], X, y)

    ll, g = f(psi)
    for _ in range(maxiter):
        H = np.zeros((len(psi), len(psi)))
        for j in range(len(psi)):
            e = np.zeros(len(psi))
            e[j] = 1e-5
            H[:, j] = (f(psi + e)[1] - f(psi - e)[1]) / 2e-5
        H = 0.5 * (H + H.T)
        step = np.linalg.solve(H, -g)
        t = 1.0
        while t > 1e-10:
            cand = psi + t * step
            ll_c, g_c = f(cand)
            if ll_c >= ll - 1e-12:
                break
            t /= 2
        psi, ll, g = cand, ll_c, g_c
        if np.max(np.abs(g)) < tol:
            break
    return psi[:k], psi[k:], ll


def mixed_logistic_laplace(X, y01, groups):
    """Random-intercept logistic regression by Laplace, with scalar mode searches.

    P(y = 1 | u) = expit(alpha + x beta + u), u ~ N(0, sigma^2). Returns
    (alpha, beta, sigma). The outer fit uses Nelder-Mead on
    (alpha, beta, log sigma), independent of any gradient code.
    """
    X = np.asarray(X, float)
    y01 = np.asarray(y01, float)
    labels = sorted(set(groups))
    idx = [np.flatnonzero(np.array([g == lab for g in groups])) for lab in labels]

    def negll(params):
        alpha, beta, logs = params[0], params[1:-1], params[-1]
        s2 = math.exp(2 * logs)
        eta = alpha + X @ beta
        total = 0.0
        for rows in idx:
            e, yy = eta[rows], y01[rows]

            def neg_h(u):
                z = e + u
                return -(np.sum(yy * z - np.logaddexp(0.0, z)) - 0.5 * u * u / s2)

            u = minimize_scalar(neg_h, bracket=(-1.0, 1.0), method="brent", tol=1e-12).x
            p = expit(e + u)
            curv = np.sum(p * (1 - p)) + 1.0 / s2
            total += -neg_h(u) - 0.5 * math.log(s2 * curv)
        return -total

    x0 = np.zeros(X.shape[1] + 2)
    x0[-1] = math.log(0.5)
    res = minimize(negll, x0, method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 20000, "maxfev": 40000})
    res = minimize(negll, res.x, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 20000, "maxfev": 40000})
    return res.x[0], res.x[1:-1], math.exp(res.x[-1])


# ------------------------------------------------------------- agreement

def alpha_by_pairs(values, ordinal: bool = False) -> float:
    """Krippendorff's alpha by enumerating ordered value pairs.

    Observed disagreement averages within-item pairs weighted by
    1/(m_u - 1); expected disagreement averages all pairs of pairable
    values drawn from different positions in the pooled list.
    """
    units = [[v for v in row if v is not None] for row in values]
    units = [u for u in units if len(u) >= 2]
    pooled = [v for u in units for v in u]
    n = len(pooled)
    cats = sorted(set(pooled))
    counts = Counter(pooled)

    def delta(a, b):
        if not ordinal:
            return 0.0 if a == b else 1.0
        lo, hi = sorted((cats.index(a), cats.index(b)))
        s = sum(counts[cats[g]] for g in range(lo, hi + 1))
        return (s - (counts[a] + counts[b]) / 2.0) ** 2

    d_o = 0.0
    for u in units:
        m = len(u)
        d_o += sum(delta(u[i], u[j]) for i in range(m) for j in range(m) if i != j) / (m - 1)
    d_o /= n
    d_e = sum(delta(pooled[i], pooled[j]) for i in range(n) for j in range(n) if i != j)
    d_e /= n * (n - 1)
    if d_o == 0:
        return 1.0
    return 1.0 - d_o / d_e


# --------------------------------------------------------------- markers

def marker_substring_oracle(tokens, lexicon: dict) -> dict:
    """Phrase hit iff ' phrase ' occurs in the space-padded, lower-cased utterance."""
    text = " " + " ".join(t.lower() for t in tokens) + " "
    return {cat: any(" " + " ".join(p.lower().split()) + " " in text for p in phrases)
            for cat, phrases in lexicon.items()}
