"""Random-intercept mixed models for the developmental and marker analyses.

Continuous outcomes use a Gaussian LMM fit by profiled maximum likelihood.
Ordinal outcomes use a proportional-odds cumulative logit model,
P(Y <= r | u) = logistic(theta_r - eta - u), with the child intercept u
integrated out by a Laplace approximation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from . import kernels
from .errors import DataError
from .features import MATCHED_BINS, AnalysisRow, LengthComponents, LenBin
from .judge.taxonomy import PT_ORDER, REFERENCE_PT, PTType
from .markers import CATEGORIES as MARKER_CATEGORIES


class EmptyDesign(DataError, ValueError):
    pass


class CollinearDesign(DataError, ValueError):
    def __init__(self, msg, columns=()):
        super().__init__(msg)
        self.columns = list(columns)


class SingularGLS(DataError, ArithmeticError):
    pass


class NonConvergence(DataError, RuntimeError):
    pass


class SeparationDetected(DataError, RuntimeError):
    pass


# ----------------------------------------------------------------- design

class SpecId(str, enum.Enum):
    TOTAL = "Total"
    DIRECT = "Direct"
    S1 = "S1"
    S2 = "S2"


class Outcome(str, enum.Enum):
    E = "E"
    I = "I"
    MLU = "MLU"
    VOCD_D = "vocdD"
    FKGL = "FKGL"
    GFI = "GFI"

    @property
    def ordinal(self) -> bool:
        return self in (Outcome.E, Outcome.I)


@dataclass
class DesignData:
    """Column-aligned inputs for design construction; one entry per analysis unit."""

    group: list[str]
    age: np.ndarray
    pt: list[PTType]
    L_w_z: np.ndarray
    L_b_z: np.ndarray
    len_bin: list[LenBin]
    markers: np.ndarray                 # (n, 3) in MARKER_CATEGORIES order
    outcomes: dict[str, np.ndarray]

    def __len__(self):
        return len(self.group)

    def subset(self, mask: np.ndarray) -> "DesignData":
        idx = np.flatnonzero(mask)
        return DesignData(
            group=[self.group[i] for i in idx], age=self.age[idx], pt=[self.pt[i] for i in idx],
            L_w_z=self.L_w_z[idx], L_b_z=self.L_b_z[idx], len_bin=[self.len_bin[i] for i in idx],
            markers=self.markers[idx], outcomes={k: v[idx] for k, v in self.outcomes.items()},
        )


def utterance_data(rows: Sequence[AnalysisRow], comps: Sequence[LengthComponents],
                   markers: np.ndarray | None = None) -> DesignData:
    """Utterance-level units with E, I and word count (the MLU outcome)."""
    if len(rows) != len(comps):
        raise ValueError("rows and length components must align")
    n = len(rows)
    m = np.zeros((n, len(MARKER_CATEGORIES))) if markers is None else np.asarray(markers, dtype=float)
    outcomes = {
        Outcome.E.value: np.array([np.nan if r.expansion is None else r.expansion for r in rows], float),
        Outcome.I.value: np.array([np.nan if r.independence is None else r.independence for r in rows], float),
        Outcome.MLU.value: np.array([r.len_words for r in rows], dtype=float),
    }
    return DesignData(
        group=[r.child_key for r in rows], age=np.array([r.age for r in rows], dtype=float),
        pt=[r.pt for r in rows], L_w_z=np.array([c.L_w_z for c in comps]),
        L_b_z=np.array([c.L_b_z for c in comps]), len_bin=[c.len_bin for c in comps],
        markers=m, outcomes=outcomes,
    )


def cell_data(rows: Sequence[AnalysisRow], comps: Sequence[LengthComponents],
              cell_values: dict[tuple[str, PTType], dict[str, float]]) -> DesignData:
    """Child x PT cell units for text-level baselines computed on concatenated cell text.

    The length terms are cell means of the utterance-level components, so the
    within-child term is identically zero here.
    """
    cells: dict[tuple[str, PTType], list[int]] = {}
    for i, r in enumerate(rows):
        cells.setdefault((r.child_key, r.pt), []).append(i)
    keys = sorted(cells, key=lambda k: (k[0], PT_ORDER.index(k[1]) if k[1] in PT_ORDER else 99))
    keys = [k for k in keys if k in cell_values]
    out_names = [Outcome.VOCD_D.value, Outcome.FKGL.value, Outcome.GFI.value]
    outcomes = {o: np.array([cell_values[k].get(o, np.nan) for k in keys], dtype=float) for o in out_names}
    lw = np.array([np.mean([comps[i].L_w_z for i in cells[k]]) for k in keys])
    lb = np.array([comps[cells[k][0]].L_b_z for k in keys])
    lw[np.abs(lw) < 1e-12] = 0.0
    return DesignData(
        group=[k[0] for k in keys], age=np.array([rows[cells[k][0]].age for k in keys], dtype=float),
        pt=[k[1] for k in keys], L_w_z=lw, L_b_z=lb, len_bin=[LenBin.B1_3] * len(keys),
        markers=np.zeros((len(keys), len(MARKER_CATEGORIES))), outcomes=outcomes,
    )


@dataclass
class DesignSpec:
    outcome: Outcome
    spec_id: SpecId
    fixed_terms: list[str]
    random_intercept_group: str = "child"
    dropped_terms: list[str] = field(default_factory=list)
    n_rows: int = 0
    levels: list[int] = field(default_factory=list)


def _zscore(v: np.ndarray) -> np.ndarray:
    sd = v.std(ddof=1) if len(v) > 1 else 0.0
    if not np.isfinite(sd) or sd == 0:
        return np.zeros_like(v)
    return (v - v.mean()) / sd


PT_DUMMY_LEVELS = tuple(t for t in PT_ORDER if t is not REFERENCE_PT)


def build_design(data: DesignData, spec_id: SpecId | str, outcome: Outcome | str,
                 drop_constant: bool = False):
    """(DesignSpec, X, y, groups); X carries no intercept column.

    Rows with a missing outcome or an AmbiguousUnclear PT are removed first.
    S1 also drops utterances longer than ten words and conditions on
    PT x LenBin cells through indicator columns.
    """
    spec_id, outcome = SpecId(spec_id), Outcome(outcome)
    if outcome.value not in data.outcomes:
        raise EmptyDesign(f"outcome {outcome.value} not available for these units")
    y_all = data.outcomes[outcome.value]
    keep = np.isfinite(y_all) & np.array([p is not PTType.AMBIGUOUS_UNCLEAR for p in data.pt], bool)
    if spec_id is SpecId.S1:
        keep &= np.array([b in MATCHED_BINS for b in data.len_bin], dtype=bool)
    d = data.subset(keep)
    if len(d) == 0:
        raise EmptyDesign(f"no rows for {spec_id.value}/{outcome.value}")
    cols: list[tuple[str, np.ndarray]] = []
    pt_cols = [(f"PT[{t.value}]", np.array([p is t for p in d.pt], dtype=float)) for t in PT_DUMMY_LEVELS]
    marker_cols = [(f"M[{c}]", d.markers[:, j].astype(float)) for j, c in enumerate(MARKER_CATEGORIES)]
    if spec_id in (SpecId.TOTAL, SpecId.DIRECT):
        cols.append(("Age_z", _zscore(d.age)))
        if spec_id is SpecId.DIRECT:
            cols += [("L_w_z", d.L_w_z.astype(float)), ("L_b_z", d.L_b_z.astype(float))]
        cols += pt_cols
    elif spec_id is SpecId.S2:
        cols += marker_cols + [("L_w_z", d.L_w_z.astype(float)), ("L_b_z", d.L_b_z.astype(float))] + pt_cols
    else:
        cols += marker_cols
        cells = [(t, b) for t in PT_ORDER for b in MATCHED_BINS]
        present = {(p, b) for p, b in zip(d.pt, d.len_bin)}
        observed = [c for c in cells if c in present]
        for t, b in observed[1:]:   # first observed cell is the reference
            cols.append((f"Cell[{t.value}:{b.value}]",
                         np.array([(p is t and lb is b) for p, lb in zip(d.pt, d.len_bin)], dtype=float)))

    dropped = []
    constant = [name for name, v in cols if np.ptp(v) == 0]
    if constant:
        if not drop_constant:
            raise CollinearDesign(f"constant columns after filtering: {constant}", constant)
        dropped = constant
        cols = [(n, v) for n, v in cols if n not in constant]
    names = [n for n, _ in cols]
    X = np.column_stack([v for _, v in cols]) if cols else np.zeros((len(d), 0))
    if X.shape[1]:
        rank = np.linalg.matrix_rank(np.column_stack([np.ones(len(d)), X]))
        if rank < X.shape[1] + 1:
            raise CollinearDesign(f"design is rank deficient ({rank} < {X.shape[1] + 1})")
    y = d.outcomes[outcome.value]
    levels: list[int] = []
    if outcome.ordinal:
        levels = sorted({int(v) for v in y})
        lookup = {v: i + 1 for i, v in enumerate(levels)}
        y = np.array([lookup[int(v)] for v in y], dtype=np.int64)
    spec = DesignSpec(outcome, spec_id, names, dropped_terms=dropped, n_rows=len(d), levels=levels)
    return spec, X, y, list(d.group)


def _group_codes(groups) -> tuple[np.ndarray, int]:
    _, codes = np.unique(np.asarray([str(g) for g in groups]), return_inverse=True)
    return codes.astype(np.int64), int(codes.max()) + 1 if len(codes) else 0


# -------------------------------------------------------------------- LMM

@dataclass
class LMMFit:
    names: list[str]
    beta: np.ndarray
    se_beta: np.ndarray
    sigma_u2: float
    sigma_e2: float
    loglik: float
    lam: float
    n_obs: int
    n_groups: int
    cov: np.ndarray = field(repr=False)


def _lmm_profile(lam, Xg, yg, sizes):
    """Profiled ML log-likelihood and GLS pieces at variance ratio lam."""
    c = lam / (1.0 + sizes * lam)
    A = sum(Xi.T @ Xi - ci * np.outer(Xi.sum(0), Xi.sum(0)) for Xi, ci in zip(Xg, c))
    b = sum(Xi.T @ yi - ci * Xi.sum(0) * yi.sum() for Xi, yi, ci in zip(Xg, yg, c))
    try:
        beta = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularGLS("GLS normal matrix is singular") from exc
    Q = 0.0
    for Xi, yi, ci in zip(Xg, yg, c):
        r = yi - Xi @ beta
        Q += r @ r - ci * r.sum() ** 2
    n = sum(len(yi) for yi in yg)
    s2 = Q / n
    if s2 <= 0:
        raise SingularGLS("residual variance collapsed to zero")
    ll = -0.5 * n * (math.log(2 * math.pi * s2) + 1.0) - 0.5 * float(np.sum(np.log1p(sizes * lam)))
    return ll, beta, s2, A


def golden_section_max(f, lo, hi, tol=1e-10, maxiter=200):
    """Maximise a unimodal function on [lo, hi]."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) < tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


LOG_LAMBDA_RANGE = (-18.0, 12.0)


def fit_lmm(X, y, groups, add_intercept: bool = True, names: Sequence[str] | None = None) -> LMMFit:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    names = list(names) if names is not None else [f"x{j}" for j in range(X.shape[1])]
    if add_intercept:
        X = np.column_stack([np.ones(len(y)), X])
        names = ["(Intercept)"] + names
    if len(y) == 0:
        raise EmptyDesign("no observations")
    codes, G = _group_codes(groups)
    if G < 2:
        raise NonConvergence("random-intercept variance is unidentified with fewer than two groups")
    order = np.argsort(codes, kind="stable")
    bounds = np.searchsorted(codes[order], np.arange(G + 1))
    Xg = [X[order[bounds[g]:bounds[g + 1]]] for g in range(G)]
    yg = [y[order[bounds[g]:bounds[g + 1]]] for g in range(G)]
    sizes = np.diff(bounds).astype(float)

    def prof(loglam):
        return _lmm_profile(math.exp(loglam), Xg, yg, sizes)[0]

    grid = np.linspace(*LOG_LAMBDA_RANGE, 61)
    vals = [prof(t) for t in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    t_best, ll_best = golden_section_max(prof, lo, hi)
    lam = math.exp(t_best)
    ll0 = _lmm_profile(0.0, Xg, yg, sizes)[0]
    if ll0 >= ll_best:
        lam, ll_best = 0.0, ll0
    ll, beta, s2, A = _lmm_profile(lam, Xg, yg, sizes)
    if np.linalg.cond(A) > 1e13:
        raise SingularGLS("GLS normal matrix is ill conditioned")
    cov = s2 * np.linalg.inv(A)
    se = np.sqrt(np.diag(cov))
    return LMMFit(names, beta, se, lam * s2 if lam > 0 else 0.0, s2, ll, lam, len(y), G, cov)


# ------------------------------------------------------------------- CLMM

@dataclass
class CLMMFit:
    names: list[str]
    thresholds: np.ndarray
    beta: np.ndarray
    sigma_u: float
    se_beta: np.ndarray
    se_thresholds: np.ndarray
    loglik: float
    n_obs: int
    n_groups: int
    converged: bool
    iterations: int
    cov: np.ndarray = field(repr=False)
    levels: list[int] = field(default_factory=list)
    loglik_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def odds_ratios(self) -> np.ndarray:
        return np.exp(self.beta)

    def predict_proba(self, X, u=0.0) -> np.ndarray:
        """Category probabilities at a given random intercept (default 0)."""
        eta = np.asarray(X, dtype=float) @ self.beta + u
        cum = 1.0 / (1.0 + np.exp(-(self.thresholds[None, :] - eta[:, None])))
        cum = np.column_stack([np.zeros(len(eta)), cum, np.ones(len(eta))])
        return np.diff(cum, axis=1)


def thresholds_from_tau(tau: np.ndarray) -> np.ndarray:
    return np.cumsum(np.concatenate([tau[:1], np.exp(tau[1:])]))


def tau_from_thresholds(theta: np.ndarray) -> np.ndarray:
    return np.concatenate([theta[:1], np.log(np.diff(theta))])


class CLMMObjective:
    """Laplace log-likelihood and analytic gradient in (tau, beta, log sigma).

    With ``fixed_sigma0`` the model has no random effect and the parameter
    vector is (tau, beta). Group modes are warm-started across evaluations.
    """

    def __init__(self, X, y, groups, fixed_sigma0: bool = False, backend: str | None = None,
                 inner_tol: float = 1e-10):
        self.X = np.ascontiguousarray(np.asarray(X, dtype=float).reshape(len(y), -1))
        y = np.asarray(y)
        self.levels = sorted({int(v) for v in y})
        lookup = {v: i for i, v in enumerate(self.levels)}
        self.y = np.array([lookup[int(v)] for v in y], dtype=np.int64)
        self.R = len(self.levels)
        self.codes, self.G = _group_codes(groups)
        self.fixed_sigma0 = fixed_sigma0
        self.n, self.p = self.X.shape
        self.kern = kernels.get(backend)
        self.inner_tol = inner_tol
        self.u = np.zeros(self.G)

    @property
    def dim(self) -> int:
        return self.R - 1 + self.p + (0 if self.fixed_sigma0 else 1)

    def unpack(self, psi):
        k = self.R - 1
        tau, beta = psi[:k], psi[k:k + self.p]
        omega = None if self.fixed_sigma0 else psi[k + self.p]
        return tau, beta, omega

    def start(self) -> np.ndarray:
        counts = np.bincount(self.y, minlength=self.R).astype(float)
        cum = np.cumsum(counts)[:-1] / self.n
        cum = np.clip(cum, 1e-4, 1 - 1e-4)
        theta = np.log(cum / (1 - cum))
        theta = np.maximum.accumulate(theta + np.arange(self.R - 1) * 1e-6)
        psi = np.concatenate([tau_from_thresholds(theta), np.zeros(self.p)])
        if not self.fixed_sigma0:
            psi = np.append(psi, math.log(0.5))
        return psi

    def _slot_terms(self, theta_ext, eta, u_obs):
        y = self.y
        a = theta_ext[y + 1] - eta - u_obs
        b = theta_ext[y] - eta - u_obs
        _, _, fa, f1a, f2a = kernels.link_terms(a)
        _, _, fb, f1b, f2b = kernels.link_terms(b)
        return fa, f1a, f2a, fb, f1b, f2b

    def value_and_grad(self, psi):
        tau, beta, omega = self.unpack(np.asarray(psi, dtype=float))
        theta = thresholds_from_tau(tau)
        theta_ext = np.concatenate([[-np.inf], theta, [np.inf]])
        eta = self.X @ beta
        g = self.codes
        if self.fixed_sigma0:
            u = np.zeros(self.G)
        else:
            s2 = math.exp(2.0 * omega)
            u = self.kern.laplace_mode(self.y, np.ascontiguousarray(eta), theta_ext, g, self.G, s2,
                                       self.u, self.inner_tol, 200)
            if np.all(np.isfinite(u)):
                self.u = u
        u_obs = u[g]
        logG, lu, luu, luuu = kernels.obs_terms(self.y, eta, theta_ext, u_obs)
        fa, f1a, f2a, fb, f1b, f2b = self._slot_terms(theta_ext, eta, u_obs)
        G = np.exp(logG)
        Gu, Guu = lu * G, (luu + lu * lu) * G

        if self.fixed_sigma0:
            c1 = np.zeros(self.G)
            c2 = np.zeros(self.G)
            L = float(logG.sum())
            extra = []
        else:
            S2 = np.bincount(g, luu, self.G)
            S3 = np.bincount(g, luuu, self.G)
            huu = S2 - 1.0 / s2
            h = np.bincount(g, logG, self.G) - 0.5 * u * u / s2
            L = float(np.sum(h - 0.5 * np.log(-huu * s2)))
            c1 = -0.5 / huu
            c2 = 0.5 * S3 / (huu * huu)
            g_omega = np.sum(u * u / s2 - 1.0 + c1 * 2.0 / s2 + c2 * 2.0 * u / s2)
            extra = [g_omega]

        c1o, c2o = c1[g], c2[g]
        w = lu + c1o * luuu + c2o * luu
        grad_beta = self.X.T @ w

        grad_theta = np.zeros(self.R - 1)
        for Gth, Gthu, Gthuu, idx in ((fa, -f1a, f2a, self.y), (-fb, f1b, -f2b, self.y - 1)):
            valid = (idx >= 0) & (idx < self.R - 1)
            lt = Gth / G
            ltu = Gthu / G - Gth * Gu / G ** 2
            ltuu = (Gthuu / G - 2.0 * Gthu * Gu / G ** 2 - Gth * Guu / G ** 2
                    + 2.0 * Gth * Gu ** 2 / G ** 3)
            contrib = lt + c1o * ltuu + c2o * ltu
            grad_theta += np.bincount(idx[valid], contrib[valid], self.R - 1)
        rev = np.cumsum(grad_theta[::-1])[::-1]
        grad_tau = rev * np.concatenate([[1.0], np.exp(tau[1:])])
        grad = np.concatenate([grad_tau, grad_beta, extra])
        return L, grad

    def negative(self, psi):
        L, g = self.value_and_grad(psi)
        if not np.isfinite(L):
            return 1e300, np.zeros_like(g)
        return -L, -g


def _fd_hessian(obj: CLMMObjective, psi: np.ndarray) -> np.ndarray:
    k = len(psi)
    H = np.zeros((k, k))
    saved = obj.u.copy()
    for j in range(k):
        h = 1e-4 * max(1.0, abs(psi[j]))
        e = np.zeros(k)
        e[j] = h
        gp = obj.value_and_grad(psi + e)[1]
        gm = obj.value_and_grad(psi - e)[1]
        H[:, j] = (gp - gm) / (2 * h)
    obj.u = saved
    return 0.5 * (H + H.T)


SEPARATION_BOUND = 25.0
SIGMA_FLOOR = 1e-3


def fit_clmm(X, y, groups, names: Sequence[str] | None = None, fixed_sigma0: bool = False,
             maxiter: int = 500, gtol: float = 1e-6, backend: str | None = None,
             start: np.ndarray | None = None) -> CLMMFit:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y)
    if len(y) == 0:
        raise EmptyDesign("no observations")
    names = list(names) if names is not None else [f"x{j}" for j in range(X.shape[1])]
    obj = CLMMObjective(X, y, groups, fixed_sigma0=fixed_sigma0, backend=backend)
    if obj.R < 2:
        raise EmptyDesign("ordinal outcome needs at least two observed levels")
    if not fixed_sigma0 and obj.G < 2:
        raise NonConvergence("random-intercept variance is unidentified with fewer than two groups")

    if start is None:
        if fixed_sigma0:
            psi0 = obj.start()
        else:
            base = fit_clmm(X, y, groups, names, fixed_sigma0=True, maxiter=maxiter, gtol=gtol,
                            backend=backend)
            psi0 = np.concatenate([tau_from_thresholds(base.thresholds), base.beta, [math.log(0.5)]])
    else:
        psi0 = np.asarray(start, dtype=float)

    trace: list[float] = []
    res = minimize(obj.negative, psi0, jac=True, method="BFGS",
                   callback=lambda xk: trace.append(-obj.negative(xk)[0]),
                   options={"gtol": gtol, "maxiter": maxiter})
    psi = res.x
    L, grad = obj.value_and_grad(psi)
    tau, beta, omega = obj.unpack(psi)
    if np.any(np.abs(beta) > SEPARATION_BOUND):
        raise SeparationDetected(f"coefficients diverged (max |beta| = {np.abs(beta).max():.1f})")
    scale = max(1.0, abs(L))
    if not np.isfinite(L) or np.max(np.abs(grad)) > max(1e-3, 1e-6 * scale):
        raise NonConvergence(f"outer optimizer stopped with gradient {np.max(np.abs(grad)):.2e}: "
                             f"{res.message}")

    sigma = 0.0 if fixed_sigma0 else math.exp(omega)
    H = -_fd_hessian(obj, psi)
    free = np.arange(len(psi))
    if not fixed_sigma0 and sigma < SIGMA_FLOOR:
        # Variance at its boundary: the log-sigma direction is flat, so condition on it.
        free = free[:-1]
    Hf = H[np.ix_(free, free)]
    try:
        np.linalg.cholesky(Hf)
    except np.linalg.LinAlgError as exc:
        raise SeparationDetected("observed information is not positive definite") from exc
    cov_free = np.linalg.inv(Hf)
    cov = np.full((len(psi), len(psi)), np.nan)
    cov[np.ix_(free, free)] = cov_free
    k = obj.R - 1
    p = obj.p
    se_beta = np.sqrt(np.diag(cov)[k:k + p])
    # Delta method from tau to theta.
    J = np.tril(np.ones((k, k))) * np.concatenate([[1.0], np.exp(tau[1:])])[None, :]
    se_theta = np.sqrt(np.diag(J @ cov[:k, :k] @ J.T))
    return CLMMFit(
        names=names, thresholds=thresholds_from_tau(tau), beta=beta.copy(), sigma_u=sigma,
        se_beta=se_beta, se_thresholds=se_theta, loglik=L, n_obs=len(y), n_groups=obj.G,
        converged=bool(res.success), iterations=int(res.nit), cov=cov, levels=obj.levels,
        loglik_trace=trace,
    )


# -------------------------------------------------------------- inference

def odds_ratio(fit: CLMMFit, z: float = 1.959963984540054):
    """(OR, lower, upper) arrays from Wald intervals on the log-odds scale."""
    b, se = np.asarray(fit.beta), np.asarray(fit.se_beta)
    return np.exp(b), np.exp(b - z * se), np.exp(b + z * se)


def wald_p(beta, se) -> np.ndarray:
    beta, se = np.atleast_1d(np.asarray(beta, float)), np.atleast_1d(np.asarray(se, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.inf))
    return 2.0 * norm.sf(np.abs(z))


def wald_test(fit) -> np.ndarray:
    return wald_p(fit.beta, fit.se_beta)


def significance_band(p: float) -> str:
    if p < 0.001:
        return "<.001"
    if p < 0.05:
        return "<.05"
    return "n.s."


@dataclass
class TermResult:
    term: str
    estimate: float
    se: float
    p: float
    odds_ratio: float | None = None

    @property
    def band(self) -> str:
        return significance_band(self.p)


def term_table(fit) -> dict[str, TermResult]:
    p = wald_test(fit)
    is_lmm = isinstance(fit, LMMFit)
    return {
        name: TermResult(name, float(fit.beta[j]), float(fit.se_beta[j]), float(p[j]),
                         None if is_lmm else float(math.exp(fit.beta[j])))
        for j, name in enumerate(fit.names) if name != "(Intercept)"
    }


def fit_spec(data: DesignData, spec_id: SpecId | str, outcome: Outcome | str,
             drop_constant: bool = True, backend: str | None = None):
    """Build the design and fit the matching model; returns (DesignSpec, fit)."""
    spec, X, y, groups = build_design(data, spec_id, outcome, drop_constant=drop_constant)
    if spec.outcome.ordinal:
        fit = fit_clmm(X, y, groups, names=spec.fixed_terms, backend=backend)
    else:
        fit = fit_lmm(X, y, groups, names=spec.fixed_terms)
    return spec, fit
