"""Age-prediction learners and the grouped cross-validation protocol."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from . import kernels
from .errors import DataError


class TooFewGroups(DataError, ValueError):
    pass


class DegenerateDesign(DataError, ValueError):
    pass


class LengthMismatch(DataError, ValueError):
    pass


class ZeroVariance(DataError, ValueError):
    pass


class TooFewUnits(DataError, ValueError):
    pass


# ------------------------------------------------------------------ folds

def group_kfold(groups: Sequence[Hashable], k: int = 5, seed: int = 0
                ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Group-disjoint folds balanced by row count.

    Groups are taken largest first and each goes to the fold that currently
    holds the fewest rows. The seed shuffles groups before the stable size
    sort, so it only decides among equal-sized groups; fold ties go to the
    lowest fold index.
    """
    groups = list(groups)
    uniq: dict[Hashable, list[int]] = {}
    for i, g in enumerate(groups):
        uniq.setdefault(g, []).append(i)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > len(uniq):
        raise TooFewGroups(f"k={k} but only {len(uniq)} distinct groups")
    names = list(uniq)
    rng = np.random.default_rng(seed)
    names = [names[i] for i in rng.permutation(len(names))]
    names.sort(key=lambda g: -len(uniq[g]))
    load = [0] * k
    members: list[list[int]] = [[] for _ in range(k)]
    for g in names:
        f = min(range(k), key=lambda j: (load[j], j))
        members[f].extend(uniq[g])
        load[f] += len(uniq[g])
    n = len(groups)
    out = []
    for f in range(k):
        test = np.array(sorted(members[f]), dtype=np.int64)
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        out.append((np.flatnonzero(mask), test))
    return out


# --------------------------------------------------------------- learners

class ModelKind(str, enum.Enum):
    OLS = "OLS"
    GBM = "GBM"


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth):
            f = self.feature[idx]
            internal = f >= 0
            if not internal.any():
                break
            go_left = X[rows, np.where(internal, f, 0)] <= self.threshold[idx]
            idx = np.where(internal, np.where(go_left, self.left[idx], self.right[idx]), idx)
        return self.value[idx]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))


@dataclass
class RegressionFit:
    kind: ModelKind
    intercept: float
    coefficients: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gbm_trees: list[Tree] | None = None
    learning_rate: float = 0.0
    stage_losses: list[float] = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind is ModelKind.OLS:
            return self.intercept + X @ self.coefficients
        out = np.full(X.shape[0], self.intercept)
        for t in self.gbm_trees or ():
            out += self.learning_rate * t.predict(X)
        return out


def _as_design(X, y=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise DegenerateDesign("design has zero rows")
    if not np.all(np.isfinite(X)):
        raise DegenerateDesign("design contains NaN or inf")
    if y is not None:
        y = np.asarray(y, dtype=float)
        if y.shape != (X.shape[0],):
            raise LengthMismatch("y does not match the design rows")
        if not np.all(np.isfinite(y)):
            raise DegenerateDesign("target contains NaN or inf")
    return X, y


def ols_fit(X, y) -> RegressionFit:
    """Least squares through SVD on centred data; minimum-norm slopes when rank deficient."""
    X, y = _as_design(X, y)
    xm, ym = X.mean(axis=0), y.mean()
    beta, *_ = np.linalg.lstsq(X - xm, y - ym, rcond=None)
    return RegressionFit(ModelKind.OLS, float(ym - xm @ beta), beta)


@dataclass(frozen=True)
class GBMParams:
    n_estimators: int = 500
    learning_rate: float = 0.05
    max_depth: int = 3
    seed: int = 0
    min_gain: float = 1e-12


def _fit_tree(X, order, resid, max_depth, feat_perm, min_gain, splitter):
    n = X.shape[0]
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [0.0]
    node_of = np.zeros(n, dtype=np.int64)       # level-local ids; -1 = settled in a leaf
    level_ids = [0]                             # level-local id -> global node id
    leaf_of = np.zeros(n, dtype=np.int64)       # global node per row
    for _ in range(max_depth):
        m = len(level_ids)
        act = node_of >= 0
        sums = np.bincount(node_of[act], resid[act], m)
        cnts = np.bincount(node_of[act], minlength=m).astype(float)
        bf, bt, bg = splitter(X, order, resid, node_of, m, feat_perm, sums, cnts)
        new_ids = []
        new_node = np.full(n, -1, dtype=np.int64)
        for k in range(m):
            gid = level_ids[k]
            if bf[k] < 0 or bg[k] <= min_gain:
                continue
            rows = np.flatnonzero(node_of == k)
            go_left = X[rows, bf[k]] <= bt[k]
            feature[gid], threshold[gid] = int(bf[k]), float(bt[k])
            for side, sel in ((left, go_left), (right, ~go_left)):
                cid = len(feature)
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(0.0)
                side[gid] = cid
                new_node[rows[sel]] = len(new_ids)
                leaf_of[rows[sel]] = cid
                new_ids.append(cid)
        if not new_ids:
            break
        node_of = new_node
        level_ids = new_ids
    n_nodes = len(feature)
    sums = np.bincount(leaf_of, resid, n_nodes)
    cnts = np.bincount(leaf_of, minlength=n_nodes)
    vals = np.where(cnts > 0, sums / np.maximum(cnts, 1), 0.0)
    tree = Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), vals, max_depth)
    return tree, vals[leaf_of]


def gbm_fit(X, y, params: GBMParams | None = None, backend: str | None = None, **kw) -> RegressionFit:
    """Stagewise least-squares boosting of shallow regression trees."""
    params = params or GBMParams(**kw)
    X, y = _as_design(X, y)
    if X.shape[0] < 2:
        raise DegenerateDesign("boosting needs at least two rows")
    X = np.ascontiguousarray(X)
    splitter = kernels.get(backend).best_splits
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))
    rng = np.random.default_rng(params.seed)
    f0 = float(y.mean())
    pred = np.full(len(y), f0)
    trees: list[Tree] = []
    losses = [float(np.mean((y - pred) ** 2))]
    if params.learning_rate > 0:
        for _ in range(params.n_estimators):
            resid = np.ascontiguousarray(y - pred)
            perm = rng.permutation(X.shape[1]).astype(np.int64)
            tree, fitted = _fit_tree(X, order, resid, params.max_depth, perm, params.min_gain, splitter)
            trees.append(tree)
            pred = pred + params.learning_rate * fitted
            losses.append(float(np.mean((y - pred) ** 2)))
    return RegressionFit(ModelKind.GBM, f0, np.zeros(0), trees, params.learning_rate, losses)


# ------------------------------------------------------------- evaluation

def evaluate(y_true, y_pred, constant_target: str = "raise") -> tuple[float, float, float]:
    """(MAE, MSE, R^2). With ``constant_target="nan"`` an undefined R^2 is NaN instead of an error."""
    yt = np.asarray(y_true, dtype=float)
    yp = np.asarray(y_pred, dtype=float)
    if yt.shape != yp.shape:
        raise LengthMismatch(f"{yt.shape} vs {yp.shape}")
    if yt.size < 2:
        raise LengthMismatch("need at least two points")
    err = yt - yp
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err * err))
    sst = float(np.sum((yt - yt.mean()) ** 2))
    if sst == 0.0:
        if constant_target == "nan":
            return mae, mse, float("nan")
        raise ZeroVariance("R^2 undefined for a constant target")
    return mae, mse, 1.0 - float(np.sum(err * err)) / sst


def bootstrap_ci(metric_fn: Callable[[list], float], data: Sequence, n_boot: int = 1000,
                 level: float = 0.95, seed: int = 0) -> tuple[float, float]:
    """Percentile interval from resampling the units in ``data`` with replacement."""
    units = list(data)
    if len(units) < 2:
        raise TooFewUnits("bootstrap needs at least two units")
    rng = np.random.default_rng(seed)
    stats = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, len(units), len(units))
        stats[b] = metric_fn([units[i] for i in idx])
    stats = stats[np.isfinite(stats)]
    if stats.size == 0:
        return float("nan"), float("nan")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


METRICS = ("MAE", "MSE", "R2")


@dataclass
class EvalReport:
    feature_set: str
    model: str
    k: int
    fold_metrics: dict[str, list[float]]
    mean: dict[str, float]
    ci: dict[str, tuple[float, float]]
    oof_pred: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    # metrics over all out-of-fold predictions at once; the CI is centred on these
    pooled: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for m in METRICS:
            if len(self.fold_metrics[m]) != self.k:
                raise ValueError("fold count mismatch")

    def to_dict(self) -> dict:
        return {
            "feature_set": self.feature_set, "model": self.model, "k": self.k,
            "fold_metrics": self.fold_metrics, "mean": self.mean, "pooled": self.pooled,
            "ci": {m: list(v) for m, v in self.ci.items()},
        }


def _nanmean(vals: list[float]) -> float:
    v = [x for x in vals if not math.isnan(x)]
    return float(np.mean(v)) if v else float("nan")


def cross_validate(X, y, groups, model: str = "OLS", k: int = 5, seed: int = 0,
                   gbm: GBMParams | None = None, n_boot: int = 1000, level: float = 0.95,
                   feature_set: str = "", backend: str | None = None) -> EvalReport:
    """Grouped k-fold CV; CIs resample children over pooled out-of-fold predictions."""
    X, y = _as_design(X, y)
    groups = list(groups)
    kind = ModelKind(model)
    folds = group_kfold(groups, k, seed)
    oof = np.empty(len(y))
    fm = {m: [] for m in METRICS}
    for train, test in folds:
        if kind is ModelKind.OLS:
            fit = ols_fit(X[train], y[train])
        else:
            fit = gbm_fit(X[train], y[train], gbm or GBMParams(seed=seed), backend=backend)
        pred = fit.predict(X[test])
        oof[test] = pred
        if len(test) >= 2:
            mae, mse, r2 = evaluate(y[test], pred, constant_target="nan")
        else:
            err = float(y[test][0] - pred[0])
            mae, mse, r2 = abs(err), err * err, float("nan")
        fm["MAE"].append(mae)
        fm["MSE"].append(mse)
        fm["R2"].append(r2)
    mean = {m: _nanmean(fm[m]) for m in METRICS}

    by_group: dict[Hashable, list[int]] = {}
    for i, g in enumerate(groups):
        by_group.setdefault(g, []).append(i)
    units = [np.array(v) for v in by_group.values()]
    ci = {}
    for j, m in enumerate(METRICS):
        def stat(sample, j=j):
            idx = np.concatenate(sample)
            return evaluate(y[idx], oof[idx], constant_target="nan")[j]
        ci[m] = bootstrap_ci(stat, units, n_boot=n_boot, level=level, seed=seed) if n_boot else (
            float("nan"), float("nan"))
    pooled = dict(zip(METRICS, evaluate(y, oof, constant_target="nan")))
    return EvalReport(feature_set, kind.value, k, fm, mean, ci, oof, pooled)
