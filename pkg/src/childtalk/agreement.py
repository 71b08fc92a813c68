"""Inter-annotator agreement and model-to-human error."""
from __future__ import annotations

import csv
import enum
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import DataError


class NoPairableValues(DataError, ValueError):
    pass


class ScaleMismatch(DataError, ValueError):
    pass


class IncompleteRatings(DataError, ValueError):
    pass


class AlignmentMismatch(DataError, ValueError):
    pass


class TooFewItems(DataError, ValueError):
    pass


class Scale(str, enum.Enum):
    NOMINAL = "nominal"
    ORDINAL = "ordinal"


def _missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


@dataclass
class RatingsMatrix:
    """Items by raters; ``None`` marks a missing rating."""

    values: list[list]
    scale: Scale = Scale.NOMINAL
    item_ids: list | None = None
    rater_ids: list | None = None

    def __post_init__(self):
        self.scale = Scale(self.scale)
        self.values = [[None if _missing(v) else v for v in row] for row in self.values]
        widths = {len(r) for r in self.values}
        if len(widths) > 1:
            raise ValueError("rows have different rater counts")
        if self.values and self.n_raters < 2:
            raise ValueError("need at least two raters")
        if self.item_ids is None:
            self.item_ids = list(range(len(self.values)))
        if self.rater_ids is None:
            self.rater_ids = list(range(self.n_raters))

    @property
    def n_items(self) -> int:
        return len(self.values)

    @property
    def n_raters(self) -> int:
        return len(self.values[0]) if self.values else 0

    def column(self, j: int) -> list:
        return [row[j] for row in self.values]

    def take(self, idx: Sequence[int]) -> "RatingsMatrix":
        return RatingsMatrix([list(self.values[i]) for i in idx], self.scale,
                             [self.item_ids[i] for i in idx], list(self.rater_ids))

    @property
    def complete(self) -> bool:
        return all(v is not None for row in self.values for v in row)


# --------------------------------------------------------------- alpha

def coincidence(m: RatingsMatrix) -> tuple[list, np.ndarray]:
    """Sorted categories and the value-by-value coincidence matrix."""
    cats = sorted({v for row in m.values for v in row if v is not None}, key=_sort_key)
    index = {c: i for i, c in enumerate(cats)}
    o = np.zeros((len(cats), len(cats)))
    for row in m.values:
        vals = [index[v] for v in row if v is not None]
        mu = len(vals)
        if mu < 2:
            continue
        counts = Counter(vals)
        for c, nc in counts.items():
            for k, nk in counts.items():
                pairs = nc * (nk - (c == k))
                o[c, k] += pairs / (mu - 1)
    return cats, o


def _sort_key(v):
    return (0, v) if isinstance(v, (int, float)) else (1, str(v))


def krippendorff_alpha(m: RatingsMatrix) -> float:
    cats, o = coincidence(m)
    n_c = o.sum(axis=1)
    n = n_c.sum()
    if n == 0:
        raise NoPairableValues("no item has two or more ratings")
    K = len(cats)
    if m.scale is Scale.NOMINAL:
        delta = 1.0 - np.eye(K)
    else:
        cum = np.cumsum(n_c)
        delta = np.zeros((K, K))
        for c in range(K):
            for k in range(K):
                lo, hi = min(c, k), max(c, k)
                s = cum[hi] - (cum[lo - 1] if lo > 0 else 0.0)
                delta[c, k] = (s - (n_c[c] + n_c[k]) / 2.0) ** 2
    d_o = float(np.sum(o * delta))
    if d_o == 0.0:
        return 1.0
    d_e = float(np.sum(np.outer(n_c, n_c) * delta))
    return 1.0 - (n - 1.0) * d_o / d_e


# --------------------------------------------------------------- kappas

def _require_nominal(m: RatingsMatrix):
    if m.scale is not Scale.NOMINAL:
        raise ScaleMismatch("kappa statistics here are defined for nominal ratings")


def fleiss_kappa(m: RatingsMatrix) -> float:
    _require_nominal(m)
    if not m.complete:
        raise IncompleteRatings("Fleiss' kappa needs every rater on every item")
    if m.n_items == 0:
        raise TooFewItems("no items")
    cats = sorted({v for row in m.values for v in row}, key=_sort_key)
    R = m.n_raters
    counts = np.array([[row.count(c) for c in cats] for row in m.values], dtype=float)
    P_i = (np.sum(counts ** 2, axis=1) - R) / (R * (R - 1))
    P_bar = float(P_i.mean())
    p_j = counts.sum(axis=0) / (m.n_items * R)
    P_e = float(np.sum(p_j ** 2))
    if P_e == 1.0:
        return 1.0
    return (P_bar - P_e) / (1.0 - P_e)


def cohen_kappa(a: Sequence, b: Sequence) -> float:
    pairs = [(x, y) for x, y in zip(a, b) if not _missing(x) and not _missing(y)]
    if not pairs:
        raise NoPairableValues("raters share no rated items")
    n = len(pairs)
    p_o = sum(x == y for x, y in pairs) / n
    ca, cb = Counter(x for x, _ in pairs), Counter(y for _, y in pairs)
    p_e = sum(ca[c] * cb[c] for c in ca) / (n * n)
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def cohen_kappa_avg(m: RatingsMatrix) -> float:
    _require_nominal(m)
    ks = [cohen_kappa(m.column(i), m.column(j)) for i, j in combinations(range(m.n_raters), 2)]
    return float(np.mean(ks))


def mae_to_raters(model_scores: Sequence[float], m: RatingsMatrix) -> float:
    if m.scale is not Scale.ORDINAL:
        raise ScaleMismatch("MAE needs ordinal ratings")
    if len(model_scores) != m.n_items:
        raise AlignmentMismatch(f"{len(model_scores)} model scores for {m.n_items} items")
    per_rater = []
    for j in range(m.n_raters):
        errs = [abs(float(s) - float(v)) for s, v in zip(model_scores, m.column(j)) if v is not None]
        if errs:
            per_rater.append(float(np.mean(errs)))
    if not per_rater:
        raise NoPairableValues("no rated items")
    return float(np.mean(per_rater))


def agreement_ci(stat_fn: Callable[[RatingsMatrix], float], m: RatingsMatrix, n_boot: int = 1000,
                 level: float = 0.95, seed: int = 0) -> tuple[float, float]:
    """Percentile interval from resampling items with replacement."""
    if m.n_items < 2:
        raise TooFewItems("bootstrap needs at least two items")
    rng = np.random.default_rng(seed)
    stats = []
    for _ in range(n_boot):
        idx = rng.integers(0, m.n_items, m.n_items)
        try:
            stats.append(stat_fn(m.take(idx)))
        except (NoPairableValues, ZeroDivisionError):
            continue
    stats = np.array([s for s in stats if np.isfinite(s)])
    if stats.size == 0:
        return float("nan"), float("nan")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


# ----------------------------------------------------------- file I/O

def read_ratings_csv(path) -> dict[str, RatingsMatrix]:
    """Long-format ratings (item_id, rater_id, value, scale[, task]) into one matrix per task."""
    by_task: dict[str, list[dict]] = defaultdict(list)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"item_id", "rater_id", "value", "scale"}
        if not need.issubset(reader.fieldnames or ()):
            raise DataError(f"ratings CSV needs columns {sorted(need)}")
        for rec in reader:
            by_task[rec.get("task") or "default"].append(rec)
    out = {}
    for task, recs in sorted(by_task.items()):
        scales = {r["scale"].strip().lower() for r in recs}
        if len(scales) != 1:
            raise ScaleMismatch(f"task {task!r} mixes scales {sorted(scales)}")
        scale = Scale(scales.pop())
        items = list(dict.fromkeys(r["item_id"] for r in recs))
        raters = sorted({r["rater_id"] for r in recs})
        ii = {k: i for i, k in enumerate(items)}
        rr = {k: j for j, k in enumerate(raters)}
        vals: list[list] = [[None] * len(raters) for _ in items]
        for r in recs:
            v = r["value"].strip()
            if v == "":
                continue
            vals[ii[r["item_id"]]][rr[r["rater_id"]]] = int(v) if scale is Scale.ORDINAL else v
        out[task] = RatingsMatrix(vals, scale, items, raters)
    return out


def write_ratings_csv(matrices: dict[str, RatingsMatrix], fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["task", "item_id", "rater_id", "value", "scale"])
    for task, m in matrices.items():
        for i, row in zip(m.item_ids, m.values):
            for r, v in zip(m.rater_ids, row):
                if v is not None:
                    w.writerow([task, i, r, v, m.scale.value])


def stratified_sample(items: Sequence, n: int, strata: Callable[[object], Hashable], seed: int = 0) -> list:
    """Proportional allocation across strata (largest remainder), seeded draw within each."""
    groups: dict[Hashable, list] = defaultdict(list)
    for it in items:
        groups[strata(it)].append(it)
    total = len(items)
    if n >= total:
        return list(items)
    keys = sorted(groups, key=repr)
    quota = {k: n * len(groups[k]) / total for k in keys}
    alloc = {k: int(math.floor(q)) for k, q in quota.items()}
    rest = n - sum(alloc.values())
    for k in sorted(keys, key=lambda k: (-(quota[k] - alloc[k]), repr(k)))[:rest]:
        alloc[k] += 1
    rng = np.random.default_rng(seed)
    out = []
    for k in keys:
        pool = groups[k]
        pick = rng.choice(len(pool), size=min(alloc[k], len(pool)), replace=False)
        out.extend(pool[i] for i in sorted(pick))
    return out
