"""Per-child feature vectors and per-utterance length decompositions."""
from __future__ import annotations

import csv
import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import DialoguePair
from .errors import DataError
from .judge.annotate import Annotation
from .judge.taxonomy import PT_ORDER, PTType


class OutOfRange(DataError, ValueError):
    pass


class NoUsableAnnotations(DataError, ValueError):
    pass


class Band(str, enum.Enum):
    LOW = "Low"
    MID = "Mid"
    HIGH = "High"


BANDS = (Band.LOW, Band.MID, Band.HIGH)


def band(score: int) -> Band:
    if isinstance(score, bool) or int(score) != score or not 1 <= score <= 10:
        raise OutOfRange(f"score {score!r} outside 1..10")
    if score <= 3:
        return Band.LOW
    if score <= 7:
        return Band.MID
    return Band.HIGH


class LenBin(str, enum.Enum):
    B1_3 = "1-3"
    B4_6 = "4-6"
    B7_10 = "7-10"
    OVER10 = ">10"


MATCHED_BINS = (LenBin.B1_3, LenBin.B4_6, LenBin.B7_10)


def len_bin(n_words: int) -> LenBin:
    if n_words < 1:
        raise OutOfRange("utterance has no words")
    if n_words <= 3:
        return LenBin.B1_3
    if n_words <= 6:
        return LenBin.B4_6
    if n_words <= 10:
        return LenBin.B7_10
    return LenBin.OVER10


@dataclass(frozen=True)
class AnalysisRow:
    """One annotated child response with the context analyses need."""

    pair_id: str
    child_key: str
    corpus_id: str
    age: float
    pt: PTType
    independence: int | None
    expansion: int | None
    hesitation_only: bool
    tokens: tuple[str, ...]

    @property
    def len_words(self) -> int:
        return len(self.tokens)

    @property
    def usable(self) -> bool:
        """Scored content response to a content PT type."""
        return (not self.hesitation_only and self.independence is not None
                and self.pt is not PTType.AMBIGUOUS_UNCLEAR)


def child_key(pair: DialoguePair) -> str:
    return f"{pair.corpus_id}/{pair.child_id}"


def join_rows(pairs: Sequence[DialoguePair], annotations: Sequence[Annotation]) -> list[AnalysisRow]:
    by_ref = {a.pair_ref: a for a in annotations}
    rows = []
    for p in pairs:
        a = by_ref.get(p.pair_id)
        if a is None:
            raise DataError(f"pair {p.pair_id} has no annotation")
        ei = a.ei
        rows.append(AnalysisRow(
            pair_id=p.pair_id, child_key=child_key(p), corpus_id=p.corpus_id,
            age=float(p.child_age_years), pt=a.pt.subtype,
            independence=None if ei is None else ei.independence,
            expansion=None if ei is None else ei.expansion,
            hesitation_only=bool(ei is not None and ei.hesitation_only),
            tokens=tuple(p.child.clean_tokens),
        ))
    return rows


# ----------------------------------------------------------- length split

@dataclass(frozen=True)
class LengthComponents:
    len_words: int
    L_w_z: float
    L_b_z: float
    len_bin: LenBin


def _zscores(values: np.ndarray) -> np.ndarray:
    if len(values) < 2:
        return np.zeros(len(values))
    sd = values.std(ddof=1)
    if not np.isfinite(sd) or sd <= 1e-12 * max(1.0, abs(values.mean())):
        return np.zeros(len(values))
    return (values - values.mean()) / sd


def length_components(rows: Sequence[AnalysisRow]) -> list[LengthComponents]:
    """Within-cell and between-child z-scored lengths, cells being child x PT."""
    lengths = np.array([r.len_words for r in rows], dtype=float)
    cells: dict[tuple[str, PTType], list[int]] = defaultdict(list)
    for i, r in enumerate(rows):
        cells[(r.child_key, r.pt)].append(i)

    lw = np.zeros(len(rows))
    cell_mean: dict[tuple[str, PTType], float] = {}
    for key, idx in cells.items():
        lw[idx] = _zscores(lengths[idx])
        cell_mean[key] = float(lengths[idx].mean())

    lb_cell: dict[tuple[str, PTType], float] = {}
    by_pt: dict[PTType, list[tuple[str, PTType]]] = defaultdict(list)
    for key in cell_mean:
        by_pt[key[1]].append(key)
    for keys in by_pt.values():
        keys.sort()
        z = _zscores(np.array([cell_mean[k] for k in keys]))
        lb_cell.update(zip(keys, z))

    return [
        LengthComponents(r.len_words, float(lw[i]), float(lb_cell[(r.child_key, r.pt)]),
                         len_bin(r.len_words))
        for i, r in enumerate(rows)
    ]


# -------------------------------------------------------- feature vectors

BASELINE_FIELDS = ("mlu", "vocd_d", "fkgl", "gfi")


@dataclass
class ChildFeatureVector:
    child_id: str
    e_ratio: tuple[float, float, float]
    i_ratio: tuple[float, float, float]
    pt_means_E: np.ndarray
    pt_sds_E: np.ndarray
    pt_means_I: np.ndarray
    pt_sds_I: np.ndarray
    mlu: float
    vocd_d: float
    fkgl: float
    gfi: float
    target_age: float
    # Share of the child's usable responses under each PT; used for the "+PT" feature sets.
    pt_share: np.ndarray = field(default_factory=lambda: np.zeros(len(PT_ORDER)))
    observed_pts: frozenset = frozenset()

    def __post_init__(self):
        for name in ("e_ratio", "i_ratio"):
            if abs(sum(getattr(self, name)) - 1.0) > 1e-9:
                raise ValueError(f"{name} does not sum to 1")

    def core(self) -> np.ndarray:
        """The fixed 54-value vector: 6 ratios, 44 PT statistics, 4 baselines."""
        return np.concatenate([
            self.e_ratio, self.i_ratio, self.pt_means_E, self.pt_sds_E, self.pt_means_I,
            self.pt_sds_I, [self.mlu, self.vocd_d, self.fkgl, self.gfi],
        ]).astype(float)

    def row(self) -> np.ndarray:
        return np.concatenate([self.core(), self.pt_share])


def _pt_names(prefix: str) -> list[str]:
    return [f"{prefix}_{t.value}" for t in PT_ORDER]


RATIO_NAMES = [f"{ax}_ratio_{b.value.lower()}" for ax in ("e", "i") for b in BANDS]
CORE_NAMES = (RATIO_NAMES + _pt_names("E_mean") + _pt_names("E_sd") + _pt_names("I_mean")
              + _pt_names("I_sd") + list(BASELINE_FIELDS))
SHARE_NAMES = _pt_names("pt_share")
FEATURE_NAMES = CORE_NAMES + SHARE_NAMES


def _ratios(scores: Sequence[int]) -> tuple[float, float, float]:
    bands = [band(s) for s in scores]
    n = len(bands)
    return tuple(bands.count(b) / n for b in BANDS)


def corpus_pt_means(rows: Iterable[AnalysisRow]) -> dict[str, dict[PTType, float]]:
    """Corpus-wide mean E and I per PT type (utterance weighted); the imputation source."""
    acc = {"E": defaultdict(list), "I": defaultdict(list)}
    allv = {"E": [], "I": []}
    for r in rows:
        if not r.usable:
            continue
        acc["E"][r.pt].append(r.expansion)
        acc["I"][r.pt].append(r.independence)
        allv["E"].append(r.expansion)
        allv["I"].append(r.independence)
    out = {}
    for ax in ("E", "I"):
        fallback = float(np.mean(allv[ax])) if allv[ax] else float("nan")
        out[ax] = {t: float(np.mean(acc[ax][t])) if acc[ax][t] else fallback for t in PT_ORDER}
    return out


def child_features(rows: Sequence[AnalysisRow], baselines: Mapping[str, float], age: float,
                   pt_means: Mapping[str, Mapping[PTType, float]], child_id: str | None = None
                   ) -> ChildFeatureVector:
    usable = [r for r in rows if r.usable]
    if not usable:
        raise NoUsableAnnotations(f"child {child_id or '?'} has no usable annotations")
    child_id = child_id or usable[0].child_key
    stats = {}
    for ax, attr in (("E", "expansion"), ("I", "independence")):
        means, sds = np.empty(len(PT_ORDER)), np.empty(len(PT_ORDER))
        for j, t in enumerate(PT_ORDER):
            vals = np.array([getattr(r, attr) for r in usable if r.pt is t], dtype=float)
            if len(vals) == 0:
                means[j], sds[j] = pt_means[ax][t], 0.0
            else:
                means[j] = vals.mean()
                sds[j] = vals.std(ddof=1) if len(vals) > 1 else 0.0
        stats[ax] = (means, sds)
    share = np.array([sum(r.pt is t for r in usable) for t in PT_ORDER], dtype=float) / len(usable)
    return ChildFeatureVector(
        child_id=child_id,
        e_ratio=_ratios([r.expansion for r in usable]),
        i_ratio=_ratios([r.independence for r in usable]),
        pt_means_E=stats["E"][0], pt_sds_E=stats["E"][1],
        pt_means_I=stats["I"][0], pt_sds_I=stats["I"][1],
        mlu=float(baselines["mlu"]), vocd_d=float(baselines["vocd_d"]),
        fkgl=float(baselines["fkgl"]), gfi=float(baselines["gfi"]),
        target_age=float(age), pt_share=share,
        observed_pts=frozenset(r.pt for r in usable),
    )


def build_feature_table(rows: Sequence[AnalysisRow], baselines: Mapping[str, Mapping[str, float]]
                        ) -> list[ChildFeatureVector]:
    """One vector per child with usable rows, sorted by child; NaN baselines take the corpus mean."""
    by_child: dict[str, list[AnalysisRow]] = defaultdict(list)
    for r in rows:
        by_child[r.child_key].append(r)
    pt_means = corpus_pt_means(rows)
    kept = sorted(k for k, rs in by_child.items() if any(r.usable for r in rs))
    if not kept:
        raise NoUsableAnnotations("no child has usable annotations")
    fill = {}
    for f in BASELINE_FIELDS:
        vals = [baselines[k][f] for k in kept if not math.isnan(baselines[k][f])]
        fill[f] = float(np.mean(vals)) if vals else 0.0
    out = []
    for k in kept:
        b = {f: (fill[f] if math.isnan(baselines[k][f]) else baselines[k][f]) for f in BASELINE_FIELDS}
        ages = {r.age for r in by_child[k]}
        # A child seen at several ages contributes its mean session age.
        out.append(child_features(by_child[k], b, float(np.mean(sorted(ages))), pt_means, k))
    return out


# Column groups for the age-prediction table.
FEATURE_SETS: dict[str, list[str]] = {
    "MLU": ["mlu"],
    "MLU + PT": ["mlu"] + SHARE_NAMES,
    "vocd-D": ["vocd_d"],
    "vocd-D + PT": ["vocd_d"] + SHARE_NAMES,
    "FKGL": ["fkgl"],
    "FKGL + PT": ["fkgl"] + SHARE_NAMES,
    "GFI": ["gfi"],
    "GFI + PT": ["gfi"] + SHARE_NAMES,
    "E + I": RATIO_NAMES + _pt_names("E_mean") + _pt_names("E_sd") + _pt_names("I_mean") + _pt_names("I_sd"),
    "E + I + PT": RATIO_NAMES + _pt_names("E_mean") + _pt_names("E_sd") + _pt_names("I_mean")
    + _pt_names("I_sd") + SHARE_NAMES,
    "E": RATIO_NAMES[:3] + _pt_names("E_mean") + _pt_names("E_sd"),
    "E + PT": RATIO_NAMES[:3] + _pt_names("E_mean") + _pt_names("E_sd") + SHARE_NAMES,
    "I": RATIO_NAMES[3:] + _pt_names("I_mean") + _pt_names("I_sd"),
    "I + PT": RATIO_NAMES[3:] + _pt_names("I_mean") + _pt_names("I_sd") + SHARE_NAMES,
}
BASELINE_SETS = tuple(list(FEATURE_SETS)[:8])
OUR_SETS = tuple(list(FEATURE_SETS)[8:])


def feature_matrix(vectors: Sequence[ChildFeatureVector], feature_set: str | Sequence[str]):
    """(X, y, child ids) for a named feature set or explicit column list."""
    cols = FEATURE_SETS[feature_set] if isinstance(feature_set, str) else list(feature_set)
    idx = [FEATURE_NAMES.index(c) for c in cols]
    full = np.array([v.row() for v in vectors], dtype=float).reshape(len(vectors), len(FEATURE_NAMES))
    y = np.array([v.target_age for v in vectors], dtype=float)
    return full[:, idx], y, [v.child_id for v in vectors]


def write_features_csv(vectors: Sequence[ChildFeatureVector], fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["child_id", "target_age"] + FEATURE_NAMES)
    for v in vectors:
        w.writerow([v.child_id, repr(float(v.target_age))] + [repr(float(x)) for x in v.row()])


def read_features_csv(path) -> list[ChildFeatureVector]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["child_id", "target_age"] + FEATURE_NAMES:
            raise DataError("features CSV header does not match the expected layout")
        out = []
        n = len(PT_ORDER)
        for rec in r:
            vals = np.array([float(x) for x in rec[2:]])
            o = 6
            out.append(ChildFeatureVector(
                child_id=rec[0], e_ratio=tuple(vals[0:3]), i_ratio=tuple(vals[3:6]),
                pt_means_E=vals[o:o + n], pt_sds_E=vals[o + n:o + 2 * n],
                pt_means_I=vals[o + 2 * n:o + 3 * n], pt_sds_I=vals[o + 3 * n:o + 4 * n],
                mlu=vals[o + 4 * n], vocd_d=vals[o + 4 * n + 1], fkgl=vals[o + 4 * n + 2],
                gfi=vals[o + 4 * n + 3], target_age=float(rec[1]), pt_share=vals[o + 4 * n + 4:],
            ))
        return out
