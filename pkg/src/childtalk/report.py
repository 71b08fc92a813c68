"""Summary tables (CSV) and static figures built from stage artifacts."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .features import AnalysisRow, BASELINE_SETS, FEATURE_SETS
from .judge.taxonomy import PT_ORDER, PTKind, PTType
from .markers import CATEGORIES

# Weibull plotting positions (p(n+1)); gives IQR 1.5 on {2, 2, 2, 4}.
QUARTILE_METHOD = "weibull"


@dataclass(frozen=True)
class ScoreSummary:
    n: int
    mean: float
    sd: float
    median: float
    iqr: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "ScoreSummary":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            nan = float("nan")
            return cls(0, nan, nan, nan, nan)
        q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method=QUARTILE_METHOD)
        sd = float(v.std(ddof=1)) if v.size > 1 else float("nan")
        return cls(int(v.size), float(v.mean()), sd, float(med), float(q3 - q1))


def _fmt(x, nd: int = 3) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    out = f"{x:.{nd}f}"
    return "0." + "0" * nd if out == "-0." + "0" * nd else out


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# ---------------------------------------------------------------- table 1

TABLE1_HEADER = ["pt", "type", "N", "E_mean", "E_sd", "E_median", "E_iqr",
                 "I_mean", "I_sd", "I_median", "I_iqr"]


def table1(rows: Sequence[AnalysisRow]) -> list[tuple[PTType, ScoreSummary, ScoreSummary]]:
    """Per content PT: summaries of E and I over usable child responses."""
    out = []
    for t in PT_ORDER:
        sel = [r for r in rows if r.usable and r.pt is t]
        out.append((t, ScoreSummary.of([r.expansion for r in sel]),
                    ScoreSummary.of([r.independence for r in sel])))
    return out


def table1_csv(summary) -> str:
    recs = []
    for t, e, i in summary:
        kind = "Question" if t.kind is PTKind.QUESTION else "Non-Question"
        cells = [t.table_name, kind, str(e.n)]
        for s in (e, i):
            cells += [_fmt(s.mean), _fmt(s.sd), _fmt(s.median, 1), _fmt(s.iqr, 2)]
        recs.append(cells)
    return csv_text(TABLE1_HEADER, recs)


# ---------------------------------------------------------------- table 2

TABLE2_OUTCOMES = ("MLU", "vocdD", "FKGL", "GFI", "E", "I")
TABLE2_HEADER = ["outcome", "model", "spec", "status", "n_rows", "n_groups",
                 "age_beta", "age_or", "age_p", "age_band",
                 "w_beta", "w_or", "w_p", "w_band",
                 "b_beta", "b_or", "b_p", "b_band"]


def _fit_lookup(effects: Mapping) -> dict[tuple[str, str], dict]:
    return {(f["outcome"], f["spec"]): f for f in effects.get("fits", [])}


def _term_cells(fit: Mapping | None, term: str) -> list[str]:
    if not fit or fit.get("status") != "ok":
        return ["", "", "", ""]
    t = fit["terms"].get(term)
    if t is None:
        return ["n/a", "n/a", "n/a", "n/a"] if term in fit.get("dropped", []) else ["", "", "", ""]
    return [_fmt(t["estimate"]), _fmt(t.get("odds_ratio")), _fmt(t["p"], 4), t["band"]]


def table2_csv(effects: Mapping) -> str:
    fits = _fit_lookup(effects)
    recs = []
    for oc in TABLE2_OUTCOMES:
        for spec in ("Total", "Direct"):
            f = fits.get((oc, spec))
            if f is None:
                continue
            base = [oc, f.get("model", ""), spec, f.get("status", ""), str(f.get("n_rows", "")),
                    str(f.get("n_groups", ""))]
            lw = _term_cells(f, "L_w_z") if spec == "Direct" else ["", "", "", ""]
            lb = _term_cells(f, "L_b_z") if spec == "Direct" else ["", "", "", ""]
            recs.append(base + _term_cells(f, "Age_z") + lw + lb)
    return csv_text(TABLE2_HEADER, recs)


# ---------------------------------------------------------------- table 3

METRICS = ("MAE", "MSE", "R2")


def table3_header() -> list[str]:
    h = ["group", "feature_set"]
    for model in ("OLS", "GBM"):
        for m in METRICS:
            h += [f"{model}_{m}", f"{model}_{m}_pooled", f"{model}_{m}_lo", f"{model}_{m}_hi"]
    return h


def table3_csv(prediction: Mapping) -> str:
    """Fold-mean metrics; the bootstrap interval brackets the pooled out-of-fold value."""
    by = {(r["feature_set"], r["model"]): r for r in prediction.get("results", [])}
    recs = []
    for fs in FEATURE_SETS:
        if not any((fs, m) in by for m in ("OLS", "GBM")):
            continue
        cells = ["Baselines" if fs in BASELINE_SETS else "Ours", fs]
        for model in ("OLS", "GBM"):
            r = by.get((fs, model))
            for m in METRICS:
                if r is None:
                    cells += ["", "", "", ""]
                else:
                    lo, hi = r["ci"][m]
                    cells += [_fmt(r["mean"][m]), _fmt(r.get("pooled", {}).get(m)), _fmt(lo), _fmt(hi)]
        recs.append(cells)
    return csv_text(table3_header(), recs)


# ---------------------------------------------------------------- table 4

TABLE4_HEADER = ["outcome", "spec", "effect", "status"] + [
    f"{c}_{k}" for c in CATEGORIES for k in ("value", "p", "band")]


def table4_markers_csv(effects: Mapping) -> str:
    fits = _fit_lookup(effects)
    recs = []
    for oc in ("MLU", "E", "I"):
        for spec in ("S1", "S2"):
            f = fits.get((oc, spec))
            if f is None:
                continue
            effect = "beta" if oc == "MLU" else "OR"
            cells = [oc, spec, effect, f.get("status", "")]
            for c in CATEGORIES:
                t = f.get("terms", {}).get(f"M[{c}]") if f.get("status") == "ok" else None
                if t is None:
                    cells += ["", "", ""]
                else:
                    v = t["estimate"] if oc == "MLU" else t["odds_ratio"]
                    cells += [_fmt(v), _fmt(t["p"], 4), t["band"]]
            recs.append(cells)
    return csv_text(TABLE4_HEADER, recs)


AGREEMENT_HEADER = ["task", "scale", "n_items", "statistic", "value", "ci_lo", "ci_hi"]


def agreement_csv(agreement: Mapping) -> str:
    recs = []
    for task in agreement.get("tasks", []):
        for stat in task["statistics"]:
            lo, hi = stat.get("ci", (None, None))
            recs.append([task["task"], task["scale"], str(task["n_items"]), stat["name"],
                         _fmt(stat["value"]), _fmt(lo), _fmt(hi)])
    return csv_text(AGREEMENT_HEADER, recs)


# ---------------------------------------------------------------- plots

def _figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig) -> bytes:
    buf = io.BytesIO()
    # Software metadata carries the matplotlib version; drop it for stable bytes.
    fig.savefig(buf, format="png", dpi=80, metadata={"Software": None})
    _figure().close(fig)
    return buf.getvalue()


def plot_table1(summary) -> bytes:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(9, 4))
    x = np.arange(len(summary))
    for off, idx, label in ((-0.2, 1, "Expansion"), (0.2, 2, "Independence")):
        means = [s[idx].mean if s[idx].n else 0.0 for s in summary]
        sds = [s[idx].sd if s[idx].n > 1 else 0.0 for s in summary]
        ax.bar(x + off, means, width=0.4, yerr=sds, capsize=2, label=label)
    ax.set_xticks(x)
    ax.set_xticklabels([s[0].table_name for s in summary], rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("score")
    ax.set_ylim(0, 10.5)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig)


def _whisker_plot(labels, values, lo, hi, ylabel, ref=None) -> bytes:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(8, 4))
    x = np.arange(len(labels))
    v = np.array([np.nan if a is None else a for a in values], dtype=float)
    err_lo = np.nan_to_num(v - np.array([np.nan if a is None else a for a in lo], dtype=float))
    err_hi = np.nan_to_num(np.array([np.nan if a is None else a for a in hi], dtype=float) - v)
    ax.errorbar(x, v, yerr=[np.maximum(err_lo, 0), np.maximum(err_hi, 0)], fmt="o", capsize=3)
    if ref is not None:
        ax.axhline(ref, color="grey", lw=0.8, ls="--")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    return _save(fig)


def _wald_interval(t: Mapping, odds: bool):
    b, se = t["estimate"], t["se"]
    lo, hi = b - 1.959963984540054 * se, b + 1.959963984540054 * se
    if odds:
        return math.exp(b), math.exp(lo), math.exp(hi)
    return b, lo, hi


def plot_effects(effects: Mapping, specs: Sequence[str], terms: Sequence[str]) -> bytes:
    labels, v, lo, hi = [], [], [], []
    for f in effects.get("fits", []):
        if f["spec"] not in specs or f.get("status") != "ok" or f["outcome"] not in ("E", "I"):
            continue
        for term in terms:
            t = f["terms"].get(term)
            if t is None:
                continue
            a, b, c = _wald_interval(t, True)
            labels.append(f"{f['outcome']} {f['spec']} {term}")
            v.append(a)
            lo.append(b)
            hi.append(c)
    return _whisker_plot(labels, v, lo, hi, "odds ratio (95% Wald)", ref=1.0)


def plot_table3(prediction: Mapping) -> bytes:
    labels, v, lo, hi = [], [], [], []
    for r in prediction.get("results", []):
        labels.append(f"{r['feature_set']} ({r['model']})")
        v.append(r["mean"]["MAE"])
        lo.append(r["ci"]["MAE"][0])
        hi.append(r["ci"]["MAE"][1])
    return _whisker_plot(labels, v, lo, hi, "MAE (years)")


def plot_agreement(agreement: Mapping) -> bytes:
    labels, v, lo, hi = [], [], [], []
    for task in agreement.get("tasks", []):
        for stat in task["statistics"]:
            if stat["name"].startswith("mae"):
                continue
            labels.append(f"{task['task']} {stat['name']}")
            v.append(stat["value"])
            lo.append(stat["ci"][0])
            hi.append(stat["ci"][1])
    return _whisker_plot(labels, v, lo, hi, "agreement")


# ---------------------------------------------------------------- bundle

def build_report(rows: Sequence[AnalysisRow], effects: Mapping, prediction: Mapping,
                 agreement: Mapping, plots: bool = True) -> dict[str, bytes]:
    """File name -> content for every report artifact."""
    s1 = table1(rows)
    files = {
        "table1_scores_by_pt.csv": table1_csv(s1).encode(),
        "table2_effects.csv": table2_csv(effects).encode(),
        "table3_prediction.csv": table3_csv(prediction).encode(),
        "table4_markers.csv": table4_markers_csv(effects).encode(),
        "table4_agreement.csv": agreement_csv(agreement).encode(),
    }
    if plots:
        files["table1_scores_by_pt.png"] = plot_table1(s1)
        files["table2_effects.png"] = plot_effects(effects, ("Total", "Direct"), ("Age_z", "L_w_z", "L_b_z"))
        files["table3_prediction.png"] = plot_table3(prediction)
        files["table4_markers.png"] = plot_effects(effects, ("S1", "S2"), [f"M[{c}]" for c in CATEGORIES])
        files["table4_agreement.png"] = plot_agreement(agreement)
    return files
