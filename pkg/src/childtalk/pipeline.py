"""Stage orchestration over a single output directory.

Each stage reads the artifacts of its prerequisites, writes its own
artifacts atomically and records input/output hashes in ``manifest.json``.
A stage whose recorded inputs, config hash and outputs are unchanged is
skipped on rerun unless forced.
"""
from __future__ import annotations

import copy
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import agreement as agr
from .baselines import TextStats, child_baselines, fkgl, gfi, vocd_d, InsufficientTokens
from .corpus import FilterConfig, ingest_directory, read_pairs_jsonl, write_pairs_jsonl
from .errors import ConfigError, DataError
from .features import (AnalysisRow, FEATURE_SETS, build_feature_table, feature_matrix, join_rows,
                       length_components, read_features_csv, write_features_csv)
from .judge import (JudgeConfig, VerdictCache, Annotator, make_backend, parse_age_reply,
                    read_annotations_jsonl, render_age_prompt, write_annotations_jsonl)
from .judge.mock import display_text
from .judge.taxonomy import PT_ORDER, FormatViolation, PTType
from .markers import detect_markers
from .mixedfx import Outcome, SpecId, cell_data, fit_spec, term_table, utterance_data, LMMFit
from .models import GBMParams, cross_validate
from . import report as rpt

log = logging.getLogger(__name__)


class ConfigInvalid(ConfigError):
    pass


class MissingPrerequisite(DataError):
    pass


STAGES = ("ingest", "annotate", "metrics", "features", "predict-age", "analyze", "agree", "report",
          "llm-age")
DEFAULT_ON = {s: s != "llm-age" for s in STAGES}
PREREQUISITES: dict[str, tuple[str, ...]] = {
    "ingest": (),
    "annotate": ("ingest",),
    "metrics": ("annotate",),
    "features": ("metrics",),
    "predict-age": ("features",),
    "analyze": ("metrics",),
    "agree": ("annotate",),
    "report": ("analyze", "predict-age", "agree"),
    "llm-age": ("ingest",),
}
ARTIFACTS: dict[str, tuple[str, ...]] = {
    "ingest": ("pairs.jsonl", "sessions.json"),
    "annotate": ("annotations.jsonl",),
    "metrics": ("child_baselines.csv", "cell_baselines.csv"),
    "features": ("features.csv",),
    "predict-age": ("prediction.json",),
    "analyze": ("effects.json",),
    "agree": ("agreement.json",),
    "report": (),                       # file list depends on plot settings
    "llm-age": ("llm_age.csv",),
}


def _closure(stage: str) -> list[str]:
    """All transitive prerequisites of a stage, in pipeline order."""
    seen: set[str] = set()
    todo = list(PREREQUISITES[stage])
    while todo:
        s = todo.pop()
        if s not in seen:
            seen.add(s)
            todo.extend(PREREQUISITES[s])
    return [s for s in STAGES if s in seen]


# ---------------------------------------------------------------- config

@dataclass
class CVSettings:
    k: int = 5
    n_boot: int = 1000
    level: float = 0.95
    models: tuple[str, ...] = ("OLS", "GBM")
    feature_sets: tuple[str, ...] = tuple(FEATURE_SETS)
    gbm: dict = field(default_factory=dict)


@dataclass
class PipelineConfig:
    corpus_dir: Path
    output_dir: Path
    cache_dir: Path | None = None
    ratings: Path | None = None
    judge: JudgeConfig = field(default_factory=JudgeConfig)
    backend: dict = field(default_factory=lambda: {"kind": "mock"})
    filter: FilterConfig = field(default_factory=FilterConfig)
    seeds: dict = field(default_factory=lambda: {"vocd": 0, "cv": 0, "agreement": 0})
    stages: dict = field(default_factory=lambda: dict(DEFAULT_ON))
    cv: CVSettings = field(default_factory=CVSettings)
    agreement_boot: int = 1000
    plots: bool = True

    TOP_KEYS = ("corpus_dir", "output_dir", "cache_dir", "ratings", "judge", "backend", "filter",
                "seeds", "stages", "cv", "agreement_boot", "plots")

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path = ".") -> "PipelineConfig":
        base = Path(base_dir)
        unknown = set(d) - set(cls.TOP_KEYS)
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        for key in ("corpus_dir", "output_dir"):
            if key not in d:
                raise ConfigInvalid(f"config needs {key!r}")

        def path(v):
            if v is None:
                return None
            p = Path(v)
            return p if p.is_absolute() else (base / p)

        try:
            stages = dict(DEFAULT_ON)
            extra = set(d.get("stages", {})) - set(STAGES)
            if extra:
                raise ConfigInvalid(f"unknown stages: {sorted(extra)}")
            stages.update({k: bool(v) for k, v in d.get("stages", {}).items()})
            seeds = {"vocd": 0, "cv": 0, "agreement": 0}
            extra = set(d.get("seeds", {})) - set(seeds)
            if extra:
                raise ConfigInvalid(f"unknown seed names: {sorted(extra)}")
            seeds.update({k: int(v) for k, v in d.get("seeds", {}).items()})
            cvd = dict(d.get("cv", {}))
            for k in ("models", "feature_sets"):
                if k in cvd:
                    cvd[k] = tuple(cvd[k])
            cv = CVSettings(**cvd)
            bad = set(cv.feature_sets) - set(FEATURE_SETS)
            if bad:
                raise ConfigInvalid(f"unknown feature sets: {sorted(bad)}")
            GBMParams(**cv.gbm)
            cfg = cls(
                corpus_dir=path(d["corpus_dir"]),
                output_dir=path(d["output_dir"]),
                cache_dir=path(d.get("cache_dir")),
                ratings=path(d.get("ratings")),
                judge=JudgeConfig.from_dict(d.get("judge", {})),
                backend=dict(d.get("backend", {"kind": "mock"})),
                filter=FilterConfig.from_dict(d.get("filter", {})),
                seeds=seeds, stages=stages, cv=cv,
                agreement_boot=int(d.get("agreement_boot", 1000)),
                plots=bool(d.get("plots", True)),
            )
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc
        except ConfigInvalid:
            raise
        except ConfigError as exc:
            raise ConfigInvalid(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigInvalid(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(d, path.parent)

    def validate(self):
        if not self.corpus_dir.is_dir():
            raise ConfigInvalid(f"corpus_dir does not exist: {self.corpus_dir}")
        if self.ratings is not None and not self.ratings.is_file():
            raise ConfigInvalid(f"ratings file does not exist: {self.ratings}")
        if self.cv.k < 2:
            raise ConfigInvalid("cv.k must be at least 2")
        kind = self.backend.get("kind", "mock")
        if kind not in ("mock", "http"):
            raise ConfigInvalid(f"unknown backend kind {kind!r}")

    def with_seed(self, seed: int) -> "PipelineConfig":
        c = copy.deepcopy(self)
        c.seeds = {k: int(seed) for k in c.seeds}
        return c

    def to_dict(self) -> dict:
        """Canonical form; paths are kept out so relocated runs hash equally."""
        cv = dataclasses.asdict(self.cv)
        cv["models"], cv["feature_sets"] = list(cv["models"]), list(cv["feature_sets"])
        return {
            "judge": dataclasses.asdict(self.judge) | {"cache_dir": None},
            "backend": self.backend,
            "filter": self.filter.to_dict(),
            "seeds": dict(sorted(self.seeds.items())),
            "stages": {s: self.stages[s] for s in STAGES},
            "cv": cv,
            "agreement_boot": self.agreement_boot,
            "plots": self.plots,
            "ratings": None if self.ratings is None else self.ratings.name,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------- io helpers

def atomic_write(path: Path, data: bytes | str):
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_hash(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n").encode()


def _num(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else round(x, 12)


# ---------------------------------------------------------------- manifest

@dataclass
class StageReport:
    stage: str
    outputs: list[str]
    skipped: bool = False
    summary: dict = field(default_factory=dict)


class Manifest:
    def __init__(self, path: Path):
        self.path = path
        self.data = {"config_hash": None, "seeds": {}, "stages": {}}
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                self.data = json.load(fh)

    def entry(self, stage: str) -> dict | None:
        return self.data["stages"].get(stage)

    def record(self, stage: str, cfg_hash: str, seeds: dict, inputs: dict, outputs: dict):
        self.data["config_hash"] = cfg_hash
        self.data["seeds"] = dict(sorted(seeds.items()))
        self.data["stages"][stage] = {"config_hash": cfg_hash, "inputs": inputs, "outputs": outputs}
        ordered = {s: self.data["stages"][s] for s in STAGES if s in self.data["stages"]}
        self.data["stages"] = ordered
        atomic_write(self.path, _json_bytes(self.data))


# ---------------------------------------------------------------- stages

def _rows(out: Path) -> list[AnalysisRow]:
    return join_rows(read_pairs_jsonl(out / "pairs.jsonl"),
                     read_annotations_jsonl(out / "annotations.jsonl"))


def _usable(rows):
    return [r for r in rows if r.usable]


def stage_ingest(cfg: PipelineConfig) -> dict[str, bytes]:
    sessions, pairs = ingest_directory(cfg.corpus_dir, cfg.filter)
    buf = io.StringIO()
    write_pairs_jsonl(pairs, buf)
    summary = [{
        "session": s.ref, "source": s.source, "age": s.child_age_years,
        "excluded": s.excluded, "reason": s.exclusion_reason, "detail": s.exclusion_detail,
        "n_utterances": len(s.utterances),
    } for s in sessions]
    return {"pairs.jsonl": buf.getvalue().encode(), "sessions.json": _json_bytes(summary)}


def stage_annotate(cfg: PipelineConfig) -> dict[str, bytes]:
    pairs = read_pairs_jsonl(cfg.output_dir / "pairs.jsonl")
    backend = make_backend(cfg.backend)
    cache = VerdictCache(cfg.cache_dir or cfg.judge.cache_dir)
    annotator = Annotator(backend, cfg.judge, cache)
    anns = annotator.annotate(pairs)
    log.info("annotate: %s", annotator.stats.as_dict())
    buf = io.StringIO()
    write_annotations_jsonl(anns, buf)
    return {"annotations.jsonl": buf.getvalue().encode()}


CELL_FIELDS = ("vocdD", "FKGL", "GFI")


def _text_metrics(utterances, seed) -> dict[str, float]:
    stats = TextStats.from_utterances(utterances)
    try:
        d = vocd_d([t for u in utterances for t in u], seed=seed)
    except InsufficientTokens:
        d = float("nan")
    try:
        f, g = fkgl(stats), gfi(stats)
    except DataError:
        f = g = float("nan")
    return {"vocdD": d, "FKGL": f, "GFI": g}


def stage_metrics(cfg: PipelineConfig) -> dict[str, bytes]:
    rows = _usable(_rows(cfg.output_dir))
    seed = cfg.seeds["vocd"]
    by_child: dict[str, list] = defaultdict(list)
    by_cell: dict[tuple[str, PTType], list] = defaultdict(list)
    for r in rows:
        by_child[r.child_key].append(list(r.tokens))
        by_cell[(r.child_key, r.pt)].append(list(r.tokens))
    b = io.StringIO()
    w = csv.writer(b, lineterminator="\n")
    w.writerow(["child_key", "mlu", "vocd_d", "fkgl", "gfi"])
    for k in sorted(by_child):
        m = child_baselines(by_child[k], seed=seed)
        w.writerow([k] + [repr(float(m[f])) for f in ("mlu", "vocd_d", "fkgl", "gfi")])
    c = io.StringIO()
    w = csv.writer(c, lineterminator="\n")
    w.writerow(["child_key", "pt"] + list(CELL_FIELDS))
    for k in sorted(by_cell, key=lambda k: (k[0], PT_ORDER.index(k[1]))):
        m = _text_metrics(by_cell[k], seed)
        w.writerow([k[0], k[1].value] + [repr(float(m[f])) for f in CELL_FIELDS])
    return {"child_baselines.csv": b.getvalue().encode(), "cell_baselines.csv": c.getvalue().encode()}


def _read_child_baselines(path: Path) -> dict[str, dict[str, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {r["child_key"]: {k: float(r[k]) for k in ("mlu", "vocd_d", "fkgl", "gfi")}
                for r in csv.DictReader(fh)}


def _read_cell_baselines(path: Path) -> dict[tuple[str, PTType], dict[str, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {(r["child_key"], PTType(r["pt"])): {k: float(r[k]) for k in CELL_FIELDS}
                for r in csv.DictReader(fh)}


def stage_features(cfg: PipelineConfig) -> dict[str, bytes]:
    rows = _rows(cfg.output_dir)
    baselines = _read_child_baselines(cfg.output_dir / "child_baselines.csv")
    vectors = build_feature_table(rows, baselines)
    buf = io.StringIO()
    write_features_csv(vectors, buf)
    return {"features.csv": buf.getvalue().encode()}


def stage_predict(cfg: PipelineConfig) -> dict[str, bytes]:
    vectors = read_features_csv(cfg.output_dir / "features.csv")
    k = min(cfg.cv.k, len(vectors))
    if k < 2:
        raise DataError("age prediction needs at least two children")
    seed = cfg.seeds["cv"]
    gbm = GBMParams(**({"seed": seed} | cfg.cv.gbm))
    results = []
    for fs in cfg.cv.feature_sets:
        X, y, ids = feature_matrix(vectors, fs)
        for model in cfg.cv.models:
            r = cross_validate(X, y, ids, model=model, k=k, seed=seed, gbm=gbm,
                               n_boot=cfg.cv.n_boot, level=cfg.cv.level, feature_set=fs)
            results.append({
                "feature_set": fs, "model": model, "k": k,
                "mean": {m: _num(v) for m, v in r.mean.items()},
                "pooled": {m: _num(v) for m, v in r.pooled.items()},
                "ci": {m: [_num(a), _num(b)] for m, (a, b) in r.ci.items()},
                "folds": {m: [_num(v) for v in vals] for m, vals in r.fold_metrics.items()},
            })
    return {"prediction.json": _json_bytes({"n_children": len(vectors), "results": results})}


ANALYSES = (
    [(s, o) for s in (SpecId.TOTAL, SpecId.DIRECT) for o in Outcome]
    + [(s, o) for s in (SpecId.S1, SpecId.S2) for o in (Outcome.MLU, Outcome.E, Outcome.I)]
)


def _fit_record(spec_id: SpecId, outcome: Outcome, data) -> dict:
    rec = {"spec": spec_id.value, "outcome": outcome.value,
           "model": "CLMM" if outcome.ordinal else "LMM"}
    try:
        spec, fit = fit_spec(data, spec_id, outcome)
    except DataError as exc:
        rec.update(status="failed", reason=f"{type(exc).__name__}: {exc}", terms={},
                   dropped=list(getattr(exc, "columns", ()) or ()))
        return rec
    terms = {}
    for name, t in term_table(fit).items():
        terms[name] = {"estimate": _num(t.estimate), "se": _num(t.se), "p": _num(t.p),
                       "odds_ratio": _num(t.odds_ratio), "band": t.band}
    rec.update(status="ok", n_rows=spec.n_rows, n_groups=fit.n_groups, dropped=spec.dropped_terms,
               terms=terms)
    if isinstance(fit, LMMFit):
        rec["sigma_u2"], rec["sigma_e2"] = _num(fit.sigma_u2), _num(fit.sigma_e2)
    else:
        rec["sigma_u"] = _num(fit.sigma_u)
        rec["thresholds"] = [_num(v) for v in fit.thresholds]
    return rec


def stage_analyze(cfg: PipelineConfig) -> dict[str, bytes]:
    rows = _usable(_rows(cfg.output_dir))
    if not rows:
        raise DataError("no usable annotated rows to analyze")
    comps = length_components(rows)
    markers = np.array([[f.causal, f.contrast, f.initiative]
                        for f in (detect_markers(r.tokens) for r in rows)], dtype=float)
    utt = utterance_data(rows, comps, markers)
    cells = cell_data(rows, comps, _read_cell_baselines(cfg.output_dir / "cell_baselines.csv"))
    fits = []
    for spec_id, outcome in ANALYSES:
        data = cells if outcome.value in CELL_FIELDS else utt
        fits.append(_fit_record(spec_id, outcome, data))
    return {"effects.json": _json_bytes({"n_rows": len(rows), "fits": fits})}


def _stat(name, fn, m, n_boot, seed):
    try:
        value = fn(m)
    except DataError as exc:
        return {"name": name, "value": None, "ci": [None, None], "reason": type(exc).__name__}
    lo, hi = agr.agreement_ci(fn, m, n_boot=n_boot, seed=seed) if n_boot else (None, None)
    return {"name": name, "value": _num(value), "ci": [_num(lo), _num(hi)]}


def stage_agree(cfg: PipelineConfig) -> dict[str, bytes]:
    if cfg.ratings is None:
        return {"agreement.json": _json_bytes({"tasks": [], "note": "no ratings file configured"})}
    anns = {a.pair_ref: a for a in read_annotations_jsonl(cfg.output_dir / "annotations.jsonl")}
    mats = agr.read_ratings_csv(cfg.ratings)
    seed, nb = cfg.seeds["agreement"], cfg.agreement_boot
    tasks = []
    for task, m in mats.items():
        stats = [_stat("krippendorff_alpha", agr.krippendorff_alpha, m, nb, seed)]
        if m.scale is agr.Scale.NOMINAL:
            if m.complete:
                stats.append(_stat("fleiss_kappa", agr.fleiss_kappa, m, nb, seed))
            stats.append(_stat("cohen_kappa_avg", agr.cohen_kappa_avg, m, nb, seed))
        elif task in ("E", "I"):
            missing = [i for i in m.item_ids if i not in anns or anns[i].ei is None]
            if missing:
                raise agr.AlignmentMismatch(f"{len(missing)} rated items lack model scores, "
                                            f"e.g. {missing[0]!r}")
            attr = "expansion" if task == "E" else "independence"
            scores = [getattr(anns[i].ei, attr) for i in m.item_ids]
            stats.append({"name": "mae_model_to_raters",
                          "value": _num(agr.mae_to_raters(scores, m)), "ci": [None, None]})
        tasks.append({"task": task, "scale": m.scale.value, "n_items": m.n_items,
                      "n_raters": m.n_raters, "statistics": stats})
    return {"agreement.json": _json_bytes({"tasks": tasks})}


def stage_report(cfg: PipelineConfig) -> dict[str, bytes]:
    out = cfg.output_dir
    rows = _rows(out)

    def load(name):
        with open(out / name, encoding="utf-8") as fh:
            return json.load(fh)

    files = rpt.build_report(rows, load("effects.json"), load("prediction.json"),
                             load("agreement.json"), plots=cfg.plots)
    return {f"report/{k}": v for k, v in files.items()}


def stage_llm_age(cfg: PipelineConfig) -> dict[str, bytes]:
    """Send each child's utterances through the direct age prompt."""
    pairs = read_pairs_jsonl(cfg.output_dir / "pairs.jsonl")
    backend = make_backend(cfg.backend)
    by_child: dict[str, list] = defaultdict(list)
    ages: dict[str, list[float]] = defaultdict(list)
    for p in pairs:
        key = f"{p.corpus_id}/{p.child_id}"
        if p.child.clean_tokens:
            by_child[key].append(display_text(p.child))
        ages[key].append(float(p.child_age_years))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["child_key", "target_age", "predicted_age", "status"])
    for key in sorted(by_child):
        target = float(np.mean(sorted(set(ages[key]))))
        reply = backend.complete(render_age_prompt(by_child[key]))
        try:
            pred, status = repr(parse_age_reply(reply)), "ok"
        except FormatViolation:
            pred, status = "", "unparseable"
        w.writerow([key, repr(target), pred, status])
    return {"llm_age.csv": buf.getvalue().encode()}


STAGE_FUNCS: dict[str, Callable[[PipelineConfig], dict[str, bytes]]] = {
    "ingest": stage_ingest,
    "annotate": stage_annotate,
    "metrics": stage_metrics,
    "features": stage_features,
    "predict-age": stage_predict,
    "analyze": stage_analyze,
    "agree": stage_agree,
    "report": stage_report,
    "llm-age": stage_llm_age,
}


def _stage_inputs(stage: str, cfg: PipelineConfig, manifest: Manifest) -> dict[str, str]:
    out = cfg.output_dir
    if stage == "ingest":
        root = cfg.corpus_dir
        return {f"corpus/{p.relative_to(root).as_posix()}": file_hash(p)
                for p in sorted(root.rglob("*.cha"))}
    inputs = {}
    for pre in _closure(stage):
        ent = manifest.entry(pre)
        names = list(ent["outputs"]) if ent else list(ARTIFACTS[pre])
        for name in names:
            p = out / name
            if not p.exists():
                raise MissingPrerequisite(f"stage {stage!r} needs {name} from {pre!r}; run {pre!r} first")
            inputs[name] = file_hash(p)
    if stage == "agree" and cfg.ratings is not None:
        inputs[f"ratings/{cfg.ratings.name}"] = file_hash(cfg.ratings)
    return inputs


def run_stage(stage: str, cfg: PipelineConfig, force: bool = False) -> StageReport:
    if stage not in STAGE_FUNCS:
        raise ConfigInvalid(f"unknown stage {stage!r}; choose from {', '.join(STAGES)}")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg.output_dir / "manifest.json")
    inputs = _stage_inputs(stage, cfg, manifest)
    cfg_hash = cfg.hash()
    prev = manifest.entry(stage)
    if (not force and prev and prev["inputs"] == inputs and prev["config_hash"] == cfg_hash
            and all((cfg.output_dir / n).exists() and file_hash(cfg.output_dir / n) == h
                    for n, h in prev["outputs"].items())):
        log.info("%s: up to date", stage)
        return StageReport(stage, sorted(prev["outputs"]), skipped=True)
    files = STAGE_FUNCS[stage](cfg)
    for name, data in sorted(files.items()):
        atomic_write(cfg.output_dir / name, data)
    outputs = {n: hashlib.sha256(d).hexdigest() for n, d in sorted(files.items())}
    manifest.record(stage, cfg_hash, cfg.seeds, inputs, outputs)
    log.info("%s: wrote %d file(s)", stage, len(files))
    return StageReport(stage, sorted(files), summary={"n_files": len(files)})


def run_pipeline(cfg: PipelineConfig, stages=None, force: bool = False) -> list[StageReport]:
    """Run the selected (default: enabled) stages in dependency order."""
    if stages is None:
        selected = [s for s in STAGES if cfg.stages.get(s)]
    else:
        bad = set(stages) - set(STAGES)
        if bad:
            raise ConfigInvalid(f"unknown stages: {sorted(bad)}")
        selected = [s for s in STAGES if s in set(stages)]
    return [run_stage(s, cfg, force=force) for s in selected]


def default_config(output_dir: str | Path, corpus_dir: str | Path | None = None, **over) -> PipelineConfig:
    """Config for the bundled fixture corpus and mock judge."""
    from importlib import resources
    data = resources.files("childtalk") / "data"
    d = {"corpus_dir": str(corpus_dir or data / "fixture_corpus"), "output_dir": str(output_dir)}
    ratings = data / "fixture_ratings.csv"
    if ratings.is_file():
        d["ratings"] = str(ratings)
    d.update(over)
    return PipelineConfig.from_dict(d)
