import csv
import json

import pytest

from childtalk.cli import main
from childtalk.pipeline import (
    ARTIFACTS,
    PREREQUISITES,
    STAGES,
    ConfigInvalid,
    MissingPrerequisite,
    PipelineConfig,
    default_config,
    run_pipeline,
    run_stage,
)

FAST = {"cv": {"n_boot": 20, "gbm": {"n_estimators": 30}}, "agreement_boot": 20}


@pytest.fixture(scope="module")
def fast_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = default_config(out, **FAST)
    reports = run_pipeline(cfg)
    return cfg, reports


def test_stage_graph_is_acyclic():
    pos = {s: i for i, s in enumerate(STAGES)}
    for s, pres in PREREQUISITES.items():
        assert all(pos[p] < pos[s] for p in pres)


def test_ingest_pair_count(tmp_path):
    cfg = default_config(tmp_path)
    run_stage("ingest", cfg)
    with open(tmp_path / "pairs.jsonl") as fh:
        assert sum(1 for _ in fh) == 384


def test_missing_prerequisite(tmp_path):
    cfg = default_config(tmp_path)
    with pytest.raises(MissingPrerequisite):
        run_stage("predict-age", cfg)
    with pytest.raises(ConfigInvalid):
        run_stage("dance", cfg)


def test_full_run_outputs(fast_run):
    cfg, reports = fast_run
    assert [r.stage for r in reports] == [s for s in STAGES if s != "llm-age"]
    out = cfg.output_dir
    for stage, names in ARTIFACTS.items():
        if stage != "llm-age":
            assert all((out / n).exists() for n in names)
    with open(out / "report" / "table1_scores_by_pt.csv") as fh:
        assert len(list(csv.reader(fh))) == 12
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["stages"]) == {s for s in STAGES if s != "llm-age"}
    ent = manifest["stages"]["features"]
    assert set(ent["inputs"]) >= {"pairs.jsonl", "annotations.jsonl", "child_baselines.csv"}
    assert manifest["seeds"] == {"vocd": 0, "cv": 0, "agreement": 0}
    effects = json.loads((out / "effects.json").read_text())
    assert {(f["outcome"], f["spec"]) for f in effects["fits"]} >= {("E", "Total"), ("I", "Direct")}


def test_rerun_skips_and_force_is_byte_identical(fast_run):
    cfg, _ = fast_run
    before = {p: p.read_bytes() for p in cfg.output_dir.rglob("*") if p.is_file()}
    assert all(r.skipped for r in run_pipeline(cfg))
    forced = run_pipeline(cfg, stages=["ingest", "annotate", "metrics", "features", "analyze"], force=True)
    assert not any(r.skipped for r in forced)
    after = {p: p.read_bytes() for p in cfg.output_dir.rglob("*") if p.is_file()}
    assert before == after


def test_changed_input_reruns_downstream(tmp_path):
    cfg = default_config(tmp_path)
    run_pipeline(cfg, stages=["ingest", "annotate"])
    (tmp_path / "pairs.jsonl").write_text("")
    assert not run_stage("annotate", cfg).skipped


@pytest.mark.parametrize("bad", [
    {"output_dir": "x"},
    {"corpus_dir": ".", "output_dir": "x", "colour": "blue"},
    {"corpus_dir": ".", "output_dir": "x", "stages": {"dance": True}},
    {"corpus_dir": ".", "output_dir": "x", "seeds": {"lucky": 7}},
    {"corpus_dir": ".", "output_dir": "x", "cv": {"feature_sets": ["Horoscope"]}},
    {"corpus_dir": ".", "output_dir": "x", "cv": {"bogus": 1}},
    {"corpus_dir": "/no/such/dir", "output_dir": "x"},
    {"corpus_dir": ".", "output_dir": "x", "cv": {"k": 1}},
    {"corpus_dir": ".", "output_dir": "x", "backend": {"kind": "telepathy"}},
])
def test_config_invalid(bad, tmp_path):
    with pytest.raises(ConfigInvalid):
        PipelineConfig.from_dict(bad, base_dir=tmp_path).validate()


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigInvalid):
        PipelineConfig.load(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        PipelineConfig.load(p)


def test_seed_override_changes_hash(tmp_path):
    cfg = default_config(tmp_path)
    other = cfg.with_seed(5)
    assert other.seeds == {"vocd": 5, "cv": 5, "agreement": 5}
    assert other.hash() != cfg.hash()


# ------------------------------------------------------------------ CLI

def test_cli_exit_codes(tmp_path, capsys):
    assert main(["ingest", "-o", str(tmp_path / "a")]) == 0
    assert "ingest: done" in capsys.readouterr().out
    assert main(["ingest", "-o", str(tmp_path / "a")]) == 0
    assert "up to date" in capsys.readouterr().out
    assert main(["predict-age", "-o", str(tmp_path / "b")]) == 3
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"corpus_dir": "/no/such", "output_dir": "x"}))
    assert main(["ingest", "--config", str(cfg)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
