"""Acceptance gate: one group of checks per criterion, each at its stated tolerance.

Every test carries ``@pytest.mark.criterion(n, title)``; the terminal summary
prints one PASS/FAIL line per criterion. Replication loops use seeds 0..99
fixed in advance.
"""
import time

import numpy as np
import pytest

from childtalk.agreement import (
    RatingsMatrix,
    agreement_ci,
    cohen_kappa,
    cohen_kappa_avg,
    fleiss_kappa,
    krippendorff_alpha,
    mae_to_raters,
)
from childtalk.baselines import TextStats, fkgl, gfi, mlu, ttr, vocd_d
from childtalk.corpus import clean_utterance, parse_age
from childtalk.features import build_feature_table, feature_matrix, length_components
from childtalk.judge.prompts import (
    parse_ei_response,
    parse_pt_response,
    render_ei_output,
    render_pt_output,
)
from childtalk.judge.taxonomy import FormatViolation
from childtalk.mixedfx import CLMMObjective, fit_clmm, fit_lmm, fit_spec, term_table, utterance_data
from childtalk.models import GBMParams, cross_validate, group_kfold, ols_fit
from childtalk.pipeline import default_config, run_pipeline
from childtalk.simulate import simulate_age_corpus, simulate_development, simulate_markers

from judge_cases import MALFORMED_EI, MALFORMED_PT, random_ei_verdict, random_pt_verdict
from oracles import normal_equations, pom_newton, random_session, vocd_grid_oracle
from test_baselines import PINNED, _stream
from test_corpus import check_alignment

SEEDS = range(100)
REQUIRED = 95


# ------------------------------------------------------------------ 1

C1 = "preprocessing fidelity"


@pytest.mark.criterion(1, C1)
def test_c1_worked_examples():
    assert parse_age("P6Y07M") == 6.58
    assert parse_age("4;7.0") == 4.58
    assert clean_utterance("under_score_word") == (["under", "score", "word"], False)
    assert clean_utterance("xxx") == ([], True)
    assert clean_utterance("I want xxx cookie .") == (["I", "want", "cookie"], False)


@pytest.mark.criterion(1, C1)
def test_c1_alignment_oracle(detail):
    rng = np.random.default_rng(2024)
    sessions = [random_session(rng) for _ in range(1000)]
    t0 = time.perf_counter()
    for text, items in sessions:
        check_alignment(text, items)
    elapsed = time.perf_counter() - t0
    detail(f"1000 sessions in {elapsed:.2f}s")
    assert elapsed < 5.0


# ------------------------------------------------------------------ 2

C2 = "prompt/verdict round-trip"


@pytest.mark.criterion(2, C2)
def test_c2_round_trip(detail):
    rng = np.random.default_rng(7)
    failures = 0
    for _ in range(500):
        pt, ei = random_pt_verdict(rng), random_ei_verdict(rng)
        ok = (parse_pt_response(render_pt_output(pt), len(pt)) == pt
              and parse_ei_response(render_ei_output(ei), len(ei)) == ei)
        failures += not ok
    detail(f"{failures} round-trip failures in 500")
    assert failures == 0


@pytest.mark.criterion(2, C2)
def test_c2_malformed_corpus(detail):
    raised = 0
    for parse, cases in ((parse_pt_response, MALFORMED_PT), (parse_ei_response, MALFORMED_EI)):
        for reply, count in cases:
            try:
                parse(reply, count)
            except FormatViolation:
                raised += 1
    detail(f"{raised}/20 malformed replies rejected")
    assert raised == 20


# ------------------------------------------------------------------ 3

C3 = "baseline oracles"


@pytest.mark.criterion(3, C3)
def test_c3_readability_pinned():
    for texts, _, fk, gf in PINNED:
        stats = TextStats.from_utterances([t.split() for t in texts])
        assert abs(fkgl(stats) - fk) <= 0.01
        assert abs(gfi(stats) - gf) <= 0.01


@pytest.mark.criterion(3, C3)
def test_c3_vocd_grid(detail):
    worst = 0.0
    for seed, vocab, a in [(0, 150, 1.1), (1, 60, 0.9), (2, 300, 1.2), (3, 40, 0.5), (4, 500, 1.0)]:
        tokens = _stream(seed, vocab=vocab, a=a)
        rel = abs(vocd_d(tokens, seed=seed) / vocd_grid_oracle(tokens) - 1)
        worst = max(worst, rel)
    detail(f"max vocd-D relative error {worst:.2%}")
    assert worst <= 0.05


@pytest.mark.criterion(3, C3)
def test_c3_mlu_ttr():
    assert mlu([["the", "dog", "runs"]]) == 3.0
    assert mlu([["dog"], ["cute", "dog"]]) == 1.5
    assert ttr(["dog", "dog"]) == 0.5
    assert ttr(["Dog", "dog", "cat"]) == 2 / 3


# ------------------------------------------------------------------ 4

C4 = "length-mediated age effects on simulated data"


def _c4_seed(seed):
    sc = simulate_development(seed)
    data = utterance_data(sc.rows, length_components(sc.rows))
    tot_e = term_table(fit_spec(data, "Total", "E")[1])
    dir_e = term_table(fit_spec(data, "Direct", "E")[1])
    dir_i = term_table(fit_spec(data, "Direct", "I")[1])
    cells = (
        tot_e["Age_z"].odds_ratio > 1 and tot_e["Age_z"].p < 0.05,
        dir_e["Age_z"].p >= 0.05,
        dir_e["L_w_z"].odds_ratio > 2 and dir_e["L_w_z"].p < 0.001,
        dir_i["Age_z"].odds_ratio < 1 and dir_i["Age_z"].p < 0.05,
    )
    return cells


@pytest.mark.slow
@pytest.mark.criterion(4, C4)
def test_c4_mechanism(detail):
    t0 = time.perf_counter()
    per_cell = np.zeros(4, int)
    hits = 0
    for seed in SEEDS:
        cells = _c4_seed(seed)
        per_cell += cells
        hits += all(cells)
    elapsed = time.perf_counter() - t0
    detail(f"{hits}/100 seeds, cells {per_cell.tolist()}, {elapsed:.0f}s")
    assert elapsed < 600
    assert hits >= REQUIRED


# ------------------------------------------------------------------ 5

C5 = "estimator correctness"


def _group_centre(v, codes):
    means = np.array([v[codes == c].mean(axis=0) for c in range(codes.max() + 1)])
    return v - means[codes]


def _ordinal_sample(rng, G, m, beta, sigma, theta=(-1.0, 0.0, 1.2)):
    g = np.repeat(np.arange(G), m)
    n = G * m
    X = rng.normal(size=(n, len(beta)))
    u = rng.normal(0, sigma, G)[g] if sigma else np.zeros(n)
    eta = X @ np.asarray(beta) + u
    cum = 1 / (1 + np.exp(-(np.asarray(theta)[None, :] - eta[:, None])))
    y = 1 + (rng.random(n)[:, None] > cum).sum(axis=1)
    return X, y, g, u


@pytest.mark.criterion(5, C5)
def test_c5_lmm_matches_ols():
    rng = np.random.default_rng(0)
    codes = np.arange(300) % 30
    X = _group_centre(rng.normal(size=(300, 3)), codes)
    y = 2.0 + X @ [1.0, -0.5, 0.25] + _group_centre(rng.normal(size=300), codes)
    fit = fit_lmm(X, y, codes)
    b0, b = normal_equations(X, y)
    ols = ols_fit(X, y)
    assert fit.sigma_u2 < 1e-6
    assert abs(fit.beta[0] - b0) <= 1e-4 and np.max(np.abs(fit.beta[1:] - b)) <= 1e-4
    assert np.max(np.abs(fit.beta[1:] - ols.coefficients)) <= 1e-4


@pytest.mark.criterion(5, C5)
def test_c5_clmm_matches_pom(detail):
    worst = 0.0
    for seed in range(3):
        rng = np.random.default_rng(seed)
        X, y, g, _ = _ordinal_sample(rng, 40, 10, (0.7, -0.4), 0.0)
        fit = fit_clmm(X, y, g, fixed_sigma0=True)
        theta, beta, _ = pom_newton(X, y - 1)
        worst = max(worst, np.max(np.abs(fit.thresholds - theta)), np.max(np.abs(fit.beta - beta)))
    detail(f"max POM deviation {worst:.1e}")
    assert worst <= 1e-3


@pytest.mark.criterion(5, C5)
def test_c5_gradient(detail):
    rng = np.random.default_rng(11)
    X, y, g, _ = _ordinal_sample(rng, 10, 5, (0.8, -0.5), 0.8)
    obj = CLMMObjective(X, y, g, inner_tol=1e-13)
    psi = obj.start() + rng.normal(0, 0.2, obj.dim)
    _, grad = obj.value_and_grad(psi)
    h = 1e-5
    fd = np.array([(obj.value_and_grad(psi + h * e)[0] - obj.value_and_grad(psi - h * e)[0]) / (2 * h)
                   for e in np.eye(obj.dim)])
    rel = np.linalg.norm(fd - grad) / np.linalg.norm(fd)
    detail(f"gradient relative error {rel:.1e}")
    assert rel < 1e-4


@pytest.mark.slow
@pytest.mark.criterion(5, C5)
def test_c5_wald_coverage(detail):
    beta = np.array([0.5, -0.3])
    cover_c = np.zeros(2)
    cover_l = np.zeros(2)
    for rep in SEEDS:
        rng = np.random.default_rng(1000 + rep)
        X, y, g, u = _ordinal_sample(rng, 200, 20, beta, 0.8)
        f = fit_clmm(X, y, g)
        cover_c += np.abs(f.beta - beta) <= 1.959963984540054 * f.se_beta
        yl = 1.0 + X @ beta + u + rng.normal(size=len(y))
        fl = fit_lmm(X, yl, g)
        cover_l += np.abs(fl.beta[1:] - beta) <= 1.959963984540054 * fl.se_beta[1:]
    detail(f"coverage CLMM {cover_c.astype(int).tolist()}, LMM {cover_l.astype(int).tolist()} of 100")
    assert np.all(cover_c >= 85) and np.all(cover_l >= 85)


# ------------------------------------------------------------------ 6

C6 = "grouped prediction protocol"


@pytest.mark.criterion(6, C6)
def test_c6_no_leakage(detail):
    rng = np.random.default_rng(6)
    leaks = 0
    for _ in range(1000):
        n_groups = int(rng.integers(5, 60))
        groups = rng.integers(0, n_groups, int(rng.integers(n_groups, 400)))
        k = int(rng.integers(2, 6))
        if len(set(groups.tolist())) < k:
            continue
        for train, test in group_kfold(groups.tolist(), k, seed=int(rng.integers(1 << 30))):
            leaks += len(set(groups[train]) & set(groups[test]))
            assert len(train) + len(test) == len(groups)
    detail(f"{leaks} leaked children")
    assert leaks == 0


def _c6_seed(seed):
    sc = simulate_age_corpus(seed)
    utts = {}
    for r in sc.rows:
        utts.setdefault(r.child_key, []).append(list(r.tokens))
    base = {k: {"mlu": mlu(v), "vocd_d": float("nan"), "fkgl": 0.0, "gfi": 0.0} for k, v in utts.items()}
    vecs = build_feature_table(sc.rows, base)
    out = {}
    for model in ("OLS", "GBM"):
        mae = {}
        for fs in ("E + I + PT", "MLU"):
            X, y, g = feature_matrix(vecs, fs)
            rep = cross_validate(X, y, g, model=model, seed=seed, n_boot=0,
                                 gbm=GBMParams(n_estimators=100, seed=seed))
            mae[fs] = rep.mean["MAE"]
        out[model] = mae["E + I + PT"] < mae["MLU"]
    return out


@pytest.mark.slow
@pytest.mark.criterion(6, C6)
def test_c6_ours_beats_mlu(detail):
    wins = {"OLS": 0, "GBM": 0}
    for seed in SEEDS:
        for model, won in _c6_seed(seed).items():
            wins[model] += won
    detail(f"E+I+PT < MLU in OLS {wins['OLS']}/100, GBM {wins['GBM']}/100")
    assert min(wins.values()) >= REQUIRED


# ------------------------------------------------------------------ 7

C7 = "marker sensitivity within matched length cells"


def _c7_seed(seed):
    sc = simulate_markers(seed)
    data = utterance_data(sc.rows, length_components(sc.rows), markers=sc.markers)
    ok = True
    for oc in ("E", "I"):
        s1 = term_table(fit_spec(data, "S1", oc)[1])
        s2 = term_table(fit_spec(data, "S2", oc)[1])
        for t in ("M[causal]", "M[contrast]", "M[initiative]"):
            ok &= s1[t].odds_ratio > 1 and s1[t].p < 0.001
            ok &= s2[t].odds_ratio > 1 and s2[t].p < 0.05
    mlu_tt = term_table(fit_spec(data, "S1", "MLU")[1])
    ok &= all(abs(mlu_tt[t].estimate) < 0.2 for t in ("M[causal]", "M[contrast]", "M[initiative]"))
    return ok


@pytest.mark.slow
@pytest.mark.criterion(7, C7)
def test_c7_mechanism(detail):
    hits = sum(_c7_seed(seed) for seed in SEEDS)
    detail(f"{hits}/100 seeds")
    assert hits >= REQUIRED


# ------------------------------------------------------------------ 8

C8 = "agreement statistics"


@pytest.mark.criterion(8, C8)
def test_c8_fixtures():
    perfect = RatingsMatrix([["a"] * 3, ["b"] * 3, ["c"] * 3], "nominal")
    assert krippendorff_alpha(perfect) == 1.0
    assert fleiss_kappa(perfect) == 1.0 and cohen_kappa_avg(perfect) == 1.0
    assert krippendorff_alpha(RatingsMatrix([["a", "b"], ["b", "a"]])) == -0.5
    a = ["y"] * 25 + ["n"] * 25
    b = ["y"] * 20 + ["n"] * 5 + ["y"] * 10 + ["n"] * 15
    assert cohen_kappa(a, b) == pytest.approx(0.40, abs=1e-12)
    chance = RatingsMatrix([["a", "a"], ["b", "b"], ["a", "b"], ["b", "a"]])
    assert abs(fleiss_kappa(chance)) < 1e-9
    r1 = [2, 5, 7, 9]
    assert mae_to_raters(r1, RatingsMatrix([[v, v + 2] for v in r1], "ordinal")) == 1.0
    assert mae_to_raters(r1, RatingsMatrix([[v, v] for v in r1], "ordinal")) == 0.0


@pytest.mark.criterion(8, C8)
def test_c8_cis_contain_points(detail):
    checked = 0
    for seed in range(30):
        rng = np.random.default_rng(seed)
        base = rng.integers(1, 11, 40)
        rows = [[int(np.clip(v + rng.integers(-2, 3) * (rng.random() < 0.4), 1, 10)) for _ in range(3)]
                for v in base]
        for m, fns in ((RatingsMatrix(rows, "ordinal"), [krippendorff_alpha]),
                       (RatingsMatrix([[str(v) for v in r] for r in rows], "nominal"),
                        [krippendorff_alpha, fleiss_kappa, cohen_kappa_avg])):
            for fn in fns:
                lo, hi = agreement_ci(fn, m, n_boot=300, seed=seed)
                assert lo <= fn(m) <= hi
                checked += 1
    detail(f"{checked} intervals checked")


# ------------------------------------------------------------------ 9

C9 = "end-to-end determinism"


@pytest.mark.criterion(9, C9)
def test_c9_two_runs_identical(tmp_path, detail):
    t0 = time.perf_counter()
    reports = []
    for name in ("a", "b"):
        out = tmp_path / name
        run_pipeline(default_config(out))
        reports.append({p.relative_to(out).as_posix(): p.read_bytes()
                        for p in sorted((out / "report").rglob("*")) if p.is_file()})
    elapsed = time.perf_counter() - t0
    detail(f"{len(reports[0])} report files, {elapsed:.0f}s for two runs")
    assert reports[0] and reports[0] == reports[1]
    assert elapsed < 60
