import numpy as np
import pytest
from hypothesis import given, strategies as st

from childtalk.baselines import (
    InsufficientTokens,
    TextStats,
    child_baselines,
    count_syllables,
    fit_vocd,
    fkgl,
    gfi,
    mlu,
    ttr,
    vocd_curve,
    vocd_d,
)
from childtalk.errors import EmptyInput

from oracles import vocd_grid_oracle

# utterances, (words, sentences, syllables, complex), FKGL, GFI; counts and values by hand
PINNED = [
    (["the dog runs"], (3, 1, 3, 0), -2.62, 1.2),
    (["I like my cat", "she is big"], (7, 2, 7, 0), -2.425, 1.4),
    (["we ate a banana"], (4, 1, 6, 1), 3.67, 11.6),
    (["an apple", "a little table"], (5, 2, 8, 0), 4.265, 1.0),
    (["yesterday we went to the beautiful park"], (7, 1, 11, 2), 5.6829, 14.2286),
    (["no"], (1, 1, 1, 0), -3.4, 0.4),
    (["my elephant is very happy today", "it eats potatoes"], (9, 2, 16, 2), 7.1428, 10.6889),
    (["the computer is broken again"], (5, 1, 9, 1), 7.6, 10.0),
    (["I want to go home", "can we play outside", "please"], (10, 3, 11, 0), -1.31, 1.3333),
    (["dinosaurs are interesting animals", "because they are enormous"], (8, 2, 18, 4), 12.52, 21.6),
]


@pytest.mark.parametrize("texts,counts,fk,gf", PINNED)
def test_pinned_readability(texts, counts, fk, gf):
    stats = TextStats.from_utterances([t.split() for t in texts])
    assert (stats.n_words, stats.n_sentences, stats.n_syllables, stats.n_complex_words) == counts
    assert fkgl(stats) == pytest.approx(fk, abs=0.01)
    assert gfi(stats) == pytest.approx(gf, abs=0.01)


@pytest.mark.parametrize("w,s,syl,cx,fk,gf", [
    (3, 1, 3, 0, -2.62, 1.2),
    (20, 2, 30, 0, 6.01, None),
    (3, 1, 3, 1, None, 14.53),
])
def test_formula_examples(w, s, syl, cx, fk, gf):
    st_ = TextStats(w, s, syl, cx)
    if fk is not None:
        assert fkgl(st_) == pytest.approx(fk, abs=0.01)
    if gf is not None:
        assert gfi(st_) == pytest.approx(gf, abs=0.01)


def test_readability_rejects_empty():
    with pytest.raises(EmptyInput):
        fkgl(TextStats(0, 1, 0, 0))
    with pytest.raises(EmptyInput):
        gfi(TextStats(3, 0, 3, 0))
    with pytest.raises(ValueError):
        TextStats(2, 1, 2, 3)


@pytest.mark.parametrize("word,n", [
    ("dog", 1), ("apple", 2), ("banana", 3), ("home", 1), ("little", 2), ("tree", 1),
    ("the", 1), ("eye", 1), ("beautiful", 3), ("interesting", 4), ("Table!", 2), ("b", 1),
])
def test_count_syllables(word, n):
    assert count_syllables(word) == n


@pytest.mark.parametrize("utts,value", [
    ([["the", "dog", "runs"]], 3.0),
    ([["dog"], ["cute", "dog"]], 1.5),
    ([["i", "ate", "rice", "and", "played"], ["no"]], 3.0),
    ([["a"], [], ["b", "c", "d"]], 2.0),
])
def test_mlu(utts, value):
    assert mlu(utts) == value


@pytest.mark.parametrize("tokens,value", [
    (["dog", "dog"], 0.5), (["a", "b", "c"], 1.0), (["Dog", "dog", "cat"], 2 / 3),
])
def test_ttr(tokens, value):
    assert ttr(tokens) == pytest.approx(value, abs=1e-15)


def test_empty_inputs():
    with pytest.raises(EmptyInput):
        mlu([[], []])
    with pytest.raises(EmptyInput):
        ttr([])


@given(st.lists(st.sampled_from(["a", "b", "c", "dd", "e"]), min_size=1, max_size=8),
       st.integers(1, 6))
def test_mlu_duplication_invariance(utt, k):
    assert mlu([utt] * k) == len(utt)


@given(st.lists(st.sampled_from(["a", "B", "b", "c"]), min_size=1, max_size=20))
def test_ttr_bounds_and_overlap(tokens):
    v = ttr(tokens)
    assert 0 < v <= 1
    assert ttr(tokens + tokens) <= v


@given(st.integers(1, 30), st.integers(1, 5), st.integers(1, 3), st.integers(0, 3),
       st.integers(2, 4))
def test_readability_increasing_in_sentence_length(w, s, syl_per, cx, scale):
    cx = min(cx, w)
    a = TextStats(w, s, w * syl_per, cx)
    b = TextStats(w * scale, s, w * scale * syl_per, cx * scale)
    assert fkgl(b) > fkgl(a)
    assert gfi(b) > gfi(a)


def _stream(seed, n=500, vocab=150, a=1.1):
    rng = np.random.default_rng(seed)
    p = 1.0 / np.arange(1, vocab + 1) ** a
    return [f"w{i}" for i in rng.choice(vocab, size=n, p=p / p.sum())]


@pytest.mark.parametrize("seed,vocab,a", [(0, 150, 1.1), (1, 60, 0.9), (2, 300, 1.2),
                                          (3, 40, 0.5), (4, 500, 1.0)])
def test_vocd_matches_grid_oracle(seed, vocab, a):
    tokens = _stream(seed, vocab=vocab, a=a)
    assert vocd_d(tokens, seed=seed) == pytest.approx(vocd_grid_oracle(tokens), rel=0.05)


def test_vocd_bounds():
    with pytest.raises(InsufficientTokens):
        vocd_d(["a"] * 40)
    assert vocd_d(["same"] * 200) < 1.0


def test_vocd_deterministic_and_case_invariant():
    tokens = _stream(9)
    assert vocd_d(tokens, seed=3) == vocd_d(tokens, seed=3)
    assert vocd_d([t.upper() for t in tokens], seed=3) == vocd_d(tokens, seed=3)


def test_vocd_shuffle_stability():
    tokens = _stream(5)
    ds = []
    for seed in range(20):
        perm = np.random.default_rng(100 + seed).permutation(len(tokens))
        ds.append(vocd_d([tokens[i] for i in perm], seed=seed))
    ds = np.array(ds)
    assert np.all(np.abs(ds[1:] - ds[:-1]) / ds[:-1] < 0.05)


def test_fit_vocd_recovers_exact_curve():
    n = np.arange(35, 51)
    for D in (5.0, 42.0, 130.0):
        assert fit_vocd(n, vocd_curve(n, D)) == pytest.approx(D, rel=1e-6)


def test_child_baselines_case_invariance():
    utts = [t.split() for t in ("We went to the PARK", "the dog ran fast", "I like It")] * 6
    lower = [[w.lower() for w in u] for u in utts]
    a, b = child_baselines(utts, seed=1), child_baselines(lower, seed=1)
    assert a == b
    assert a["mlu"] == 4.0


def test_child_baselines_short_text_has_nan_vocd():
    out = child_baselines([["hi", "there"]])
    assert np.isnan(out["vocd_d"]) and out["mlu"] == 2.0
