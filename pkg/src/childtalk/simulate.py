"""Synthetic annotated corpora with known generating mechanisms.

Each generator returns analysis rows as the pipeline would produce them
after annotation, so estimators can be checked against a planted truth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import AnalysisRow, length_components
from .judge.taxonomy import PT_ORDER
from .markers import CATEGORIES, detect_markers

FILLER = (
    "the", "dog", "ball", "red", "big", "we", "went", "park", "mommy", "daddy", "cat", "ran",
    "ate", "cookie", "house", "car", "blue", "fast", "tree", "bird", "water", "play", "toy",
    "little", "happy", "school", "book", "sun", "outside", "friend", "truck", "funny", "i",
    "you", "it", "is", "was", "my", "a", "yes",
)
MARKER_PHRASES = {"causal": ("because",), "contrast": ("but",), "initiative": ("let's",)}
# Latent-scale cutpoints mapping onto scores 1..10.
E_CUTS = np.linspace(-4.5, 4.5, 9)


def _ordinal(latent: np.ndarray, cuts: np.ndarray = E_CUTS) -> np.ndarray:
    return 1 + np.searchsorted(cuts, latent)


def _words(rng, n: int) -> list[str]:
    return [FILLER[i] for i in rng.integers(0, len(FILLER), n)]


@dataclass
class SimulatedCorpus:
    rows: list[AnalysisRow]
    markers: np.ndarray | None = None
    truth: dict | None = None


def _pt_draw(rng, n):
    p = np.linspace(2.0, 1.0, len(PT_ORDER))
    return [PT_ORDER[i] for i in rng.choice(len(PT_ORDER), size=n, p=p / p.sum())]


def simulate_development(seed: int, n_children: int = 90, n_utts: int = 30,
                         beta_w_E: float = 2.3, beta_b_E: float = 1.4,
                         beta_w_I: float = 0.9, beta_b_I: float = 0.6, beta_age_I: float = -0.5,
                         sigma_u: float = 0.6) -> SimulatedCorpus:
    """Expansion driven only by length; Independence with a negative residual age slope.

    Habitual length grows with age, so Expansion shows a total age effect
    that vanishes once the length components are held fixed.
    """
    rng = np.random.default_rng(seed)
    ages = rng.uniform(2.0, 10.0, n_children)
    habitual = 1.5 + 0.55 * ages + rng.normal(0, 0.8, n_children)
    pt_len = {t: e for t, e in zip(PT_ORDER, rng.normal(0, 0.6, len(PT_ORDER)))}
    rows = []
    for c in range(n_children):
        pts = _pt_draw(rng, n_utts)
        for j, t in enumerate(pts):
            n = int(max(1, round(habitual[c] + pt_len[t] + rng.normal(0, 1.6))))
            rows.append(AnalysisRow(f"sim/c{c:03d}/s#{j}", f"sim/c{c:03d}", "sim", float(ages[c]),
                                    t, 1, 1, False, tuple(_words(rng, n))))
    comps = length_components(rows)
    lw = np.array([x.L_w_z for x in comps])
    lb = np.array([x.L_b_z for x in comps])
    child = np.array([int(r.child_key[-3:]) for r in rows])
    age = np.array([r.age for r in rows])
    age_z = (age - age.mean()) / age.std(ddof=1)
    pt_eff = {t: e for t, e in zip(PT_ORDER, rng.normal(0, 0.4, len(PT_ORDER)))}
    pe = np.array([pt_eff[r.pt] for r in rows])
    uE = rng.normal(0, sigma_u, n_children)[child]
    uI = rng.normal(0, sigma_u, n_children)[child]
    e = _ordinal(beta_w_E * lw + beta_b_E * lb + pe + uE + rng.logistic(size=len(rows)))
    i = _ordinal(beta_w_I * lw + beta_b_I * lb + beta_age_I * age_z + pe + uI
                 + rng.logistic(size=len(rows)))
    rows = [AnalysisRow(r.pair_id, r.child_key, r.corpus_id, r.age, r.pt, int(ii), int(ee), False,
                        r.tokens) for r, ee, ii in zip(rows, e, i)]
    truth = {"beta_w_E": beta_w_E, "beta_b_E": beta_b_E, "beta_age_E": 0.0,
             "beta_age_I": beta_age_I, "sigma_u": sigma_u}
    return SimulatedCorpus(rows, None, truth)


def simulate_markers(seed: int, n_children: int = 80, n_utts: int = 30, p_marker: float = 0.25,
                     beta_E=(1.6, 1.2, 0.8), beta_I=(0.8, 0.6, 1.3), sigma_u: float = 0.5
                     ) -> SimulatedCorpus:
    """Markers raise E and I while utterance length is drawn independently of them.

    Marker words replace filler words, so a marker never changes the word count.
    """
    rng = np.random.default_rng(seed)
    ages = rng.uniform(2.0, 10.0, n_children)
    habitual = 2.0 + 0.5 * ages + rng.normal(0, 0.8, n_children)
    rows, flags = [], []
    for c in range(n_children):
        for j, t in enumerate(_pt_draw(rng, n_utts)):
            n = int(max(1, round(habitual[c] + rng.normal(0, 1.8))))
            toks = _words(rng, n)
            f = rng.random(3) < p_marker
            slots = rng.permutation(n)
            k = 0
            for cat, on in zip(CATEGORIES, f):
                if on and k < n:
                    toks[slots[k]] = MARKER_PHRASES[cat][0]
                    k += 1
            mf = detect_markers(toks)
            flags.append([mf.causal, mf.contrast, mf.initiative])
            rows.append(AnalysisRow(f"sim/c{c:03d}/s#{j}", f"sim/c{c:03d}", "sim", float(ages[c]),
                                    t, 1, 1, False, tuple(toks)))
    M = np.array(flags, dtype=float)
    comps = length_components(rows)
    lw = np.array([x.L_w_z for x in comps])
    lb = np.array([x.L_b_z for x in comps])
    child = np.array([int(r.child_key[-3:]) for r in rows])
    pt_eff = {t: e for t, e in zip(PT_ORDER, rng.normal(0, 0.4, len(PT_ORDER)))}
    pe = np.array([pt_eff[r.pt] for r in rows])
    uE = rng.normal(0, sigma_u, n_children)[child]
    uI = rng.normal(0, sigma_u, n_children)[child]
    e = _ordinal(M @ np.asarray(beta_E) + 1.2 * lw + 0.8 * lb + pe + uE + rng.logistic(size=len(rows)))
    i = _ordinal(M @ np.asarray(beta_I) + 0.5 * lw + 0.3 * lb + pe + uI + rng.logistic(size=len(rows)))
    rows = [AnalysisRow(r.pair_id, r.child_key, r.corpus_id, r.age, r.pt, int(ii), int(ee), False,
                        r.tokens) for r, ee, ii in zip(rows, e, i)]
    return SimulatedCorpus(rows, M, {"beta_E": beta_E, "beta_I": beta_I})


def simulate_age_corpus(seed: int, n_children: int = 200, n_utts: int = 40,
                        age_noise: float = 0.9) -> SimulatedCorpus:
    """Age as a noisy function of each child's E/I band mix; length only weakly related.

    A latent developmental level d in [0, 1] sets the band probabilities for
    both axes; age = 2 + 8 d + noise. Utterance length carries a small share
    of d under large child-level scatter.
    """
    rng = np.random.default_rng(seed)
    d = rng.uniform(0, 1, n_children)
    ages = np.clip(2.0 + 8.0 * d + rng.normal(0, age_noise, n_children), 2.0, 10.0)
    habitual = 3.0 + 1.0 * d + rng.normal(0, 1.5, n_children)
    low, mid, high = np.arange(1, 4), np.arange(4, 8), np.arange(8, 11)
    rows = []
    for c in range(n_children):
        pe = np.array([0.7 - 0.6 * d[c], 0.25, 0.05 + 0.6 * d[c]])
        pi = np.array([0.6 - 0.4 * d[c], 0.3 + 0.1 * d[c], 0.1 + 0.3 * d[c]])
        pe, pi = pe / pe.sum(), pi / pi.sum()
        for j, t in enumerate(_pt_draw(rng, n_utts)):
            be, bi = rng.choice(3, p=pe), rng.choice(3, p=pi)
            e = int(rng.choice((low, mid, high)[be]))
            i = int(rng.choice((low, mid, high)[bi]))
            n = int(max(1, round(habitual[c] + rng.normal(0, 2.0))))
            rows.append(AnalysisRow(f"sim/c{c:03d}/s#{j}", f"sim/c{c:03d}", "sim", float(ages[c]),
                                    t, i, e, False, tuple(_words(rng, n))))
    return SimulatedCorpus(rows, None, {"d": d, "ages": ages})
