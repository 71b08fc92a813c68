"""Surface-level language metrics: MLU, TTR, vocd-D and two readability indices.

Readability treats each utterance as one sentence, since transcripts carry
no reliable sentence punctuation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DataError, EmptyInput


class InsufficientTokens(DataError, ValueError):
    pass


VOCD_N_RANGE = (35, 50)
VOCD_SUBSAMPLES = 100
VOCD_FITS = 3
VOCD_MIN_TOKENS = 50
_LOG_D_BOUNDS = (np.log(1e-6), np.log(1e5))


def mlu(utterances: Sequence[Sequence[str]]) -> float:
    """Mean words per utterance; empty utterances are ignored."""
    lengths = [len(u) for u in utterances if len(u)]
    if not lengths:
        raise EmptyInput("mlu needs at least one nonempty utterance")
    return sum(lengths) / len(lengths)


def ttr(tokens: Sequence[str]) -> float:
    if not tokens:
        raise EmptyInput("ttr of an empty token list")
    return len({t.lower() for t in tokens}) / len(tokens)


def vocd_curve(N, D):
    """Expected TTR at sample size N for diversity parameter D."""
    N = np.asarray(N, dtype=float)
    return (D / N) * (np.sqrt(1.0 + 2.0 * N / D) - 1.0)


def _mean_ttr_by_n(codes: np.ndarray, rng: np.random.Generator, n_values: np.ndarray,
                   n_sub: int) -> np.ndarray:
    out = np.empty(len(n_values))
    total = len(codes)
    for j, n in enumerate(n_values):
        # Without-replacement subsamples: first n positions of independent random permutations.
        keys = rng.random((n_sub, total))
        idx = np.argpartition(keys, n - 1, axis=1)[:, :n]
        sample = np.sort(codes[idx], axis=1)
        types = 1 + np.count_nonzero(np.diff(sample, axis=1), axis=1)
        out[j] = types.mean() / n
    return out


def fit_vocd(n_values, ttr_values) -> float:
    """Least-squares D for the curve, searched on log D."""
    n_values = np.asarray(n_values, dtype=float)
    ttr_values = np.asarray(ttr_values, dtype=float)

    def sse(logd):
        return float(np.sum((ttr_values - vocd_curve(n_values, np.exp(logd))) ** 2))

    res = minimize_scalar(sse, bounds=_LOG_D_BOUNDS, method="bounded",
                          options={"xatol": 1e-10, "maxiter": 500})
    return float(np.exp(res.x))


def vocd_d(tokens: Sequence[str], seed: int = 0, min_tokens: int = VOCD_MIN_TOKENS,
           n_range: tuple[int, int] = VOCD_N_RANGE, n_sub: int = VOCD_SUBSAMPLES,
           n_fits: int = VOCD_FITS) -> float:
    if len(tokens) < max(min_tokens, n_range[1]):
        raise InsufficientTokens(f"vocd-D needs at least {max(min_tokens, n_range[1])} tokens, "
                                 f"got {len(tokens)}")
    _, codes = np.unique([t.lower() for t in tokens], return_inverse=True)
    rng = np.random.default_rng(seed)
    n_values = np.arange(n_range[0], n_range[1] + 1)
    fits = [fit_vocd(n_values, _mean_ttr_by_n(codes, rng, n_values, n_sub)) for _ in range(n_fits)]
    return float(np.mean(fits))


_VOWEL_GROUP = re.compile(r"[aeiouy]+")


def count_syllables(word: str) -> int:
    """Vowel-group count with a silent final e; never below 1."""
    w = re.sub(r"[^a-z]", "", word.lower())
    if not w:
        return 1
    n = len(_VOWEL_GROUP.findall(w))
    if n > 1 and w.endswith("e") and not w.endswith(("ee", "ye")):
        consonant_le = w.endswith("le") and len(w) > 2 and w[-3] not in "aeiouy"
        if not consonant_le:
            n -= 1
    return max(1, n)


@dataclass(frozen=True)
class TextStats:
    n_words: int
    n_sentences: int
    n_syllables: int
    n_complex_words: int

    def __post_init__(self):
        if min(self.n_words, self.n_sentences, self.n_syllables, self.n_complex_words) < 0:
            raise ValueError("counts must be non-negative")
        if self.n_complex_words > self.n_words:
            raise ValueError("more complex words than words")

    @classmethod
    def from_utterances(cls, utterances: Iterable[Sequence[str]]) -> "TextStats":
        words = sentences = syllables = complex_words = 0
        for u in utterances:
            if not u:
                continue
            sentences += 1
            for tok in u:
                s = count_syllables(tok)
                words += 1
                syllables += s
                complex_words += s >= 3
        return cls(words, sentences, syllables, complex_words)


def _check(stats: TextStats):
    if stats.n_words < 1 or stats.n_sentences < 1:
        raise EmptyInput("readability needs at least one word and one sentence")


def fkgl(stats: TextStats) -> float:
    _check(stats)
    return (0.39 * stats.n_words / stats.n_sentences
            + 11.8 * stats.n_syllables / stats.n_words - 15.59)


def gfi(stats: TextStats) -> float:
    _check(stats)
    return 0.4 * (stats.n_words / stats.n_sentences + 100.0 * stats.n_complex_words / stats.n_words)


def child_baselines(utterances: Sequence[Sequence[str]], seed: int = 0) -> dict[str, float]:
    """MLU, vocd-D, FKGL and GFI over one child's concatenated utterances.

    vocd-D is NaN when the child has too few tokens.
    """
    stats = TextStats.from_utterances(utterances)
    tokens = [t for u in utterances for t in u]
    try:
        d = vocd_d(tokens, seed=seed)
    except InsufficientTokens:
        d = float("nan")
    return {"mlu": mlu(utterances), "vocd_d": d, "fkgl": fkgl(stats), "gfi": gfi(stats)}
