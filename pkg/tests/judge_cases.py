"""Verdict generators and hand-written malformed judge replies."""
from __future__ import annotations

from childtalk.judge.taxonomy import EIScore, PTLabel, PTType

ALL_TYPES = list(PTType)


def random_pt_verdict(rng, max_len: int = 25) -> list[PTLabel]:
    n = int(rng.integers(1, max_len + 1))
    return [PTLabel.of(ALL_TYPES[i]) for i in rng.integers(0, len(ALL_TYPES), n)]


def random_ei_verdict(rng, max_len: int = 25) -> list[EIScore]:
    n = int(rng.integers(1, max_len + 1))
    out = []
    for _ in range(n):
        if rng.random() < 0.15:
            out.append(EIScore.hesitation())
        else:
            out.append(EIScore(int(rng.integers(1, 11)), int(rng.integers(1, 11))))
    return out


# (reply, expected_count); every one must raise FormatViolation
MALFORMED_PT = [
    ("[1-a] - Question Type: Rhetorical", 1),
    ("", 1),
    ("[1-a] - Question Type: Yes/No Question", 2),
    ("[1-a] - Question Type: Yes/No Question\n[3-a] - Question Type: Display Question", 2),
    ("[1-a] - Question Type: Yes/No Question\n[1-a] - Question Type: Display Question", 1),
    ("[1-a] - Non-Question Type: Yes/No Question", 1),
    ("[1-a] - Question Type: Topic Introduction", 1),
    ("1-a - Question Type: Yes/No Question", 1),
    ("Sure! Here are the labels:\n[1-a] - Question Type: Yes/No Question", 1),
    ("[1] - Question Type: Yes/No Question", 1),
    ("[1-a] - Question Type:", 1),
    ("[1-a] - Question Type: Yes/No Question (probably)", 1),
    ("[0-a] - Question Type: Yes/No Question", 1),
]
MALFORMED_EI = [
    ("[1] - Independence: 11, Expansion: 5", 1),
    ("[1] - Independence: 0, Expansion: 5", 1),
    ("[1] - Independence: 0, Expansion: 0", 1),
    ("[1] - Independence: 6", 1),
    ("[1] - Expansion: 5, Independence: 6", 1),
    ("[1] - Independence: six, Expansion: 5", 1),
    ("[1] - Independence: 4, Expansion: 4 [Hesitation Only]", 1),
]
assert len(MALFORMED_PT) + len(MALFORMED_EI) == 20
