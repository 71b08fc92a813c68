"""Causal, contrast and initiative discourse markers in child utterances."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

from .errors import ConfigError

CATEGORIES = ("causal", "contrast", "initiative")


@dataclass(frozen=True)
class MarkerFlags:
    causal: bool = False
    contrast: bool = False
    initiative: bool = False

    @property
    def any(self) -> bool:
        return self.causal or self.contrast or self.initiative


def _phrase(entry: str) -> tuple[str, ...]:
    toks = tuple(entry.lower().split())
    if not toks:
        raise ConfigError("empty marker entry")
    return toks


class MarkerLexicon:
    """Per-category phrase lists matched on whole-token boundaries."""

    def __init__(self, lexicons: Mapping[str, Sequence[str]]):
        unknown = set(lexicons) - set(CATEGORIES)
        if unknown:
            raise ConfigError(f"unknown marker categories {sorted(unknown)}")
        self.phrases = {c: tuple(sorted({_phrase(e) for e in lexicons.get(c, ())}))
                        for c in CATEGORIES}

    @classmethod
    def default(cls) -> "MarkerLexicon":
        text = resources.files(__package__).joinpath("data", "markers.json").read_text("utf-8")
        return cls(json.loads(text))

    @classmethod
    def load(cls, path) -> "MarkerLexicon":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def _hit(self, toks: Sequence[str], category: str) -> bool:
        for ph in self.phrases[category]:
            k = len(ph)
            for i in range(len(toks) - k + 1):
                if tuple(toks[i:i + k]) == ph:
                    return True
        return False

    def detect(self, tokens: Sequence[str]) -> MarkerFlags:
        toks = [t.lower() for t in tokens]
        return MarkerFlags(*(self._hit(toks, c) for c in CATEGORIES))


_DEFAULT: MarkerLexicon | None = None


def detect_markers(tokens: Sequence[str], lexicon: MarkerLexicon | None = None) -> MarkerFlags:
    global _DEFAULT
    if lexicon is None:
        if _DEFAULT is None:
            _DEFAULT = MarkerLexicon.default()
        lexicon = _DEFAULT
    return lexicon.detect(tokens)
