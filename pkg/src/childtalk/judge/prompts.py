"""Prompt rendering and verdict parsing for the two judge passes."""
from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from typing import Sequence

from ..corpus import UnparseableAge, parse_age
from ..errors import DataError
from .taxonomy import (
    KIND_PREFIX,
    EIScore,
    FormatViolation,
    PTKind,
    PTLabel,
    PTType,
    ScoreOutOfRange,
)


class EmptyBatch(DataError, ValueError):
    pass


PT_TEMPLATE = "pt_classification.txt"
EI_TEMPLATE = "ei_scoring.txt"
AGE_TEMPLATE = "llm_age.txt"
DIALOGUE_SLOT = "{DIALOGUE}"
CONVERSATION_MARKER = "Now, analyze the following conversation:"


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files(__package__).joinpath("prompts", name).read_text(encoding="utf-8")


def _fill(template: str, dialogue: str) -> str:
    head, slot, tail = template.partition(DIALOGUE_SLOT)
    if not slot:
        raise RuntimeError("prompt template lacks a {DIALOGUE} slot")
    return head + dialogue + tail


def _dialogue_block(context: str, items: list[str]) -> str:
    lines = [context.strip()] if context and context.strip() else []
    lines.extend(items)
    return "\n" + "\n".join(lines) + "\n"


def render_pt_prompt(adult_turns: Sequence[str], dialogue_context: str = "") -> str:
    if not adult_turns:
        raise EmptyBatch("no adult turns to classify")
    items = [f"[{i}-a] {t}" for i, t in enumerate(adult_turns, 1)]
    return _fill(load_template(PT_TEMPLATE), _dialogue_block(dialogue_context, items))


def render_ei_prompt(child_turns: Sequence[str], dialogue_context: str = "",
                     adult_turns: Sequence[str] | None = None) -> str:
    """E/I scoring prompt; each child turn may be preceded by its adult prompt."""
    if not child_turns:
        raise EmptyBatch("no child turns to score")
    if adult_turns is not None and len(adult_turns) != len(child_turns):
        raise ValueError("adult_turns must align with child_turns")
    items = []
    for i, c in enumerate(child_turns, 1):
        if adult_turns is not None:
            items.append(f"Adult: {adult_turns[i - 1]}")
            items.append(f"[{i}] Child: {c}")
        else:
            items.append(f"[{i}] {c}")
    return _fill(load_template(EI_TEMPLATE), _dialogue_block(dialogue_context, items))


def render_age_prompt(child_utterances: Sequence[str]) -> str:
    return _fill(load_template(AGE_TEMPLATE), "\n".join(child_utterances))


def dialogue_section(prompt: str) -> str:
    """The conversation appended after the rubric (used by offline backends)."""
    _, _, tail = prompt.rpartition(CONVERSATION_MARKER)
    return tail


# ---------------------------------------------------------------- outputs

def render_pt_output(labels: Sequence[PTLabel]) -> str:
    return "\n".join(
        f"[{i}-a] - {KIND_PREFIX[lab.kind]}: {lab.subtype.prompt_name}"
        for i, lab in enumerate(labels, 1)
    )


def render_ei_output(scores: Sequence[EIScore]) -> str:
    lines = []
    for i, s in enumerate(scores, 1):
        line = f"[{i}] - Independence: {s.independence}, Expansion: {s.expansion}"
        if s.hesitation_only:
            line += " [Hesitation Only]"
        lines.append(line)
    return "\n".join(lines)


def _norm_category(s: str) -> str:
    s = re.sub(r"\s*/\s*", "/", s.strip().lower())
    s = re.sub(r"\s*-\s*", "-", s)
    return re.sub(r"\s+", " ", s).rstrip(".")


_CATEGORY_LOOKUP = {_norm_category(t.prompt_name): t for t in PTType}
_PREFIX_LOOKUP = {_norm_category(v): k for k, v in KIND_PREFIX.items()}

_PT_LINE = re.compile(
    r"^\[\s*(\d+)\s*-\s*a\s*\]\s*-?\s*(?:(question\s+type|non\s*-\s*question\s+type|special\s+cases?)\s*:)?\s*(.*?)\s*$",
    re.IGNORECASE,
)
_EI_LINE = re.compile(
    r"^\[\s*(\d+)\s*\]\s*-?\s*independence\s*:\s*(-?\d+)\s*,\s*expansion\s*:\s*(-?\d+)"
    r"\s*(\[\s*hesitation\s+only\s*\])?\s*$",
    re.IGNORECASE,
)


def _reply_lines(text: str) -> list[str]:
    lines = []
    for line in text.splitlines():
        s = line.strip()
        if not s or s.startswith("```"):
            continue
        lines.append(s)
    return lines


def _check_indices(found: dict[int, object], expected_count: int):
    expected = set(range(1, expected_count + 1))
    missing = sorted(expected - set(found))
    extra = sorted(set(found) - expected)
    if missing:
        raise FormatViolation(f"missing indices {missing}")
    if extra:
        raise FormatViolation(f"unexpected indices {extra}")


def parse_pt_response(text: str, expected_count: int) -> list[PTLabel]:
    found: dict[int, PTLabel] = {}
    for line in _reply_lines(text):
        m = _PT_LINE.match(line)
        if not m:
            raise FormatViolation(f"unparseable line: {line!r}")
        idx = int(m.group(1))
        if idx in found:
            raise FormatViolation(f"duplicate index {idx}")
        subtype = _CATEGORY_LOOKUP.get(_norm_category(m.group(3)))
        if subtype is None:
            raise FormatViolation(f"unknown category {m.group(3)!r}")
        if m.group(2) is not None:
            prefix = _norm_category(m.group(2))
            kind = _PREFIX_LOOKUP.get(prefix) or _PREFIX_LOOKUP.get(prefix.rstrip("s"))
            if subtype is not PTType.AMBIGUOUS_UNCLEAR and kind is not subtype.kind:
                raise FormatViolation(f"{subtype.prompt_name!r} listed under {m.group(2)!r}")
        found[idx] = PTLabel.of(subtype)
    _check_indices(found, expected_count)
    return [found[i] for i in range(1, expected_count + 1)]


def parse_ei_response(text: str, expected_count: int) -> list[EIScore]:
    found: dict[int, EIScore] = {}
    for line in _reply_lines(text):
        m = _EI_LINE.match(line)
        if not m:
            raise FormatViolation(f"unparseable line: {line!r}")
        idx = int(m.group(1))
        if idx in found:
            raise FormatViolation(f"duplicate index {idx}")
        ind, exp = int(m.group(2)), int(m.group(3))
        hes = m.group(4) is not None
        if not (0 <= ind <= 10 and 0 <= exp <= 10):
            raise ScoreOutOfRange(f"[{idx}] scores outside 0..10: I={ind}, E={exp}")
        found[idx] = EIScore(ind, exp, hes)
    _check_indices(found, expected_count)
    return [found[i] for i in range(1, expected_count + 1)]


_AGE_REPLY = re.compile(r"^\s*(\d+)\s*years?\s*(?:,?\s*(?:and\s*)?(\d+)\s*months?)?\s*\.?\s*$", re.IGNORECASE)


def parse_age_reply(text: str) -> float:
    """Decimal years from an ``X years Y months`` reply."""
    m = _AGE_REPLY.match(text.strip().strip('"'))
    if not m:
        raise FormatViolation(f"unparseable age reply {text!r}")
    try:
        return parse_age(f"{m.group(1)};{m.group(2) or 0}")
    except UnparseableAge as exc:
        raise FormatViolation(str(exc)) from exc
