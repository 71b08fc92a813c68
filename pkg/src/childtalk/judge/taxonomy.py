"""Adult utterance type taxonomy and child response scores."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from ..errors import DataError


class FormatViolation(DataError, ValueError):
    """A judge reply that does not follow the required output format."""


class ScoreOutOfRange(FormatViolation):
    pass


class PTKind(str, enum.Enum):
    QUESTION = "Question"
    NON_QUESTION = "NonQuestion"
    AMBIGUOUS = "Ambiguous"


class PTType(str, enum.Enum):
    YES_NO = "YesNo"
    REFERENTIAL = "Referential"
    CLARIFICATION_REQUEST = "ClarificationRequest"
    DISPLAY = "Display"
    CONFIRMATION_CHECK = "ConfirmationCheck"
    CHOICE = "Choice"
    ELABORATION = "Elaboration"
    TOPIC_INTRODUCTION = "TopicIntroduction"
    IMPERATIVE_REQUEST = "ImperativeRequest"
    FEEDBACK_EVALUATION = "FeedbackEvaluation"
    SELF_TALK = "SelfTalk"
    AMBIGUOUS_UNCLEAR = "AmbiguousUnclear"

    @property
    def kind(self) -> PTKind:
        return _KIND[self]

    @property
    def prompt_name(self) -> str:
        """Category string exactly as it appears in the classification prompt."""
        return _PROMPT_NAMES[self]

    @property
    def table_name(self) -> str:
        return _TABLE_NAMES[self]


_QUESTIONS = (
    PTType.YES_NO, PTType.REFERENTIAL, PTType.CLARIFICATION_REQUEST, PTType.DISPLAY,
    PTType.CONFIRMATION_CHECK, PTType.CHOICE, PTType.ELABORATION,
)
_NON_QUESTIONS = (
    PTType.TOPIC_INTRODUCTION, PTType.IMPERATIVE_REQUEST, PTType.FEEDBACK_EVALUATION,
    PTType.SELF_TALK,
)
_KIND = {t: PTKind.QUESTION for t in _QUESTIONS}
_KIND.update({t: PTKind.NON_QUESTION for t in _NON_QUESTIONS})
_KIND[PTType.AMBIGUOUS_UNCLEAR] = PTKind.AMBIGUOUS

_PROMPT_NAMES = {
    PTType.DISPLAY: "Display Question",
    PTType.YES_NO: "Yes/No Question",
    PTType.CHOICE: "Choice Question",
    PTType.REFERENTIAL: "Referential Question",
    PTType.CLARIFICATION_REQUEST: "Clarification Request",
    PTType.ELABORATION: "Elaboration Prompt",
    PTType.CONFIRMATION_CHECK: "Confirmation Check",
    PTType.TOPIC_INTRODUCTION: "Topic Introduction",
    PTType.IMPERATIVE_REQUEST: "Imperative/Request",
    PTType.FEEDBACK_EVALUATION: "Feedback/Evaluation",
    PTType.SELF_TALK: "Self-Talk/Thinking Aloud",
    PTType.AMBIGUOUS_UNCLEAR: "Ambiguous/Unclear",
}
_TABLE_NAMES = {
    PTType.YES_NO: "Yes/No",
    PTType.REFERENTIAL: "Referential",
    PTType.CLARIFICATION_REQUEST: "Clarification Request",
    PTType.DISPLAY: "Display",
    PTType.CONFIRMATION_CHECK: "Confirmation Check",
    PTType.CHOICE: "Choice",
    PTType.ELABORATION: "Elaboration",
    PTType.TOPIC_INTRODUCTION: "Topic Introduction",
    PTType.IMPERATIVE_REQUEST: "Imperative/Request",
    PTType.FEEDBACK_EVALUATION: "Feedback/Evaluation",
    PTType.SELF_TALK: "Self-Talk/Thinking Aloud",
    PTType.AMBIGUOUS_UNCLEAR: "Ambiguous/Unclear",
}

# The 11 content types in summary-table order; feature vectors and reports use it.
PT_ORDER: tuple[PTType, ...] = _QUESTIONS + _NON_QUESTIONS
REFERENCE_PT = PTType.YES_NO

KIND_PREFIX = {
    PTKind.QUESTION: "Question Type",
    PTKind.NON_QUESTION: "Non-Question Type",
    PTKind.AMBIGUOUS: "Special Case",
}


@dataclass(frozen=True)
class PTLabel:
    kind: PTKind
    subtype: PTType

    def __post_init__(self):
        if self.subtype.kind is not self.kind:
            raise ValueError(f"{self.subtype.value} is not a {self.kind.value} type")

    @classmethod
    def of(cls, subtype: PTType | str) -> "PTLabel":
        subtype = PTType(subtype)
        return cls(subtype.kind, subtype)

    @property
    def is_content(self) -> bool:
        return self.subtype is not PTType.AMBIGUOUS_UNCLEAR


@dataclass(frozen=True)
class EIScore:
    independence: int
    expansion: int
    hesitation_only: bool = False

    def __post_init__(self):
        i, e = self.independence, self.expansion
        if self.hesitation_only:
            if i != 0 or e != 0:
                raise ScoreOutOfRange(f"hesitation-only scores must be 0/0, got {i}/{e}")
        elif not (1 <= i <= 10 and 1 <= e <= 10):
            raise ScoreOutOfRange(f"content scores must lie in 1..10, got I={i}, E={e}")

    @classmethod
    def hesitation(cls) -> "EIScore":
        return cls(0, 0, True)
