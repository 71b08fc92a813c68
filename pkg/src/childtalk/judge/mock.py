"""Deterministic rule-based stand-in for an LLM judge.

Used as the offline backend and as a test oracle. The rules follow the
surface cues named in the two rubrics (question form, connectives, echo,
acknowledgment tokens); they are deliberately simple and make no claim to
match a real judge's labels.
"""
from __future__ import annotations

import re

from ..corpus import HESITATION_TOKENS, DialoguePair, Utterance, detect_hesitation_only
from .taxonomy import EIScore, PTLabel, PTType

_AUX_LEADS = {
    "do", "does", "did", "is", "are", "was", "were", "am", "can", "could", "will",
    "would", "should", "shall", "have", "has", "had", "may", "might", "must",
    "isn't", "aren't", "don't", "doesn't", "didn't", "won't", "can't", "wanna",
}
_WH_LEADS = {"what", "where", "when", "why", "who", "whom", "whose", "which", "how"}
_FEEDBACK = {
    "good", "great", "nice", "wonderful", "excellent", "right", "correct", "wrong",
    "yes", "yeah", "no", "okay", "ok", "wow", "cool", "awesome", "perfect", "exactly",
    "thanks", "thank", "oops",
}
_IMPERATIVE_VERBS = {
    "put", "look", "come", "give", "read", "sit", "stop", "go", "take", "let", "show",
    "say", "try", "wait", "eat", "don't", "get", "bring", "hold", "listen", "watch",
    "pick", "clean", "open", "close", "push", "pull", "draw", "tell", "throw", "help",
    "please", "turn", "move", "make", "keep", "find",
}
_SELF_TALK = ("i wonder", "i can't remember", "where did i", "let me see", "let me think",
              "what was i", "now where", "hmm")
_ACK = {"yes", "no", "okay", "ok", "uh-huh", "yeah", "yep", "nope", "mhm", "mm-hmm",
        "uhhuh", "sure", "alright", "nah", "huh-uh"}
_CAUSAL = {"because", "so", "therefore", "'cause", "cause", "since"}
_SUBORD = {"if", "when", "unless", "while", "than", "whenever", "although", "until"}
_SEQUENCE = {"then", "after", "first", "next", "later", "finally", "before"}
_COORD = {"and", "but"}
_TIMEFRAME = {"yesterday", "tomorrow", "last", "ago", "remember", "reminded", "before",
              "summer", "winter", "week", "year", "tonight", "today"}
_SUBJECTS = {"i", "you", "he", "she", "it", "we", "they", "this", "that", "there", "me",
             "i'm", "it's", "he's", "she's", "we're", "they're", "that's", "there's",
             "i'll", "we'll", "the", "my", "mommy", "daddy"}
_VERBS = {
    "is", "are", "was", "were", "am", "be", "have", "has", "had", "do", "does", "did",
    "go", "went", "goes", "going", "run", "runs", "ran", "eat", "ate", "eats", "like",
    "likes", "liked", "want", "wants", "wanted", "see", "saw", "sees", "play", "played",
    "plays", "playing", "can", "will", "got", "get", "made", "make", "stayed", "love",
    "know", "think", "need", "fell", "broke", "found", "put", "took", "came", "said",
}
_MODIFIERS = {"big", "little", "small", "fast", "slow", "red", "blue", "green", "yellow",
              "happy", "sad", "very", "really", "pretty", "cute", "new", "old", "good",
              "bad", "funny", "scary", "long", "tall", "hot", "cold"}
_LISTENER = ("does that make sense", "you know what", "are you", "do you", "can you",
             "if you're", "if you are", "so you can", "okay?")
_TOPIC_SHIFT = ("anyway", "by the way", "let's talk", "guess what", "now let's")
_PROPOSAL = ("let's", "how about", "shall we", "we can", "maybe we")
_LINK_BACK = ("i told you", "told you about", "remember", "last time", "like before",
              "again", "back")

_PUNCT = re.compile(r"[^\w' -]")


def _words(text: str) -> list[str]:
    return [w for w in _PUNCT.sub(" ", text.lower()).split() if w]


def _content_words(text: str) -> list[str]:
    return [w for w in _words(text) if w not in HESITATION_TOKENS]


def _has_phrase(words: list[str], phrases) -> bool:
    padded = " " + " ".join(words) + " "
    return any(" " + p + " " in padded for p in phrases)


def mock_pt(adult_text: str) -> PTLabel:
    words = _content_words(adult_text)
    if not words:
        return PTLabel.of(PTType.AMBIGUOUS_UNCLEAR)
    question = adult_text.rstrip().endswith("?") or words[0] in _AUX_LEADS | _WH_LEADS
    lead = words[0]
    if question:
        if len(words) <= 2 and lead in {"huh", "what", "pardon", "sorry"} or _has_phrase(
            words, ("what did you say", "say that again", "what was that")
        ):
            return PTLabel.of(PTType.CLARIFICATION_REQUEST)
        if _has_phrase(words, ("you mean", "you're saying", "you said")):
            return PTLabel.of(PTType.CONFIRMATION_CHECK)
        if _has_phrase(words, ("tell me more", "why", "how come", "what happened then")):
            return PTLabel.of(PTType.ELABORATION)
        if "or" in words:
            return PTLabel.of(PTType.CHOICE)
        if lead in _WH_LEADS:
            if _has_phrase(words, ("what color", "what colour", "how many", "what is this",
                                   "what's this", "what is that", "what's that", "what sound",
                                   "what letter", "what shape")):
                return PTLabel.of(PTType.DISPLAY)
            return PTLabel.of(PTType.REFERENTIAL)
        if lead in _AUX_LEADS:
            return PTLabel.of(PTType.YES_NO)
        return PTLabel.of(PTType.CONFIRMATION_CHECK)
    if _has_phrase(words, _SELF_TALK):
        return PTLabel.of(PTType.SELF_TALK)
    if lead in _FEEDBACK or _has_phrase(words, ("good job", "well done", "that's right",
                                                "not quite", "that's not")):
        return PTLabel.of(PTType.FEEDBACK_EVALUATION)
    if lead in _IMPERATIVE_VERBS or words[-1] == "please":
        return PTLabel.of(PTType.IMPERATIVE_REQUEST)
    return PTLabel.of(PTType.TOPIC_INTRODUCTION)


def mock_expansion(child_text: str) -> int:
    words = _content_words(child_text)
    n = len(words)
    if n <= 1:
        return 1
    if n == 2:
        return 2
    causal = sum(w in _CAUSAL for w in words)
    if causal and sum(w in _TIMEFRAME for w in words) >= 2 and any(w in _SUBORD for w in words):
        return 10
    if any(w in _SUBORD for w in words) and n >= 5:
        return 9
    if any(w in _SEQUENCE for w in words) and n >= 7:
        return 8
    if causal:
        return 7
    if any(w in _COORD for w in words[1:]) and n >= 4:
        return 6
    clause = any(w in _VERBS or w.endswith("ing") or w.endswith("ed") for w in words)
    if not clause:
        return 3 if n <= 4 else 4
    if n >= 5 and any(w in _MODIFIERS for w in words):
        return 5
    return 4


def mock_independence(child_text: str, adult_text: str = "") -> int:
    child = _content_words(child_text)
    adult = _content_words(adult_text)
    if child and child == adult:
        return 1
    if child and len(child) < len(adult) and adult[-len(child):] == child:
        return 2
    if child and all(w in _ACK for w in child):
        return 3
    lead_acts = sum(_has_phrase(child, group) for group in (_TOPIC_SHIFT, _PROPOSAL, _LISTENER))
    if _has_phrase(child, _PROPOSAL) and _has_phrase(child, ("if you", "so you can", "you're tired")):
        return 10
    if lead_acts >= 2:
        return 9
    if _has_phrase(child, _LINK_BACK) and len(child) >= 4:
        return 8
    asked_why = _has_phrase(adult, ("why", "how come"))
    if any(w in _CAUSAL for w in child):
        return 5 if asked_why else 7
    if child_text.rstrip().endswith("?") or (child and child[0] in _WH_LEADS):
        if _has_phrase(child, ("why", "how", "what if")):
            return 6
        return 5
    if lead_acts:
        return 6
    return 4


def mock_ei(child_text: str, adult_text: str = "") -> EIScore:
    words = _words(child_text)
    if words and all(w in HESITATION_TOKENS for w in words):
        return EIScore.hesitation()
    return EIScore(mock_independence(child_text, adult_text), mock_expansion(child_text))


def display_text(u: Utterance) -> str:
    """Cleaned words plus the transcript's terminal punctuation, as sent to a judge."""
    text = " ".join(u.clean_tokens)
    raw = u.raw_text.rstrip()
    for mark in ("?", "!", "."):
        if raw.endswith(mark) or raw.endswith(mark + " ."):
            return text + mark
    return text


def mock_judge(pair: DialoguePair) -> tuple[PTLabel, EIScore]:
    adult = display_text(pair.adult)
    if detect_hesitation_only(pair.child):
        return mock_pt(adult), EIScore.hesitation()
    return mock_pt(adult), mock_ei(display_text(pair.child), adult)
