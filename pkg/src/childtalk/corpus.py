"""CHAT-style transcript ingestion.

Parses speaker-prefixed transcripts into sessions, cleans utterance text,
applies activity-based exclusion rules, converts ages to decimal years and
extracts adult->child dialogue pairs.
"""
from __future__ import annotations

import dataclasses
import enum
import fnmatch
import json
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ConfigError, DataError


class MalformedTranscript(DataError):
    pass


class UnknownSpeakerCode(ConfigError):
    pass


class UnparseableAge(DataError, ValueError):
    pass


class Role(str, enum.Enum):
    ADULT = "Adult"
    CHILD = "Child"


class ExclusionClass(str, enum.Enum):
    RECITATION = "Recitation"
    READ_ALOUD = "ReadAloud"
    WORD_LIST = "WordList"
    FIXED_SCRIPT = "FixedScript"
    AGE_OUT_OF_RANGE = "AgeOutOfRange"
    AGE_MISSING = "AgeMissing"


HESITATION_TOKENS = frozenset({"um", "uh", "hm", "er", "ah"})

# CHAT noise markers: unintelligible (xxx), phonologically unintelligible
# (yyy) and untranscribed (www) material.
NOISE_TOKENS = frozenset({"xxx", "yyy", "www"})


@dataclass(frozen=True)
class Utterance:
    speaker_role: Role
    raw_text: str
    clean_tokens: tuple[str, ...]
    line_index: int
    unintelligible_only: bool
    speaker_code: str = ""
    gem: str | None = None

    @property
    def text(self) -> str:
        return " ".join(self.clean_tokens)


@dataclass(frozen=True)
class Tier:
    name: str
    text: str
    line_index: int
    utterance_index: int | None


@dataclass(frozen=True)
class SessionMeta:
    corpus_id: str | None = None
    child_id: str | None = None
    age_raw: str | None = None
    session_id: str | None = None
    source: str | None = None


@dataclass(frozen=True)
class Session:
    corpus_id: str
    child_id: str
    session_id: str
    child_age_years: float | None
    utterances: tuple[Utterance, ...]
    headers: tuple[tuple[str, str], ...] = ()
    tiers: tuple[Tier, ...] = ()
    source: str | None = None
    excluded: bool = False
    exclusion_reason: str | None = None
    exclusion_detail: str | None = None

    @property
    def ref(self) -> str:
        return f"{self.corpus_id}/{self.child_id}/{self.session_id}"


@dataclass(frozen=True)
class DialoguePair:
    session_ref: str
    adult: Utterance
    child: Utterance
    pair_index: int
    corpus_id: str = ""
    child_id: str = ""
    child_age_years: float | None = None

    @property
    def pair_id(self) -> str:
        return f"{self.session_ref}#{self.pair_index}"


@dataclass
class RoleMap:
    """Speaker code -> role. ``default=None`` makes unmapped codes an error."""

    mapping: dict[str, Role] = field(default_factory=lambda: {"CHI": Role.CHILD})
    default: Role | None = Role.ADULT

    def role(self, code: str) -> Role:
        if code in self.mapping:
            return self.mapping[code]
        if self.default is None:
            raise UnknownSpeakerCode(f"speaker code {code!r} has no role mapping")
        return self.default

    @classmethod
    def from_dict(cls, d: dict) -> "RoleMap":
        mapping = {k: Role(v) for k, v in d.get("mapping", {"CHI": "Child"}).items()}
        default = d.get("default", "Adult")
        return cls(mapping, Role(default) if default is not None else None)

    def to_dict(self) -> dict:
        return {
            "mapping": {k: v.value for k, v in sorted(self.mapping.items())},
            "default": self.default.value if self.default else None,
        }


DEFAULT_EXCLUSION_KEYWORDS: dict[str, list[str]] = {
    ExclusionClass.RECITATION.value: [
        "song", "songs", "singing", "sing-along", "chant", "chanting", "verse",
        "recitation", "reciting", "nursery rhyme", "rhymes", "alphabet",
        "abc", "counting", "number reading", "reading numbers",
    ],
    ExclusionClass.READ_ALOUD.value: [
        "book reading", "reading book", "reading books", "book-reading",
        "shared reading", "read-aloud", "read aloud", "reading aloud",
        "storybook", "story reading", "elicited repetition",
        "repetition task", "repeat after me", "imitation task",
    ],
    ExclusionClass.WORD_LIST.value: [
        "picture naming", "naming task", "word list", "wordlist",
        "nonword repetition", "non-word repetition", "syllable repetition",
    ],
    ExclusionClass.FIXED_SCRIPT.value: [
        "scripted", "script", "play-acting", "scripted dialogue",
    ],
}


@dataclass
class FilterConfig:
    exclusion_keywords: dict[str, list[str]] = field(
        default_factory=lambda: {k: list(v) for k, v in DEFAULT_EXCLUSION_KEYWORDS.items()}
    )
    # dependent tiers (without the %) and headers (without the @) searched
    search_tiers: list[str] = field(default_factory=lambda: ["act", "sit", "gpx", "com"])
    search_headers: list[str] = field(
        default_factory=lambda: ["Situation", "Activities", "Types", "G", "Bg", "Eg"]
    )
    filename_patterns: dict[str, list[str]] = field(default_factory=dict)
    # "session": any match excludes the whole session.
    # "segment": matches in gem labels drop only that gem's utterances.
    scope: str = "session"
    min_age: float = 2.0
    max_age: float = 10.0
    roles: RoleMap = field(default_factory=RoleMap)

    def __post_init__(self):
        if self.scope not in ("session", "segment"):
            raise ConfigError(f"filter scope must be 'session' or 'segment', got {self.scope!r}")
        unknown = set(self.exclusion_keywords) | set(self.filename_patterns)
        unknown -= {c.value for c in ExclusionClass}
        if unknown:
            raise ConfigError(f"unknown exclusion classes: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, d: dict) -> "FilterConfig":
        kw = dict(d)
        if "roles" in kw:
            kw["roles"] = RoleMap.from_dict(kw["roles"])
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(kw) - known
        if extra:
            raise ConfigError(f"unknown filter config keys: {sorted(extra)}")
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "FilterConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["roles"] = self.roles.to_dict()
        return d


# ---------------------------------------------------------------- cleaning

_BULLET = re.compile("\x15[^\x15]*\x15")
_BRACKET = re.compile(r"\[[^\]]*\]")
_INNER_STRIP = re.compile(r"[()^:⌈⌉⌊⌋↑↓]")
_OMITTED = re.compile(r"^0[a-z']", re.IGNORECASE)


def _edge_strip(tok: str) -> str:
    i, j = 0, len(tok)
    while i < j and not tok[i].isalnum():
        i += 1
    while j > i and not tok[j - 1].isalnum():
        j -= 1
    return tok[i:j]


def clean_utterance(raw: str) -> tuple[list[str], bool]:
    """Tokenize one utterance body.

    Underscore and ``+`` compounds are split into words, bracketed CHAT
    codes and scope markers are removed, ``&-um`` style fillers keep their
    word, other ``&`` fragments and noise tokens (``xxx``, ``yyy``,
    ``www``) are dropped. Returns the tokens and whether nothing meaningful
    remains.
    """
    text = _BULLET.sub(" ", raw)
    text = _BRACKET.sub(" ", text)
    text = text.replace("_", " ").replace("<", " ").replace(">", " ")
    tokens: list[str] = []
    for tok in text.split():
        if tok.startswith("&"):
            if not tok.startswith("&-"):
                continue
            tok = tok[2:]
        if tok.startswith("+"):
            continue
        tok = tok.split("@", 1)[0]
        tok = _INNER_STRIP.sub("", tok)
        for part in tok.split("+"):
            part = _edge_strip(part)
            if not part or part == "0" or _OMITTED.match(part):
                continue
            if part.lower() in NOISE_TOKENS:
                continue
            tokens.append(part)
    return tokens, not tokens


def _norm_word(tok: str) -> str:
    return _edge_strip(tok).lower()


def detect_hesitation_only(u: Utterance | Iterable[str], lexicon=HESITATION_TOKENS) -> bool:
    tokens = u.clean_tokens if isinstance(u, Utterance) else list(u)
    words = [_norm_word(t) for t in tokens]
    words = [w for w in words if w]
    return bool(words) and all(w in lexicon for w in words)


# ---------------------------------------------------------------- age

_AGE_ISO = re.compile(r"^P?(\d+)Y(?:(\d+)M)?(?:(\d+)D)?$", re.IGNORECASE)
_AGE_CHAT = re.compile(r"^(\d+);(\d{1,2})?(?:\.(\d{1,2}))?$")


def parse_age(raw: str) -> float:
    """Decimal years from ``P6Y07M`` or ``4;7.0`` style notations.

    Months contribute ``months/12``; days are ignored. Rounded half-up to
    two decimals.
    """
    if raw is None:
        raise UnparseableAge("age is missing")
    s = raw.strip()
    m = _AGE_ISO.match(s) or _AGE_CHAT.match(s)
    if not m:
        raise UnparseableAge(f"unrecognized age notation {raw!r}")
    years = int(m.group(1))
    months = int(m.group(2) or 0)
    if months > 11:
        raise UnparseableAge(f"month field out of range in {raw!r}")
    value = Decimal(years) + Decimal(months) / Decimal(12)
    return float(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


# ---------------------------------------------------------------- parsing

def _logical_lines(text: str) -> Iterator[tuple[int, str]]:
    """Yield (line_index, line) with tab-continuation lines folded in."""
    current: list[str] = []
    start = 0
    for i, line in enumerate(text.splitlines()):
        if line.startswith("\t") and current:
            current.append(line.strip())
            continue
        if current:
            yield start, " ".join(current)
        current, start = [line.rstrip()], i
    if current:
        yield start, " ".join(current)


def _split_id_header(value: str) -> list[str]:
    return [p.strip() for p in value.split("|")]


def parse_session(text: str, meta: SessionMeta | None = None, roles: RoleMap | None = None) -> Session:
    """Parse a CHAT-style transcript.

    ``*XXX:`` lines become utterances; ``@`` headers and ``%`` dependent
    tiers are kept as metadata. Missing identifiers in ``meta`` are filled
    from the target child's ``@ID`` header.
    """
    meta = meta or SessionMeta()
    roles = roles or RoleMap()
    headers: list[tuple[str, str]] = []
    tiers: list[Tier] = []
    utterances: list[Utterance] = []
    gem: str | None = None
    for idx, line in _logical_lines(text):
        if not line.strip():
            continue
        head, sep, body = line.partition(":")
        if line.startswith("@"):
            key = head[1:].strip()
            value = body.strip()
            headers.append((key, value))
            if key in ("G", "Bg"):
                gem = value or None
            elif key == "Eg":
                gem = None
            continue
        if line.startswith("%") and sep:
            utt_idx = len(utterances) - 1 if utterances else None
            tiers.append(Tier(head[1:].strip(), body.strip(), idx, utt_idx))
            continue
        if line.startswith("*") and sep:
            code = head[1:].strip()
            if not code:
                raise MalformedTranscript(f"line {idx}: empty speaker code")
            role = roles.role(code)
            raw = body.strip()
            tokens, unintelligible = clean_utterance(raw)
            utterances.append(
                Utterance(role, raw, tuple(tokens), idx, unintelligible, code, gem)
            )
            continue
        # anything else is stray text; ignored like other non-utterance lines
    if not utterances:
        raise MalformedTranscript("transcript contains no speaker lines")

    corpus_id, child_id, age_raw = meta.corpus_id, meta.child_id, meta.age_raw
    child_codes = {c for c, r in roles.mapping.items() if r is Role.CHILD}
    for key, value in headers:
        if key == "ID":
            parts = _split_id_header(value)
            if len(parts) > 2 and parts[2] in child_codes:
                corpus_id = corpus_id or (parts[1] or None)
                if age_raw is None and len(parts) > 3 and parts[3]:
                    age_raw = parts[3]
                if child_id is None and len(parts) > 9 and parts[9]:
                    child_id = parts[9]
        elif key == "Participants" and child_id is None:
            for entry in value.split(","):
                words = entry.split()
                if len(words) >= 3 and words[0] in child_codes:
                    child_id = words[1]
    try:
        age = parse_age(age_raw) if age_raw else None
    except UnparseableAge:
        age = None
    corpus_id = corpus_id or "corpus"
    child_id = child_id or "CHI"
    session_id = meta.session_id or (Path(meta.source).stem if meta.source else "s0")
    return Session(
        corpus_id=corpus_id,
        child_id=child_id,
        session_id=session_id,
        child_age_years=age,
        utterances=tuple(utterances),
        headers=tuple(headers),
        tiers=tuple(tiers),
        source=meta.source,
    )


def read_session(path: str | Path, meta: SessionMeta | None = None, roles: RoleMap | None = None) -> Session:
    path = Path(path)
    meta = meta or SessionMeta()
    if meta.source is None:
        meta = dataclasses.replace(meta, source=path.name)
    return parse_session(path.read_text(encoding="utf-8", errors="replace"), meta, roles)


# ---------------------------------------------------------------- filtering

def _keyword_regex(keyword: str) -> re.Pattern:
    return re.compile(r"(?<![\w-])" + re.escape(keyword.lower()) + r"(?![\w-])")


def _match_class(text: str, cfg: FilterConfig) -> tuple[str, str] | None:
    low = text.lower()
    for cls_name, keywords in cfg.exclusion_keywords.items():
        for kw in keywords:
            if _keyword_regex(kw).search(low):
                return cls_name, kw
    return None


def filter_session(s: Session, cfg: FilterConfig | None = None) -> Session:
    """Apply exclusion rules and drop empty or noise-only utterances.

    Utterance text is never modified; the session is either marked
    excluded with a reason, or returned with offending utterances removed.
    """
    cfg = cfg or FilterConfig()

    def excluded(reason: str, detail: str) -> Session:
        return dataclasses.replace(s, excluded=True, exclusion_reason=reason, exclusion_detail=detail)

    if s.source:
        for cls_name, patterns in cfg.filename_patterns.items():
            for pat in patterns:
                if fnmatch.fnmatch(s.source.lower(), pat.lower()):
                    return excluded(cls_name, f"filename matches {pat!r}")

    gem_keys = {"G", "Bg", "Eg"}
    bad_gems: set[str] = set()
    for key, value in s.headers:
        if key not in cfg.search_headers:
            continue
        hit = _match_class(value, cfg)
        if hit is None:
            continue
        if cfg.scope == "segment" and key in gem_keys:
            bad_gems.add(value)
            continue
        return excluded(hit[0], f"@{key} matched {hit[1]!r}")
    for tier in s.tiers:
        if tier.name not in cfg.search_tiers:
            continue
        hit = _match_class(tier.text, cfg)
        if hit is not None:
            return excluded(hit[0], f"%{tier.name} line {tier.line_index} matched {hit[1]!r}")

    if s.child_age_years is None:
        return excluded(ExclusionClass.AGE_MISSING.value, "no parseable child age")
    if not (cfg.min_age <= s.child_age_years <= cfg.max_age):
        return excluded(
            ExclusionClass.AGE_OUT_OF_RANGE.value,
            f"age {s.child_age_years} outside [{cfg.min_age}, {cfg.max_age}]",
        )

    kept = tuple(
        u for u in s.utterances
        if not u.unintelligible_only and not (u.gem is not None and u.gem in bad_gems)
    )
    return dataclasses.replace(s, utterances=kept)


# ---------------------------------------------------------------- pairs

def align_pairs(s: Session) -> list[DialoguePair]:
    """One pair per child utterance whose immediate predecessor is an adult turn."""
    pairs: list[DialoguePair] = []
    prev: Utterance | None = None
    for u in s.utterances:
        if u.speaker_role is Role.CHILD and prev is not None and prev.speaker_role is Role.ADULT:
            pairs.append(
                DialoguePair(s.ref, prev, u, len(pairs), s.corpus_id, s.child_id, s.child_age_years)
            )
        prev = u
    return pairs


PAIR_FIELDS = (
    "pair_id", "session_ref", "pair_index", "corpus_id", "child_id", "child_age_years",
    "adult_speaker", "adult_line", "adult_text", "adult_tokens",
    "child_line", "child_text", "child_tokens",
)


def pair_to_record(p: DialoguePair) -> dict:
    return {
        "pair_id": p.pair_id,
        "session_ref": p.session_ref,
        "pair_index": p.pair_index,
        "corpus_id": p.corpus_id,
        "child_id": p.child_id,
        "child_age_years": p.child_age_years,
        "adult_speaker": p.adult.speaker_code,
        "adult_line": p.adult.line_index,
        "adult_text": p.adult.raw_text,
        "adult_tokens": list(p.adult.clean_tokens),
        "child_line": p.child.line_index,
        "child_text": p.child.raw_text,
        "child_tokens": list(p.child.clean_tokens),
    }


def record_to_pair(r: dict) -> DialoguePair:
    adult = Utterance(Role.ADULT, r["adult_text"], tuple(r["adult_tokens"]), r["adult_line"],
                      not r["adult_tokens"], r.get("adult_speaker", ""))
    child = Utterance(Role.CHILD, r["child_text"], tuple(r["child_tokens"]), r["child_line"],
                      not r["child_tokens"], "CHI")
    return DialoguePair(r["session_ref"], adult, child, r["pair_index"], r["corpus_id"],
                        r["child_id"], r["child_age_years"])


def write_pairs_jsonl(pairs: Iterable[DialoguePair], fh) -> int:
    n = 0
    for p in pairs:
        fh.write(json.dumps(pair_to_record(p), ensure_ascii=False, sort_keys=True) + "\n")
        n += 1
    return n


def read_pairs_jsonl(path: str | Path) -> list[DialoguePair]:
    with open(path, encoding="utf-8") as fh:
        return [record_to_pair(json.loads(line)) for line in fh if line.strip()]


def ingest_directory(directory: str | Path, cfg: FilterConfig | None = None,
                     pattern: str = "*.cha") -> tuple[list[Session], list[DialoguePair]]:
    """Parse, filter and align every transcript under ``directory`` (sorted by path)."""
    cfg = cfg or FilterConfig()
    root = Path(directory)
    sessions: list[Session] = []
    pairs: list[DialoguePair] = []
    for path in sorted(root.rglob(pattern)):
        rel = path.relative_to(root)
        meta = SessionMeta(session_id=str(rel.with_suffix("")).replace("/", "__"), source=path.name)
        s = filter_session(read_session(path, meta, cfg.roles), cfg)
        sessions.append(s)
        if not s.excluded:
            pairs.extend(align_pairs(s))
    return sessions, pairs
