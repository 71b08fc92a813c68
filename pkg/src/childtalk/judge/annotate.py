"""Batch annotation of dialogue pairs through a judge backend.

Two passes are made: PT labels for every adult turn, then E/I scores for
every child turn that is not hesitation only. Good replies are cached on
disk keyed by (judge id, prompt), so an interrupted run resumes where it
stopped and a repeated run issues no calls.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

from ..corpus import DialoguePair, detect_hesitation_only
from ..errors import ConfigError
from .backends import BackendUnavailable, JudgeBackend, RateLimiter
from .mock import display_text
from .prompts import parse_ei_response, parse_pt_response, render_ei_prompt, render_pt_prompt
from .taxonomy import EIScore, FormatViolation, PTLabel, PTType

log = logging.getLogger("childtalk.judge")

CORRECTIVE_SUFFIX = (
    "\n\nYour previous reply did not follow the required output format. "
    "Reply again with exactly one line per numbered item, in the format shown above, "
    "and nothing else."
)


@dataclass
class JudgeConfig:
    batch_size: int = 20
    format_retries: int = 3
    backend_retries: int = 5
    backoff_seconds: float = 1.0
    max_in_flight: int = 4
    rate_per_second: float | None = None
    cache_dir: str | None = None
    dialogue_context: str = ""

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be at least 1")
        if self.format_retries < 0 or self.backend_retries < 0:
            raise ConfigError("retry limits must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "JudgeConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown judge config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Annotation:
    pair_ref: str
    pt: PTLabel
    ei: EIScore | None
    judge_id: str
    raw_response_hash: str
    note: str = ""

    def to_record(self) -> dict:
        return {
            "pair_ref": self.pair_ref,
            "pt": self.pt.subtype.value,
            "independence": None if self.ei is None else self.ei.independence,
            "expansion": None if self.ei is None else self.ei.expansion,
            "hesitation_only": None if self.ei is None else self.ei.hesitation_only,
            "judge_id": self.judge_id,
            "raw_response_hash": self.raw_response_hash,
            "note": self.note,
        }

    @classmethod
    def from_record(cls, r: dict) -> "Annotation":
        ei = None
        if r.get("independence") is not None:
            ei = EIScore(int(r["independence"]), int(r["expansion"]), bool(r["hesitation_only"]))
        return cls(r["pair_ref"], PTLabel.of(r["pt"]), ei, r["judge_id"],
                   r["raw_response_hash"], r.get("note", ""))


def write_annotations_jsonl(annotations: Iterable[Annotation], fh):
    for a in annotations:
        fh.write(json.dumps(a.to_record(), sort_keys=True) + "\n")


def read_annotations_jsonl(path) -> list[Annotation]:
    with open(path, encoding="utf-8") as fh:
        return [Annotation.from_record(json.loads(line)) for line in fh if line.strip()]


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class VerdictCache:
    """Content-addressed reply store; in memory when no directory is given.

    Each entry is one JSON file written by rename, so concurrent writers of the
    same key are harmless and readers never see a partial file.
    """

    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = Path(directory) if directory is not None else None
        self._mem: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(judge_id: str, prompt: str) -> str:
        return sha256(judge_id + "\x00" + prompt)

    def _path(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.json"

    def get(self, judge_id: str, prompt: str) -> str | None:
        k = self.key(judge_id, prompt)
        if self.directory is None:
            with self._lock:
                return self._mem.get(k)
        p = self._path(k)
        try:
            return json.loads(p.read_text(encoding="utf-8"))["response"]
        except FileNotFoundError:
            return None
        except (json.JSONDecodeError, KeyError):
            log.warning("ignoring corrupt cache entry %s", p)
            return None

    def put(self, judge_id: str, prompt: str, response: str):
        k = self.key(judge_id, prompt)
        if self.directory is None:
            with self._lock:
                self._mem[k] = response
            return
        p = self._path(k)
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=".tmp-", suffix=".json")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump({"judge_id": judge_id, "response": response}, fh)
        os.replace(tmp, p)

    def __len__(self) -> int:
        if self.directory is None:
            return len(self._mem)
        return sum(1 for _ in self.directory.glob("*/*.json"))


@dataclass
class AnnotationStats:
    backend_calls: int = 0
    cache_hits: int = 0
    backend_retries: int = 0
    format_retries: int = 0
    pt_fallbacks: int = 0
    ei_dropped: int = 0
    hesitation_shortcuts: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def bump(self, name: str, by: int = 1):
        with self._lock:
            setattr(self, name, getattr(self, name) + by)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if not f.name.startswith("_")}


def _chunks(seq: Sequence, size: int) -> list[Sequence]:
    return [seq[i:i + size] for i in range(0, len(seq), size)]


class Annotator:
    def __init__(self, backend: JudgeBackend, cfg: JudgeConfig | None = None,
                 cache: VerdictCache | None = None, sleep: Callable[[float], None] = time.sleep):
        self.backend = backend
        self.cfg = cfg or JudgeConfig()
        self.cache = cache if cache is not None else VerdictCache(self.cfg.cache_dir)
        self.stats = AnnotationStats()
        self._limiter = RateLimiter(self.cfg.rate_per_second)
        self._sleep = sleep

    @property
    def judge_id(self) -> str:
        return self.backend.judge_id

    def _call_backend(self, prompt: str) -> str:
        attempts = self.cfg.backend_retries + 1
        for attempt in range(1, attempts + 1):
            self._limiter.wait()
            try:
                self.stats.bump("backend_calls")
                return self.backend.complete(prompt)
            except BackendUnavailable as exc:
                if attempt == attempts:
                    raise BackendUnavailable(
                        f"judge unreachable after {attempts} attempts: {exc}") from exc
                self.stats.bump("backend_retries")
                log.info("backend call failed (%s); retry %d/%d", exc, attempt,
                         self.cfg.backend_retries)
                self._sleep(self.cfg.backoff_seconds * 2 ** (attempt - 1))
        raise AssertionError("unreachable")

    def _verdict(self, prompt: str, parse: Callable[[str], list]):
        """(parsed verdicts, reply hash), or (None, hash of last reply) when every attempt was malformed."""
        cached = self.cache.get(self.judge_id, prompt)
        if cached is not None:
            try:
                result = parse(cached)
                self.stats.bump("cache_hits")
                return result, sha256(cached)
            except FormatViolation:
                log.warning("cached reply no longer parses; re-querying")
        last = ""
        for attempt in range(self.cfg.format_retries + 1):
            sent = prompt if attempt == 0 else prompt + CORRECTIVE_SUFFIX
            reply = self._call_backend(sent)
            last = reply
            try:
                result = parse(reply)
            except FormatViolation as exc:
                if attempt < self.cfg.format_retries:
                    self.stats.bump("format_retries")
                    log.info("format violation (%s); re-prompting", exc)
                continue
            self.cache.put(self.judge_id, prompt, reply)
            return result, sha256(reply)
        return None, sha256(last)

    def _pt_batch(self, batch: Sequence[DialoguePair]):
        prompt = render_pt_prompt([display_text(p.adult) for p in batch], self.cfg.dialogue_context)
        labels, digest = self._verdict(prompt, lambda t: parse_pt_response(t, len(batch)))
        if labels is None:
            self.stats.bump("pt_fallbacks", len(batch))
            log.warning("PT batch unparseable after retries; recording AmbiguousUnclear for %d turns",
                        len(batch))
            labels = [PTLabel.of(PTType.AMBIGUOUS_UNCLEAR)] * len(batch)
            return labels, digest, "pt_format_fallback"
        return labels, digest, ""

    def _ei_batch(self, batch: Sequence[DialoguePair]):
        prompt = render_ei_prompt([display_text(p.child) for p in batch], self.cfg.dialogue_context,
                                  adult_turns=[display_text(p.adult) for p in batch])
        scores, digest = self._verdict(prompt, lambda t: parse_ei_response(t, len(batch)))
        if scores is None:
            self.stats.bump("ei_dropped", len(batch))
            log.warning("E/I batch unparseable after retries; dropping %d scores", len(batch))
            return [None] * len(batch), digest, "ei_format_dropped"
        return scores, digest, ""

    def annotate(self, pairs: Sequence[DialoguePair]) -> list[Annotation]:
        pairs = list(pairs)
        ids = [p.pair_id for p in pairs]
        if len(set(ids)) != len(ids):
            raise ValueError("pair ids must be unique")
        hes = [detect_hesitation_only(p.child) for p in pairs]
        content_idx = [i for i, h in enumerate(hes) if not h]
        self.stats.bump("hesitation_shortcuts", sum(hes))

        pt_batches = _chunks(pairs, self.cfg.batch_size)
        ei_batches = _chunks([pairs[i] for i in content_idx], self.cfg.batch_size)
        with ThreadPoolExecutor(max_workers=self.cfg.max_in_flight) as pool:
            pt_futs = [pool.submit(self._pt_batch, b) for b in pt_batches]
            ei_futs = [pool.submit(self._ei_batch, b) for b in ei_batches]
            pt_res = [f.result() for f in pt_futs]
            ei_res = [f.result() for f in ei_futs]

        pt_out, pt_hash, notes = [], [], []
        for labels, digest, note in pt_res:
            pt_out.extend(labels)
            pt_hash.extend([digest] * len(labels))
            notes.extend([note] * len(labels))
        ei_out: list[EIScore | None] = [EIScore.hesitation() if h else None for h in hes]
        ei_hash = [""] * len(pairs)
        flat = [(s, d, n) for scores, d, n in ei_res for s in scores]
        for i, (score, digest, note) in zip(content_idx, flat):
            ei_out[i] = score
            ei_hash[i] = digest
            if note:
                notes[i] = ";".join(x for x in (notes[i], note) if x)

        return [
            Annotation(
                pair_ref=ids[i], pt=pt_out[i], ei=ei_out[i], judge_id=self.judge_id,
                raw_response_hash=sha256(pt_hash[i] + ":" + ei_hash[i]), note=notes[i],
            )
            for i in range(len(pairs))
        ]


def annotate(pairs: Sequence[DialoguePair], backend: JudgeBackend, cfg: JudgeConfig | None = None,
             cache: VerdictCache | None = None) -> list[Annotation]:
    return Annotator(backend, cfg, cache).annotate(pairs)
