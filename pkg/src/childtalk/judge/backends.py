"""Judge backends: an HTTP chat-completion client and an offline mock."""
from __future__ import annotations

import json
import os
import re
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

from ..errors import BackendError, ConfigError
from .mock import mock_ei, mock_pt
from .prompts import (
    CONVERSATION_MARKER,
    dialogue_section,
    load_template,
    AGE_TEMPLATE,
    render_ei_output,
    render_pt_output,
)
from .taxonomy import EIScore


class BackendUnavailable(BackendError):
    pass


@runtime_checkable
class JudgeBackend(Protocol):
    judge_id: str

    def complete(self, prompt: str) -> str:
        ...


_PT_ITEM = re.compile(r"^\[(\d+)-a\]\s?(.*)$")
_EI_ITEM = re.compile(r"^\[(\d+)\]\s?(?:Child:\s?)?(.*)$")
_ADULT_ITEM = re.compile(r"^Adult:\s?(.*)$")
_AGE_HEAD = load_template(AGE_TEMPLATE).partition("{DIALOGUE}")[0]


class MockBackend:
    """Answers rendered prompts with the rule-based mock judge.

    ``fail_first`` makes the first n calls raise, ``garble_first`` makes the
    first n calls return an unparseable reply; both are for exercising retries.
    """

    def __init__(self, judge_id: str = "mock", fail_first: int = 0, garble_first: int = 0):
        self.judge_id = judge_id
        self.fail_first = fail_first
        self.garble_first = garble_first
        self.calls = 0
        self.prompts: list[str] = []
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls += 1
            n = self.calls
            self.prompts.append(prompt)
        if n <= self.fail_first:
            raise BackendUnavailable(f"scripted failure {n}/{self.fail_first}")
        if n <= self.fail_first + self.garble_first:
            return "I am not sure how to answer that."
        if prompt.startswith(_AGE_HEAD):
            return self._age(prompt[len(_AGE_HEAD):])
        if CONVERSATION_MARKER not in prompt:
            raise BackendError("mock backend received an unrecognised prompt")
        section = dialogue_section(prompt)
        if "-a]" in section:
            return self._pt(section)
        return self._ei(section)

    @staticmethod
    def _pt(section: str) -> str:
        turns = [m.group(2) for m in map(_PT_ITEM.match, section.splitlines()) if m]
        return render_pt_output([mock_pt(t) for t in turns])

    @staticmethod
    def _ei(section: str) -> str:
        scores: list[EIScore] = []
        last_adult = ""
        for line in section.splitlines():
            a = _ADULT_ITEM.match(line)
            if a:
                last_adult = a.group(1)
                continue
            m = _EI_ITEM.match(line)
            if m:
                scores.append(mock_ei(m.group(2), last_adult))
                last_adult = ""
        return render_ei_output(scores)

    @staticmethod
    def _age(body: str) -> str:
        # Crude length-to-age map: about one year per added word of MLU.
        lines = [ln.split() for ln in body.split("\n\nOutput:")[0].splitlines() if ln.strip()]
        if not lines:
            return "5 years 0 months"
        mlu = sum(map(len, lines)) / len(lines)
        months = int(round(12 * min(10.0, max(2.0, 1.2 + 1.1 * mlu))))
        return f"{months // 12} years {months % 12} months"


def _dig(obj, path: Sequence):
    for key in path:
        try:
            obj = obj[key]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"response lacks field {list(path)!r}") from exc
    return obj


@dataclass
class HTTPBackend:
    """Chat-completion JSON endpoint (OpenAI-style request shape by default)."""

    base_url: str
    model: str
    temperature: float = 0.0
    api_key_env: str = "JUDGE_API_KEY"
    response_path: tuple = ("choices", 0, "message", "content")
    timeout: float = 120.0
    extra_headers: dict = field(default_factory=dict)

    @property
    def judge_id(self) -> str:
        return f"{self.model}@{self.base_url}"

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json", **self.extra_headers}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, prompt: str) -> str:
        body = json.dumps({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }).encode("utf-8")
        req = urllib.request.Request(self.base_url, data=body, headers=self._headers(), method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            if exc.code in (400, 401, 403, 404):
                raise BackendError(f"judge endpoint rejected request: HTTP {exc.code}") from exc
            raise BackendUnavailable(f"HTTP {exc.code}") from exc
        except (urllib.error.URLError, TimeoutError, ConnectionError, json.JSONDecodeError) as exc:
            raise BackendUnavailable(str(exc)) from exc
        content = _dig(payload, self.response_path)
        if not isinstance(content, str):
            raise BackendError("response content is not a string")
        return content


class RateLimiter:
    """Minimum spacing between call starts, shared across threads."""

    def __init__(self, per_second: float | None):
        self.interval = 0.0 if not per_second else 1.0 / per_second
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self):
        if not self.interval:
            return
        with self._lock:
            now = time.monotonic()
            start = max(now, self._next)
            self._next = start + self.interval
        delay = start - time.monotonic()
        if delay > 0:
            time.sleep(delay)


def make_backend(spec: dict) -> JudgeBackend:
    """Build a backend from a config mapping with a ``kind`` of mock or http."""
    spec = dict(spec)
    kind = spec.pop("kind", "mock")
    if kind == "mock":
        try:
            return MockBackend(**spec)
        except TypeError as exc:
            raise ConfigError(f"bad mock backend config: {exc}") from exc
    if kind == "http":
        if "response_path" in spec:
            spec["response_path"] = tuple(spec["response_path"])
        try:
            return HTTPBackend(**spec)
        except TypeError as exc:
            raise ConfigError(f"bad http backend config: {exc}") from exc
    raise ConfigError(f"unknown backend kind {kind!r}")
