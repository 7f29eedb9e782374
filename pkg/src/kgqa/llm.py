"""Uniform completion port: deterministic scripted mock and generic HTTP client.

Every component that needs text generation talks to ``CompletionPort``. Tests
and oracle runs use ``ScriptedCompletionPort`` (first matching rule wins,
fully deterministic); live runs use ``HttpCompletionPort`` against any
JSON completion or chat endpoint.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import requests

from .errors import LlmFailure

__all__ = [
    "CompletionRequest",
    "CompletionPort",
    "MockRule",
    "MockScript",
    "ScriptedCompletionPort",
    "HttpConfig",
    "HttpCompletionPort",
    "build_port",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = 512
    temperature: float = 0.0  # deterministic decoding in every shipped configuration
    stop_sequences: tuple[str, ...] = ()


class CompletionPort(Protocol):
    def complete(self, req: CompletionRequest) -> str: ...


@dataclass(frozen=True)
class MockRule:
    """One scripted behavior: respond when the prompt contains ``match`` or matches ``pattern``."""

    response: str
    match: str | None = None
    pattern: str | None = None

    def __post_init__(self):
        if (self.match is None) == (self.pattern is None):
            raise ValueError("rule needs exactly one of 'match' (substring) or 'pattern' (regex)")

    def applies(self, prompt: str) -> bool:
        if self.match is not None:
            return self.match in prompt
        return re.search(self.pattern, prompt) is not None


@dataclass
class MockScript:
    """Ordered rules plus a default; evaluation is deterministic by construction."""

    rules: list[MockRule] = field(default_factory=list)
    default_response: str = ""

    @classmethod
    def from_file(cls, path) -> "MockScript":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        rules = [
            MockRule(
                response=entry["response"],
                match=entry.get("match"),
                pattern=entry.get("pattern"),
            )
            for entry in data.get("rules", [])
        ]
        return cls(rules=rules, default_response=data.get("default_response", ""))

    def to_file(self, path) -> None:
        data = {
            "rules": [
                {("match" if r.match is not None else "pattern"): r.match or r.pattern, "response": r.response}
                for r in self.rules
            ],
            "default_response": self.default_response,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, ensure_ascii=False, indent=1)


class ScriptedCompletionPort:
    """Completion port backed by a MockScript. Immutable after construction."""

    def __init__(self, script: MockScript):
        self._rules = tuple(script.rules)
        self._default = script.default_response

    def complete(self, req: CompletionRequest) -> str:
        if not req.prompt:
            raise ValueError("prompt is empty")
        for rule in self._rules:
            if rule.applies(req.prompt):
                return rule.response
        return self._default


@dataclass
class HttpConfig:
    """Where and how to reach a completion endpoint.

    ``payload_shape`` selects between prompt-completion and chat-messages
    request bodies; chat-tuned models often reject the former outright, so
    this is configuration rather than a hardcoded choice.
    """

    url: str
    model: str = ""
    api_key_env: str = ""
    payload_shape: str = "prompt"  # "prompt" | "chat"
    timeout: float = 60.0
    debug: bool = False

    def __post_init__(self):
        if self.payload_shape not in ("prompt", "chat"):
            raise ValueError(f"payload_shape must be 'prompt' or 'chat', got {self.payload_shape!r}")


class HttpCompletionPort:
    """Generic JSON completion client; one retry on transport-level failure."""

    def __init__(self, config: HttpConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    def _body(self, req: CompletionRequest) -> dict:
        body: dict = {
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
        }
        if self.config.model:
            body["model"] = self.config.model
        if req.stop_sequences:
            body["stop"] = list(req.stop_sequences)
        if self.config.payload_shape == "chat":
            body["messages"] = [{"role": "user", "content": req.prompt}]
        else:
            body["prompt"] = req.prompt
        return body

    def _extract_text(self, payload: dict) -> str:
        try:
            choice = payload["choices"][0]
        except (KeyError, IndexError, TypeError) as exc:
            raise LlmFailure(f"completion payload malformed: {exc!r}", kind="malformed") from exc
        if "message" in choice:
            text = choice["message"].get("content")
        else:
            text = choice.get("text")
        if not isinstance(text, str):
            raise LlmFailure("completion payload carries no text", kind="malformed")
        return text

    def complete(self, req: CompletionRequest) -> str:
        if not req.prompt:
            raise ValueError("prompt is empty")
        if self.config.debug:
            logger.debug("POST %s payload=%s", self.config.url, _redacted(self._body(req)))
        last: LlmFailure | None = None
        for attempt in range(2):  # one retry on transport failure
            try:
                response = self._session.post(
                    self.config.url,
                    json=self._body(req),
                    headers=self._headers(),
                    timeout=self.config.timeout,
                )
            except requests.Timeout as exc:
                raise LlmFailure(f"completion endpoint timed out: {exc}", kind="timeout") from exc
            except requests.RequestException as exc:
                last = LlmFailure(f"completion endpoint unreachable: {exc}", kind="transport")
                continue
            if response.status_code != 200:
                last = LlmFailure(
                    f"completion endpoint returned HTTP {response.status_code}", kind="transport"
                )
                continue
            try:
                payload = response.json()
            except ValueError as exc:
                raise LlmFailure(f"completion response is not JSON: {exc}", kind="malformed") from exc
            text = self._extract_text(payload)
            text = _apply_stops(text, req.stop_sequences)
            if self.config.debug:
                logger.debug("completion <- %r", text)
            return text
        assert last is not None
        raise last


def _apply_stops(text: str, stops: Sequence[str]) -> str:
    cut = len(text)
    for stop in stops:
        idx = text.find(stop)
        if idx != -1:
            cut = min(cut, idx)
    return text[:cut]


def _redacted(body: dict) -> dict:
    clean = dict(body)
    if "prompt" in clean and isinstance(clean["prompt"], str) and len(clean["prompt"]) > 400:
        clean["prompt"] = clean["prompt"][:400] + "...[truncated]"
    return clean


def build_port(spec: str, config: dict | None = None) -> CompletionPort:
    """Build a port from a CLI-style spec: ``mock:<script.json>`` or ``http``."""
    config = config or {}
    if spec.startswith("mock:"):
        return ScriptedCompletionPort(MockScript.from_file(spec[len("mock:") :]))
    if spec == "http":
        return HttpCompletionPort(
            HttpConfig(
                url=config.get("llm_url", ""),
                model=config.get("llm_model", ""),
                api_key_env=config.get("llm_api_key_env", ""),
                payload_shape=config.get("llm_payload_shape", "prompt"),
                timeout=float(config.get("llm_timeout", 60.0)),
                debug=bool(config.get("llm_debug", False)),
            )
        )
    raise ValueError(f"unknown llm spec {spec!r}; expected 'mock:<script>' or 'http'")
