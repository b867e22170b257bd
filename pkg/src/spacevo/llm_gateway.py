"""Text-generation backends and program extraction from model responses."""
from __future__ import annotations

import io
import json
import os
import re
import textwrap
import threading
import time
import tokenize
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import requests

from .priolang import SourceProgram

DEFAULT_MODEL = "qwen/qwen-2.5-72b-instruct"
DEFAULT_BASE_URL = "https://openrouter.ai/api/v1"
RETRY_DELAYS = (1.0, 4.0, 16.0)


class GatewayError(RuntimeError):
    pass


class BudgetExhausted(GatewayError):
    pass


class TransportError(GatewayError):
    pass


class MalformedResponse(GatewayError):
    pass


class ScriptExhausted(GatewayError):
    pass


class NoProgramFound(ValueError):
    pass


@dataclass
class ChatRequest:
    prompt: str
    model: str = DEFAULT_MODEL
    temperature: float = 1.0
    max_tokens: int = 2048
    process_id: int = 0

    @property
    def messages(self) -> list[dict]:
        return [{"role": "user", "content": self.prompt}]


class BudgetCounter:
    """Total model calls across all search processes; increments are locked."""

    def __init__(self, limit: int):
        self.limit = int(limit)
        self.used = 0
        self._lock = threading.Lock()

    @property
    def remaining(self) -> int:
        return self.limit - self.used

    def take(self) -> int:
        """Consume one unit and return its 1-based call index."""
        with self._lock:
            if self.used >= self.limit:
                raise BudgetExhausted(f"budget of {self.limit} calls used up")
            self.used += 1
            return self.used


class Backend:
    """Base class: ``complete`` charges the budget, then calls ``_complete``."""

    def __init__(self, budget: Optional[BudgetCounter] = None):
        self.budget = budget

    def complete(self, req: ChatRequest) -> str:
        if self.budget is not None:
            self.budget.take()
        return self._complete(req)

    def _complete(self, req: ChatRequest) -> str:
        raise NotImplementedError


class HttpBackend(Backend):
    """OpenAI-compatible ``/chat/completions`` client (OpenRouter by default)."""

    def __init__(self, api_key: str, base_url: str = DEFAULT_BASE_URL,
                 model: Optional[str] = None, budget: Optional[BudgetCounter] = None,
                 timeout: float = 120.0, retry_delays=RETRY_DELAYS,
                 sleep: Callable[[float], None] = time.sleep,
                 session: Optional[requests.Session] = None):
        super().__init__(budget)
        self.api_key = api_key
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout = timeout
        self.retry_delays = tuple(retry_delays)
        self.sleep = sleep
        self.session = session or requests.Session()

    @classmethod
    def from_env(cls, budget: Optional[BudgetCounter] = None, **kw) -> "HttpBackend":
        key = os.environ.get("LLM_API_KEY")
        if not key:
            raise GatewayError("LLM_API_KEY is not set")
        return cls(key, os.environ.get("LLM_BASE_URL", DEFAULT_BASE_URL),
                   os.environ.get("LLM_MODEL") or None, budget, **kw)

    def _complete(self, req: ChatRequest) -> str:
        payload = {
            "model": self.model or req.model,
            "messages": req.messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}",
                   "Content-Type": "application/json"}
        url = f"{self.base_url}/chat/completions"
        last: Exception | None = None
        for attempt in range(len(self.retry_delays) + 1):
            if attempt:
                self.sleep(self.retry_delays[attempt - 1])
            try:
                resp = self.session.post(url, json=payload, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponse(f"response lacks message content: {exc}") from None
            if not isinstance(content, str):
                raise MalformedResponse("message content is not text")
            return content
        raise TransportError(f"request failed after {len(self.retry_delays)} retries: {last}")


class ScriptedBackend(Backend):
    """Replays canned responses, one queue per process id.

    Responses without a process id go to a shared queue used when a
    process has no queue of its own.
    """

    def __init__(self, responses=(), budget: Optional[BudgetCounter] = None):
        super().__init__(budget)
        self.queues: dict[Optional[int], deque] = {}
        self._lock = threading.Lock()
        for r in responses:
            if isinstance(r, str):
                self.queues.setdefault(None, deque()).append(r)
            else:
                self.queues.setdefault(r.get("process_id"), deque()).append(r["content"])

    @classmethod
    def from_file(cls, path, budget: Optional[BudgetCounter] = None) -> "ScriptedBackend":
        items = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
                items.append(obj if isinstance(obj, dict) else str(obj))
        return cls(items, budget)

    def _complete(self, req: ChatRequest) -> str:
        with self._lock:
            q = self.queues.get(req.process_id)
            if not q:
                q = self.queues.get(None)
            if not q:
                raise ScriptExhausted(f"no scripted response left for process {req.process_id}")
            return q.popleft()


_FENCE = re.compile(r"```[ \t]*[A-Za-z0-9_+-]*[ \t]*\n(.*?)```", re.S)
_DEF = re.compile(r"^([ \t]*)def\s+\w+\s*\(", re.M)


def _strip_comments(code: str) -> str:
    try:
        tokens = list(tokenize.generate_tokens(io.StringIO(code).readline))
    except (tokenize.TokenError, IndentationError, SyntaxError):
        return code
    lines = code.splitlines(keepends=True)
    for tok in reversed(tokens):
        if tok.type == tokenize.COMMENT:
            row, col = tok.start
            line = lines[row - 1]
            kept = line[:col].rstrip()
            lines[row - 1] = kept + ("\n" if line.endswith("\n") and kept else "")
    return "".join(lines)


def extract_program(response: str) -> SourceProgram:
    """Pull the last function definition out of a model response."""
    blocks = _FENCE.findall(response)
    code = "\n".join(blocks) if blocks else response
    matches = list(_DEF.finditer(code))
    if not matches:
        raise NoProgramFound("response contains no function definition")
    start = matches[-1]
    indent = start.group(1)
    lines = code[start.start():].splitlines()
    body = [lines[0]]
    for line in lines[1:]:
        if line.strip() and len(line) - len(line.lstrip()) <= len(indent):
            break
        body.append(line)
    text = textwrap.dedent("\n".join(body)).rstrip() + "\n"
    return SourceProgram(_strip_comments(text), "llm")
