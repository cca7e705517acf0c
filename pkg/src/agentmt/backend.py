"""Chat-completion backends: an OpenAI-compatible HTTP client and a scripted mock."""

from __future__ import annotations

import json
import logging
import math
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Mapping, Protocol

import httpx

__all__ = [
    "AuthError",
    "Backend",
    "BackendConfig",
    "BackendError",
    "BackendRegistry",
    "ChatRequest",
    "ChatResponse",
    "LiveBackend",
    "Message",
    "MissingApiKey",
    "RateLimited",
    "ScriptEntry",
    "ScriptError",
    "ScriptMiss",
    "ScriptedBackend",
    "TransportError",
    "Usage",
    "build_registry",
    "estimate_tokens",
    "load_script",
    "make_backend",
]

log = logging.getLogger(__name__)

Role = Literal["system", "user", "assistant"]


class BackendError(Exception):
    pass


class AuthError(BackendError):
    pass


class MissingApiKey(AuthError):
    def __init__(self, env_var: str, backend_id: str):
        super().__init__(f"environment variable {env_var} is not set (backend {backend_id!r})")
        self.env_var = env_var


class RateLimited(BackendError):
    pass


class TransportError(BackendError):
    pass


class ScriptMiss(BackendError):
    def __init__(self, tag: str):
        super().__init__(f"no script entry matches {tag!r}")
        self.tag = tag


class ScriptError(ValueError):
    """Script file could not be parsed or is inconsistent."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def estimate_tokens(text: str) -> int:
    """Rough token count: one token per four characters, rounded up."""
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    estimated: bool = False

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def __add__(self, other: Usage) -> Usage:
        return Usage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
            self.estimated or other.estimated,
        )

    def to_dict(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "estimated": self.estimated,
        }


@dataclass(frozen=True)
class Message:
    role: Role
    content: str

    def to_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[Message, ...]
    temperature: float
    # Workflow node name, and a finer per-call key (e.g. "worker[2]"), used by the mock.
    tag: str | None = None
    call_key: str | None = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("request needs at least one message")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message must be a system or user message")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} out of range [0, 2]")

    @property
    def user_text(self) -> str:
        return "\n".join(m.content for m in self.messages if m.role == "user")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    usage: Usage
    attempts: int = 1


@dataclass(frozen=True)
class BackendConfig:
    backend_id: str
    kind: Literal["live", "scripted"]
    base_url: str | None = None
    api_key_env: str | None = None
    timeout: float = 60.0
    max_retries: int = 3
    backoff: float = 1.0
    script_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("live", "scripted"):
            raise ValueError(f"backend {self.backend_id!r}: unknown kind {self.kind!r}")
        if self.kind == "live" and (not self.base_url or not self.api_key_env):
            raise ValueError(f"backend {self.backend_id!r}: live backends need base_url and api_key_env")
        if self.kind == "scripted" and not self.script_path:
            raise ValueError(f"backend {self.backend_id!r}: scripted backends need script_path")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @classmethod
    def from_dict(cls, data: Mapping) -> BackendConfig:
        return cls(
            backend_id=data["id"],
            kind=data["kind"],
            base_url=data.get("base_url"),
            api_key_env=data.get("api_key_env"),
            timeout=float(data.get("timeout", 60.0)),
            max_retries=int(data.get("max_retries", 3)),
            backoff=float(data.get("backoff", 1.0)),
            script_path=data.get("script"),
        )

    def to_dict(self) -> dict:
        out = {"id": self.backend_id, "kind": self.kind}
        if self.kind == "live":
            out.update(
                base_url=self.base_url,
                api_key_env=self.api_key_env,
                timeout=self.timeout,
                max_retries=self.max_retries,
                backoff=self.backoff,
            )
        else:
            out["script"] = self.script_path
        return out


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


# --------------------------------------------------------------------------- scripted


@dataclass
class ScriptEntry:
    key: str
    responses: list[str]
    match_substring: str | None = None
    calls: int = field(default=0, compare=False)

    def next_response(self) -> str:
        i = min(self.calls, len(self.responses) - 1)
        self.calls += 1
        return self.responses[i]


def _parse_script(text: str, source: str) -> list[ScriptEntry]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScriptError(f"{source}: {e.msg}", line=e.lineno) from None
    if not isinstance(data, list):
        raise ScriptError(f"{source}: top level must be a list of entries", line=1)
    entries: list[ScriptEntry] = []
    seen: set[tuple[str, str | None]] = set()
    for i, item in enumerate(data):
        if not isinstance(item, dict) or not isinstance(item.get("key"), str):
            raise ScriptError(f"{source}: entry {i} needs a string 'key'")
        responses = item.get("responses")
        if (
            not isinstance(responses, list)
            or not responses
            or not all(isinstance(r, str) for r in responses)
        ):
            raise ScriptError(f"{source}: entry {i} ({item['key']!r}) needs a non-empty list of strings")
        sub = item.get("match_substring")
        if sub is not None and not isinstance(sub, str):
            raise ScriptError(f"{source}: entry {i} match_substring must be a string")
        ident = (item["key"], sub)
        if ident in seen:
            raise ScriptError(f"{source}: duplicate key {item['key']!r}" + (f" with match {sub!r}" if sub else ""))
        seen.add(ident)
        entries.append(ScriptEntry(item["key"], list(responses), sub))
    return entries


def load_script(path: str | Path) -> list[ScriptEntry]:
    path = Path(path)
    return _parse_script(path.read_text(encoding="utf-8"), str(path))


class ScriptedBackend:
    """Deterministic mock that answers from a script table.

    Lookup tries the request's ``call_key`` then its ``tag``; within a key,
    entries whose ``match_substring`` occurs in the user message are
    preferred (first declared wins), then the entry without a condition.
    Each entry hands out its responses in order and repeats the last one.
    Token usage is always estimated.
    """

    def __init__(self, entries: list[ScriptEntry]):
        self._entries = entries
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedBackend:
        return cls(load_script(path))

    @classmethod
    def from_data(cls, data: list[dict]) -> ScriptedBackend:
        return cls(_parse_script(json.dumps(data), "<inline>"))

    def _find(self, key: str, user_text: str) -> ScriptEntry | None:
        fallback = None
        for e in self._entries:
            if e.key != key:
                continue
            if e.match_substring is None:
                fallback = fallback or e
            elif e.match_substring in user_text:
                return e
        return fallback

    def complete(self, request: ChatRequest) -> ChatResponse:
        user_text = request.user_text
        keys = [k for k in (request.call_key, request.tag) if k]
        with self._lock:
            for key in keys:
                entry = self._find(key, user_text)
                if entry is not None:
                    content = entry.next_response()
                    break
            else:
                raise ScriptMiss(keys[-1] if keys else "<untagged>")
        prompt = sum(estimate_tokens(m.content) for m in request.messages)
        return ChatResponse(content, Usage(prompt, estimate_tokens(content), estimated=True))


# --------------------------------------------------------------------------- live


RETRY_STATUS = frozenset({429, 500, 502, 503, 504})


class LiveBackend:
    """Client for ``POST {base_url}/chat/completions``.

    Retries 429, 5xx and transport failures up to ``max_retries`` times with
    exponential backoff; 401/403 fail immediately.
    """

    def __init__(
        self,
        config: BackendConfig,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        environ: Mapping[str, str] | None = None,
    ):
        env = os.environ if environ is None else environ
        key = env.get(config.api_key_env or "")
        if not key:
            raise MissingApiKey(config.api_key_env or "<unset>", config.backend_id)
        self.config = config
        self._key = key
        self._client = client or httpx.Client(timeout=config.timeout)
        self._sleep = sleep

    @property
    def url(self) -> str:
        return self.config.base_url.rstrip("/") + "/chat/completions"

    def complete(self, request: ChatRequest) -> ChatResponse:
        payload = {
            "model": request.model_id,
            "messages": [m.to_dict() for m in request.messages],
            "temperature": request.temperature,
        }
        headers = {"Authorization": f"Bearer {self._key}"}
        cfg = self.config
        attempt = 0
        while True:
            attempt += 1
            retryable: BackendError
            try:
                resp = self._client.post(self.url, json=payload, headers=headers, timeout=cfg.timeout)
            except httpx.TimeoutException as e:
                retryable = TransportError(f"timeout calling {self.url}: {e}")
            except httpx.TransportError as e:
                retryable = TransportError(f"transport failure calling {self.url}: {e}")
            else:
                if resp.status_code in (401, 403):
                    raise AuthError(f"{cfg.backend_id}: HTTP {resp.status_code} from {self.url}")
                if resp.status_code == 429:
                    retryable = RateLimited(f"{cfg.backend_id}: HTTP 429 after {attempt} attempt(s)")
                elif resp.status_code in RETRY_STATUS:
                    retryable = TransportError(f"{cfg.backend_id}: HTTP {resp.status_code}")
                elif resp.status_code >= 400:
                    raise TransportError(f"{cfg.backend_id}: HTTP {resp.status_code}: {resp.text[:200]}")
                else:
                    return self._parse(resp, request, attempt)
            if attempt > cfg.max_retries:
                raise retryable
            delay = cfg.backoff * 2 ** (attempt - 1)
            log.warning("%s; retry %d/%d in %.2fs", retryable, attempt, cfg.max_retries, delay)
            self._sleep(delay)

    def _parse(self, resp: httpx.Response, request: ChatRequest, attempts: int) -> ChatResponse:
        try:
            body = resp.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransportError(f"{self.config.backend_id}: malformed completion body ({e})") from None
        if not isinstance(content, str):
            raise TransportError(f"{self.config.backend_id}: completion content is not a string")
        usage = body.get("usage") or {}
        if isinstance(usage.get("prompt_tokens"), int) and isinstance(usage.get("completion_tokens"), int):
            u = Usage(usage["prompt_tokens"], usage["completion_tokens"], estimated=False)
        else:
            prompt = sum(estimate_tokens(m.content) for m in request.messages)
            u = Usage(prompt, estimate_tokens(content), estimated=True)
        return ChatResponse(content, u, attempts)

    def close(self) -> None:
        self._client.close()


def make_backend(config: BackendConfig, base_dir: str | Path | None = None) -> Backend:
    if config.kind == "scripted":
        path = Path(config.script_path)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return ScriptedBackend.from_file(path)
    return LiveBackend(config)


class BackendRegistry(dict):
    """Maps backend ids to backend instances."""

    def resolve(self, backend_id: str) -> Backend:
        try:
            return self[backend_id]
        except KeyError:
            raise KeyError(f"no backend registered under {backend_id!r}") from None


def build_registry(
    configs: list[BackendConfig], base_dir: str | Path | None = None
) -> BackendRegistry:
    return BackendRegistry({c.backend_id: make_backend(c, base_dir) for c in configs})
