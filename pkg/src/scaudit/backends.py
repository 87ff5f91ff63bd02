"""Model backends: HTTP chat completion, offline mock, and recorded replay.

All completions flow through a content-addressed on-disk cache keyed by a
stable hash of (backend id, model name, prompt text, generation params), so a
warm rerun never touches a backend. Fan-out runs pairs concurrently but the
result order is a pure function of the inputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
import urllib.parse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol

import httpx

from .errors import (
    AuthError,
    BackendRefusalError,
    ConfigError,
    ContextOverflowError,
    NetworkError,
    ReplayMissError,
    ScauditError,
)
from .prompting import RenderedPrompt

BACKEND_KINDS = ("http_chat", "mock", "replay")


@dataclass(frozen=True)
class GenerationParams:
    """Sampling parameters sent with every completion request."""

    max_new_tokens: int = 800
    temperature: float = 0.1
    top_k: int = 10
    top_p: float = 0.95
    num_return_sequences: int = 1
    repetition_penalty: float = 1.5

    def validate(self) -> None:
        for name in ("max_new_tokens", "temperature", "top_k", "top_p", "repetition_penalty"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"generation param {name} must be positive")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigError(f"top_p must lie in (0, 1], got {self.top_p}")
        if self.num_return_sequences != 1:
            raise ConfigError("num_return_sequences must be 1")

    def to_dict(self) -> dict:
        return {
            "max_new_tokens": self.max_new_tokens,
            "temperature": self.temperature,
            "top_k": self.top_k,
            "top_p": self.top_p,
            "num_return_sequences": self.num_return_sequences,
            "repetition_penalty": self.repetition_penalty,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GenerationParams":
        known = {f: obj[f] for f in cls.__dataclass_fields__ if f in obj}
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown generation params: {sorted(unknown)}")
        return cls(**known)


@dataclass(frozen=True)
class BackendSpec:
    backend_id: str
    kind: str
    model_name: str
    endpoint: str = ""
    auth: str = ""  # name of the environment variable holding the secret

    def validate(self) -> None:
        if not self.backend_id:
            raise ConfigError("backend_id must be non-empty")
        if self.kind not in BACKEND_KINDS:
            raise ConfigError(f"backend {self.backend_id!r}: kind must be one of {BACKEND_KINDS}")
        if self.kind == "http_chat":
            parsed = urllib.parse.urlparse(self.endpoint)
            if parsed.scheme not in ("http", "https") or not parsed.netloc:
                raise ConfigError(f"backend {self.backend_id!r}: endpoint must be a valid http(s) URL")


@dataclass(frozen=True)
class Completion:
    backend_id: str
    contract_id: str
    prompt_hash: str
    raw_text: str
    latency_ms: int = 0
    from_cache: bool = False
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def prompt_hash(spec: BackendSpec, prompt_text: str, params: GenerationParams) -> str:
    """Stable content hash; changing any input field changes the key."""
    payload = json.dumps(
        {
            "backend_id": spec.backend_id,
            "model_name": spec.model_name,
            "prompt": prompt_text,
            "params": params.to_dict(),
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CompletionCache:
    """One file per prompt hash; writes go through an atomic rename."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> Completion | None:
        path = self._path(key)
        if not path.is_file():
            return None
        try:
            obj = json.loads(path.read_text())
        except (ValueError, OSError):
            return None
        return Completion(
            backend_id=obj["backend_id"],
            contract_id=obj["contract_id"],
            prompt_hash=obj["prompt_hash"],
            raw_text=obj["raw_text"],
            latency_ms=obj.get("latency_ms", 0),
            from_cache=True,
        )

    def put(self, completion: Completion) -> None:
        obj = {
            "backend_id": completion.backend_id,
            "contract_id": completion.contract_id,
            "prompt_hash": completion.prompt_hash,
            "raw_text": completion.raw_text,
            "latency_ms": completion.latency_ms,
        }
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(json.dumps(obj, sort_keys=True))
            os.replace(tmp, self._path(completion.prompt_hash))
        except OSError:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class Backend(Protocol):
    spec: BackendSpec

    def generate(self, prompt: RenderedPrompt, params: GenerationParams) -> str: ...


class MockBackend:
    """Offline backend with canned responses and a call counter for tests."""

    def __init__(
        self,
        spec: BackendSpec,
        responses: dict[str, str] | None = None,
        default_response: str = '{"output_list": []}',
    ):
        self.spec = spec
        self.responses = dict(responses or {})
        self.default_response = default_response
        self.calls = 0

    def generate(self, prompt: RenderedPrompt, params: GenerationParams) -> str:
        self.calls += 1
        return self.responses.get(prompt.contract_id, self.default_response)


class ReplayBackend:
    """Serves completions recorded in a line-delimited fixture file.

    Fixture lines carry {"backend_id", "contract_id", "raw_text"}; a missing
    (backend, contract) pair raises so fan-out records a failed entry.
    """

    def __init__(self, spec: BackendSpec, fixture_path: str | Path):
        self.spec = spec
        self.fixture_path = Path(fixture_path)
        if not self.fixture_path.is_file():
            raise ConfigError(f"replay fixture not found: {self.fixture_path}")
        self._recorded: dict[tuple[str, str], str] = {}
        for line in self.fixture_path.read_text().splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            self._recorded[(obj["backend_id"], obj["contract_id"])] = obj["raw_text"]

    def generate(self, prompt: RenderedPrompt, params: GenerationParams) -> str:
        key = (self.spec.backend_id, prompt.contract_id)
        if key not in self._recorded:
            raise ReplayMissError(
                f"no recorded completion for backend {key[0]!r} contract {key[1]!r}"
            )
        return self._recorded[key]


def build_request_payload(spec: BackendSpec, prompt: RenderedPrompt, params: GenerationParams) -> dict:
    """Chat-completion request body; carries the sampling params verbatim."""
    return {
        "model": spec.model_name,
        "messages": [{"role": "user", "content": prompt.text}],
        "max_new_tokens": params.max_new_tokens,
        "max_tokens": params.max_new_tokens,  # alias understood by common chat servers
        "temperature": params.temperature,
        "top_k": params.top_k,
        "top_p": params.top_p,
        "num_return_sequences": params.num_return_sequences,
        "repetition_penalty": params.repetition_penalty,
    }


class HttpChatBackend:
    """POSTs chat-completion requests and unwraps choices[0].message.content."""

    def __init__(
        self,
        spec: BackendSpec,
        timeout: float = 120.0,
        retries: int = 3,
        backoff: float = 1.0,
        client: httpx.Client | None = None,
    ):
        spec.validate()
        self.spec = spec
        self.retries = retries
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.spec.auth:
            secret = os.environ.get(self.spec.auth)
            if not secret:
                raise AuthError(f"environment variable {self.spec.auth!r} is not set")
            headers["Authorization"] = f"Bearer {secret}"
        return headers

    def generate(self, prompt: RenderedPrompt, params: GenerationParams) -> str:
        payload = build_request_payload(self.spec, prompt, params)
        headers = self._headers()
        last_exc: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = self._client.post(self.spec.endpoint, json=payload, headers=headers)
                break
            except httpx.TransportError as exc:
                last_exc = exc
                if attempt < self.retries - 1:
                    time.sleep(self.backoff * (2**attempt))
        else:
            raise NetworkError(f"backend {self.spec.backend_id!r}: {last_exc}") from last_exc
        if resp.status_code in (401, 403):
            raise AuthError(f"backend {self.spec.backend_id!r}: HTTP {resp.status_code}")
        if resp.status_code == 413 or (resp.status_code == 400 and "context" in resp.text.lower()):
            raise ContextOverflowError(f"backend {self.spec.backend_id!r}: prompt exceeds context window")
        if not 200 <= resp.status_code < 300:
            raise BackendRefusalError(f"backend {self.spec.backend_id!r}: HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendRefusalError(f"backend {self.spec.backend_id!r}: malformed response body") from exc


def build_backends(
    specs: list[BackendSpec],
    replay_fixture: str | Path | None = None,
    mock_responses: dict[str, dict[str, str]] | None = None,
) -> list[Backend]:
    """Instantiate one backend per spec, validating as it goes."""
    seen: set[str] = set()
    backends: list[Backend] = []
    for spec in specs:
        spec.validate()
        if spec.backend_id in seen:
            raise ConfigError(f"duplicate backend_id {spec.backend_id!r}")
        seen.add(spec.backend_id)
        if spec.kind == "mock":
            backends.append(MockBackend(spec, (mock_responses or {}).get(spec.backend_id)))
        elif spec.kind == "replay":
            if replay_fixture is None:
                raise ConfigError(f"backend {spec.backend_id!r} is replay but no fixture path was given")
            backends.append(ReplayBackend(spec, replay_fixture))
        else:
            backends.append(HttpChatBackend(spec))
    return backends


def complete(
    backend: Backend,
    prompt: RenderedPrompt,
    params: GenerationParams,
    cache: CompletionCache | None = None,
) -> Completion:
    """Run one completion, serving from and feeding the cache when present."""
    params.validate()
    key = prompt_hash(backend.spec, prompt.text, params)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    start = time.perf_counter()
    raw_text = backend.generate(prompt, params)
    latency_ms = int((time.perf_counter() - start) * 1000)
    completion = Completion(
        backend_id=backend.spec.backend_id,
        contract_id=prompt.contract_id,
        prompt_hash=key,
        raw_text=raw_text,
        latency_ms=latency_ms,
        from_cache=False,
    )
    if cache is not None:
        cache.put(completion)
    return completion


def fanout(
    backends: list[Backend],
    prompts: list[RenderedPrompt],
    params: GenerationParams,
    parallelism: int = 4,
    cache: CompletionCache | None = None,
) -> list[Completion]:
    """Run every (backend, prompt) pair; failures become failed entries.

    The returned list is sorted by (backend_id, contract_id) regardless of
    completion timing, and one entry exists per pair.
    """
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    params.validate()

    def one(backend: Backend, prompt: RenderedPrompt) -> Completion:
        try:
            return complete(backend, prompt, params, cache)
        except ScauditError as exc:
            return Completion(
                backend_id=backend.spec.backend_id,
                contract_id=prompt.contract_id,
                prompt_hash=prompt_hash(backend.spec, prompt.text, params),
                raw_text="",
                error=f"{type(exc).__name__}: {exc}",
            )
        except Exception as exc:  # defensive: a bad backend must not sink the batch
            return Completion(
                backend_id=backend.spec.backend_id,
                contract_id=prompt.contract_id,
                prompt_hash=prompt_hash(backend.spec, prompt.text, params),
                raw_text="",
                error=f"{type(exc).__name__}: {exc}",
            )

    tasks = [(b, p) for b in backends for p in prompts]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        results = list(pool.map(lambda bp: one(*bp), tasks))
    return sorted(results, key=lambda c: (c.backend_id, c.contract_id))
