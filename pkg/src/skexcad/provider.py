"""Pluggable structure and embedding providers.

The VLM that predicts discrete structure is an external service; everything
here is shaped so the full suite runs offline.  Fixture providers replay
stored responses, the HTTP provider caches responses on disk keyed by content
so ablation sweeps are reproducible, and the stub embedder is a deterministic
stand-in for a real text encoder.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import ConfigError, ProviderError, TransportError

TEMPLATE_IDS = ("base", "+reminder", "+context_example", "+cot")
_ASSET_DIR = Path(__file__).parent / "assets" / "prompts"

# which prompt sections each template id includes; ids nest cumulatively
_TEMPLATE_SECTIONS = {
    "base": ("base",),
    "+reminder": ("base", "reminder"),
    "+context_example": ("base", "context_example", "reminder"),
    "+cot": ("base", "context_example", "reminder", "cot"),
}
# assembly order within the prompt text (example before the reminders)
_SECTION_ORDER = ("base", "context_example", "reminder", "cot")


class StructureProvider(Protocol):
    def request(self, image_ref: str, template_id: str | None = None) -> str: ...


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    text: str


def prompt_section(name: str) -> str:
    path = _ASSET_DIR / f"{name}.txt"
    return path.read_text(encoding="utf-8").rstrip("\n")


def prompt_template(template_id: str) -> PromptTemplate:
    """Assemble a prompt variant from the shipped section assets."""
    if template_id not in _TEMPLATE_SECTIONS:
        raise ConfigError(f"unknown template id {template_id!r}; expected one of {TEMPLATE_IDS}")
    wanted = set(_TEMPLATE_SECTIONS[template_id])
    text = "\n\n".join(prompt_section(s) for s in _SECTION_ORDER if s in wanted)
    return PromptTemplate(id=template_id, text=text + "\n")


class FixtureProvider:
    """Replay stored responses from ``<dir>/<key>.txt``."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.calls = 0

    def request(self, image_ref: str, template_id: str | None = None) -> str:
        self.calls += 1
        path = self.directory / f"{image_ref}.txt"
        if not path.is_file():
            raise ProviderError(f"no fixture response for key {image_ref!r} in {self.directory}")
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ProviderError(f"fixture {path} unreadable: {exc}") from exc


def fixture_provider(directory) -> FixtureProvider:
    return FixtureProvider(directory)


def _default_transport(url, payload, headers, timeout):
    import requests

    resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    return resp.status_code, resp.text


class HttpVlmProvider:
    """POST image + prompt to an endpoint, with retries and a disk cache.

    Responses are cached by (image content hash, template id), so reruns are
    fully offline; ``network_calls`` counts actual transport invocations.
    In-flight requests are bounded to respect rate limits.
    """

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = "VLM_API_KEY",
        template_id: str = "+cot",
        cache_dir="cache",
        max_in_flight: int = 4,
        retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 60.0,
        temperature: float | None = None,
        transport=None,
    ):
        if api_key_env not in os.environ:
            raise ConfigError(f"API key environment variable {api_key_env!r} is not set")
        if template_id not in _TEMPLATE_SECTIONS:
            raise ConfigError(f"unknown template id {template_id!r}")
        self.endpoint = endpoint
        self.api_key = os.environ[api_key_env]
        self.default_template = template_id
        self.cache_dir = Path(cache_dir)
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.temperature = temperature
        self.transport = transport or _default_transport
        self.network_calls = 0
        self._gate = threading.Semaphore(max_in_flight)

    def _image_bytes(self, image_ref: str) -> bytes:
        path = Path(image_ref)
        if path.is_file():
            return path.read_bytes()
        return image_ref.encode("utf-8")

    def _cache_path(self, image_hash: str, template_id: str) -> Path:
        key = hashlib.sha256(f"{image_hash}:{template_id}".encode()).hexdigest()
        return self.cache_dir / f"{key}.txt"

    def request(self, image_ref: str, template_id: str | None = None) -> str:
        tid = template_id or self.default_template
        image = self._image_bytes(image_ref)
        image_hash = hashlib.sha256(image).hexdigest()
        cache_path = self._cache_path(image_hash, tid)
        if cache_path.is_file():
            return cache_path.read_text(encoding="utf-8")

        payload = {
            "image_ref": str(image_ref),
            "image_sha256": image_hash,
            "prompt": prompt_template(tid).text,
        }
        if self.temperature is not None:
            payload["temperature"] = self.temperature
        headers = {"Authorization": f"Bearer {self.api_key}"}

        attempts = []
        for attempt in range(self.retries):
            try:
                with self._gate:
                    self.network_calls += 1
                    status, text = self.transport(self.endpoint, payload, headers, self.timeout)
            except Exception as exc:  # transport exceptions count as attempts
                attempts.append(f"attempt {attempt + 1}: {exc}")
            else:
                if 200 <= status < 300:
                    body = self._extract_text(text)
                    self.cache_dir.mkdir(parents=True, exist_ok=True)
                    cache_path.write_text(body, encoding="utf-8")
                    return body
                attempts.append(f"attempt {attempt + 1}: HTTP {status}")
            if attempt + 1 < self.retries and self.backoff > 0:
                time.sleep(self.backoff * 2**attempt)
        raise TransportError(
            f"request for {image_ref!r} failed after {self.retries} attempts", attempts
        )

    @staticmethod
    def _extract_text(body: str) -> str:
        import json

        try:
            data = json.loads(body)
        except ValueError:
            return body
        if isinstance(data, dict) and isinstance(data.get("text"), str):
            return data["text"]
        return body


def http_vlm_provider(endpoint, api_key_env="VLM_API_KEY", template_id="+cot", **kwargs):
    return HttpVlmProvider(endpoint, api_key_env=api_key_env, template_id=template_id, **kwargs)


# --- embeddings ---------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class StubEmbedder:
    """Deterministic token-bag embedder for offline runs.

    Each token hashes to a fixed random unit-scale vector; a text embeds as
    the normalized sum, so token overlap raises cosine similarity.
    """

    def __init__(self, seed: int = 0, dim: int = 512):
        self.seed = seed
        self.dim = dim
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is not None:
            return cached
        digest = hashlib.sha256(f"{self.seed}:{token}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        vec = rng.standard_normal(self.dim)
        self._token_cache[token] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        tokens = _TOKEN_RE.findall(str(text).casefold()) or [""]
        total = np.zeros(self.dim)
        for token in tokens:
            total += self._token_vector(token)
        norm = float(np.linalg.norm(total))
        if norm == 0.0:  # vanishingly unlikely token-sum cancellation
            total = self._token_vector("")
            norm = float(np.linalg.norm(total))
        return total / norm


def stub_embedder(seed: int = 0, dim: int = 512) -> StubEmbedder:
    return StubEmbedder(seed=seed, dim=dim)


def retrieve_semantics(label: str, vocabulary, embedder: EmbeddingProvider) -> str:
    """Nearest vocabulary entry by embedding L2 distance; ties keep vocab order."""
    vocabulary = list(vocabulary)
    if not vocabulary:
        raise ProviderError("vocabulary is empty")
    if not str(label).strip():
        raise ProviderError("label is empty")
    target = embedder.embed(label)
    vecs = np.stack([embedder.embed(w) for w in vocabulary])
    dists = np.linalg.norm(vecs - target, axis=1)
    return vocabulary[int(np.argmin(dists))]
