"""Sentence embeddings, cosine similarity and similarity-based merge."""

from __future__ import annotations

import hashlib
import os
import re
import unicodedata
from dataclasses import dataclass
from typing import Callable, Sequence

import httpx
import numpy as np

from .errors import EmptyInputError, TransportError
from .rule_extract import RawInterpretation

Embedder = Callable[[str], np.ndarray]

DEFAULT_DIM = 256
DEFAULT_TAU = 0.85

_TOKEN_RE = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    text = unicodedata.normalize("NFKC", text).lower()
    tokens = _TOKEN_RE.findall(text)
    if not tokens:
        # punctuation-only input still needs a non-zero vector
        tokens = [ch for ch in text if not ch.isspace()]
    return tokens


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("cannot normalize a zero or non-finite vector")
    return vec / norm


@dataclass(frozen=True)
class HashingEmbedder:
    """Deterministic hashed bag-of-tokens embedding (no model download)."""

    dim: int = DEFAULT_DIM

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("embedding dimension must be positive")

    def __call__(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyInputError("cannot embed empty text")
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokenize(text):
            vec[_bucket(token, self.dim)] += 1.0
        return _unit(vec)


@dataclass
class ExternalEmbedder:
    """Embedding service speaking the common ``/embeddings`` JSON shape.

    The request body is ``{"model": ..., "input": text}``; the response may be
    ``{"data": [{"embedding": [...]}]}`` or ``{"embedding": [...]}``.
    """

    endpoint: str
    model_id: str
    auth_env: str | None = None
    timeout: float = 30.0
    client: httpx.Client | None = None

    def __call__(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyInputError("cannot embed empty text")
        headers = {}
        if self.auth_env and os.environ.get(self.auth_env):
            headers["Authorization"] = f"Bearer {os.environ[self.auth_env]}"
        client = self.client or httpx.Client(timeout=self.timeout)
        try:
            resp = client.post(self.endpoint, json={"model": self.model_id, "input": text}, headers=headers)
            resp.raise_for_status()
            body = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise TransportError(f"embedding request to {self.endpoint} failed: {exc}", attempts=1, last_error=exc) from exc
        finally:
            if self.client is None:
                client.close()
        if isinstance(body, dict) and "data" in body:
            values = body["data"][0]["embedding"]
        else:
            values = body["embedding"]
        vec = np.asarray(values, dtype=np.float64)
        if vec.ndim != 1 or not np.all(np.isfinite(vec)):
            raise TransportError("embedding provider returned a malformed vector", attempts=1)
        return _unit(vec)


_FALLBACK = HashingEmbedder()


def embed(text: str, provider: str | Embedder = "fallback") -> np.ndarray:
    if provider == "fallback":
        return _FALLBACK(text)
    if callable(provider):
        return provider(text)
    raise ValueError(f"unknown embedding provider {provider!r}")


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class MergePolicy:
    tau: float = DEFAULT_TAU
    # Also drop second-list items that duplicate an earlier surviving item of
    # the same list. Off reproduces the plain one-sided filter.
    dedup_within: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie strictly between 0 and 1, got {self.tau!r}")


def merge(
    rule_list: Sequence[RawInterpretation],
    llm_list: Sequence[RawInterpretation],
    policy: MergePolicy | None = None,
    embedder: Embedder | None = None,
) -> list[RawInterpretation]:
    """Keep every rule item; keep an LLM item only if it is dissimilar to all of them.

    Similarity is cosine over embeddings of the meaning strings; an item at
    ``sim >= tau`` to any kept rule item is dropped.
    """
    policy = policy or MergePolicy()
    embedder = embedder or _FALLBACK
    kept = list(rule_list)
    if not llm_list:
        return kept

    cache: dict[str, np.ndarray] = {}

    def vec(item: RawInterpretation) -> np.ndarray:
        if item.meaning not in cache:
            cache[item.meaning] = embedder(item.meaning)
        return cache[item.meaning]

    anchors = [vec(r) for r in rule_list]
    for item in llm_list:
        v = vec(item)
        if any(cosine_sim(v, a) >= policy.tau for a in anchors):
            continue
        kept.append(item)
        if policy.dedup_within:
            anchors.append(v)
    return kept
