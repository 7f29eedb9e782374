"""Embedding provider port with a deterministic offline default.

The retrieval components only need ``embed(texts) -> matrix``. The default
implementation hashes bag-of-words counts into a fixed number of buckets, so
it needs no model, no network, and gives identical vectors on every platform.
A thin HTTP client covers real embedding services.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import LlmFailure

__all__ = ["EmbeddingProvider", "HashingEmbedder", "HttpEmbeddingClient", "unit_vector"]


class EmbeddingProvider(Protocol):
    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return one vector per text, shape (len(texts), dim)."""
        ...


def unit_vector(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    return v / norm if norm > 0.0 else v


class HashingEmbedder:
    """Bag-of-words counts hashed into ``dim`` buckets, L2-normalized.

    Token buckets come from blake2b digests, not Python's salted hash(), so
    vectors are stable across processes and machines.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dim

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in text.casefold().split():
                out[row, self._bucket(token.strip(".,;:!?\"'()"))] += 1.0
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return out / norms


class HttpEmbeddingClient:
    """Client for a JSON embedding endpoint.

    Protocol: POST {"texts": [...]} and receive {"vectors": [[...], ...]}.
    """

    def __init__(self, url: str, timeout: float = 60.0, session: requests.Session | None = None):
        self.url = url
        self.timeout = timeout
        self._session = session or requests.Session()

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        try:
            response = self._session.post(self.url, json={"texts": list(texts)}, timeout=self.timeout)
        except requests.Timeout as exc:
            raise LlmFailure(f"embedding endpoint timed out: {exc}", kind="timeout") from exc
        except requests.RequestException as exc:
            raise LlmFailure(f"embedding endpoint unreachable: {exc}", kind="transport") from exc
        if response.status_code != 200:
            raise LlmFailure(
                f"embedding endpoint returned HTTP {response.status_code}", kind="transport"
            )
        try:
            vectors = response.json()["vectors"]
            matrix = np.asarray(vectors, dtype=np.float64)
            if matrix.ndim != 2 or matrix.shape[0] != len(texts):
                raise ValueError(f"expected {len(texts)} vectors, got shape {matrix.shape}")
        except (KeyError, TypeError, ValueError) as exc:
            raise LlmFailure(f"embedding endpoint payload malformed: {exc}", kind="malformed") from exc
        return matrix
