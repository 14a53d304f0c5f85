"""Text-to-vector embedding behind a pluggable backend contract.

The native backend hashes word n-grams into a fixed-dimension signed count
vector and L2-normalizes. It is deliberately boring: same text, same spec,
same bits on every platform, which is what makes the whole pipeline
replayable. An external sentence-embedding service can be swapped in through
the JSON wire contract (POST <endpoint>/embed).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import httpx
import numpy as np


class EmbedderKind(str, Enum):
    HASHED_NGRAM = "hashed_ngram"
    EXTERNAL = "external"


class NormKind(str, Enum):
    UNIT = "unit"
    RAW = "raw"


class EmbedderUnavailable(RuntimeError):
    """External embedding endpoint failed; never silently fall back."""

    def __init__(self, message: str, failing_index: int | None = None):
        super().__init__(message)
        self.failing_index = failing_index


@dataclass(frozen=True)
class EmbedderSpec:
    kind: EmbedderKind = EmbedderKind.HASHED_NGRAM
    dim: int = 512
    ngram_range: tuple[int, int] = (1, 2)
    seed: int = 0
    endpoint: str | None = None

    def __post_init__(self) -> None:
        lo, hi = self.ngram_range
        if not (1 <= lo <= hi <= 3):
            raise ValueError(f"ngram_range must satisfy 1 <= lo <= hi <= 3, got {self.ngram_range}")
        if self.dim < 16:
            raise ValueError("dim must be >= 16")
        if self.kind is EmbedderKind.EXTERNAL and not self.endpoint:
            raise ValueError("external embedder requires an endpoint")

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "dim": self.dim,
            "ngram_range": list(self.ngram_range),
            "seed": self.seed,
            "endpoint": self.endpoint,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EmbedderSpec":
        return cls(
            kind=EmbedderKind(obj.get("kind", "hashed_ngram")),
            dim=int(obj.get("dim", 512)),
            ngram_range=tuple(obj.get("ngram_range", (1, 2))),
            seed=int(obj.get("seed", 0)),
            endpoint=obj.get("endpoint"),
        )


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    dim: int
    norm: NormKind

    def __post_init__(self) -> None:
        if len(self.values) != self.dim:
            raise ValueError(f"length {len(self.values)} != dim {self.dim}")
        if self.norm is NormKind.UNIT:
            n = float(np.linalg.norm(self.values))
            if abs(n - 1.0) >= 1e-6 and n != 0.0:
                raise ValueError(f"unit-flagged vector has norm {n}")


def ngrams(text: str, ngram_range: tuple[int, int]) -> list[str]:
    """Word n-grams over whitespace tokens, joined with single spaces."""
    tokens = text.split()
    lo, hi = ngram_range
    out: list[str] = []
    for n in range(lo, hi + 1):
        out.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return out


def _bucket_and_sign(gram: str, seed: int, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(
        gram.encode("utf-8"), digest_size=16, key=seed.to_bytes(8, "little", signed=True)
    ).digest()
    index = int.from_bytes(digest[:8], "little") % dim
    sign = 1.0 if digest[8] & 1 else -1.0
    return index, sign


def embed_text(text: str, spec: EmbedderSpec) -> EmbeddingVector:
    if spec.kind is EmbedderKind.EXTERNAL:
        return embed_batch([text], spec)[0]
    values = np.zeros(spec.dim, dtype=np.float64)
    for gram in ngrams(text, spec.ngram_range):
        index, sign = _bucket_and_sign(gram, spec.seed, spec.dim)
        values[index] += sign
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        return EmbeddingVector(values=values, dim=spec.dim, norm=NormKind.RAW)
    return EmbeddingVector(values=values / norm, dim=spec.dim, norm=NormKind.UNIT)


def embed_batch(texts: Sequence[str], spec: EmbedderSpec) -> list[EmbeddingVector]:
    if spec.kind is EmbedderKind.HASHED_NGRAM:
        return [embed_text(t, spec) for t in texts]
    return _embed_external(texts, spec)


def _embed_external(texts: Sequence[str], spec: EmbedderSpec) -> list[EmbeddingVector]:
    url = spec.endpoint.rstrip("/") + "/embed"
    try:
        response = httpx.post(url, json=list(texts), timeout=60.0)
    except httpx.HTTPError as exc:
        raise EmbedderUnavailable(f"embed endpoint {url} unreachable: {exc}") from exc
    if response.status_code != 200:
        raise EmbedderUnavailable(f"embed endpoint {url} returned {response.status_code}")
    payload = response.json()
    if not isinstance(payload, list) or len(payload) != len(texts):
        raise EmbedderUnavailable(
            f"embed endpoint returned {len(payload) if isinstance(payload, list) else 'non-list'} "
            f"rows for {len(texts)} texts"
        )
    vectors: list[EmbeddingVector] = []
    for i, row in enumerate(payload):
        if not isinstance(row, list) or len(row) != spec.dim:
            raise EmbedderUnavailable(f"row {i} is not a {spec.dim}-vector", failing_index=i)
        values = np.asarray(row, dtype=np.float64)
        norm = float(np.linalg.norm(values))
        if norm == 0.0:
            vectors.append(EmbeddingVector(values=values, dim=spec.dim, norm=NormKind.RAW))
        else:
            vectors.append(EmbeddingVector(values=values / norm, dim=spec.dim, norm=NormKind.UNIT))
    return vectors


def embed_matrix(texts: Sequence[str], spec: EmbedderSpec) -> np.ndarray:
    """Stacked (n, dim) float64 matrix of embeddings, rows ordered as input."""
    if not texts:
        return np.zeros((0, spec.dim), dtype=np.float64)
    return np.stack([v.values for v in embed_batch(texts, spec)])
