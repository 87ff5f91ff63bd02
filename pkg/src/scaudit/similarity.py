"""Text similarity scorers for soft-matching finding descriptions.

The default scorer is a deterministic tf-idf cosine fitted over the texts of
one evaluation run (ground-truth descriptions plus predictions). An optional
HTTP embedding-service scorer is provided for callers who want model-based
similarity; it is excluded from any frozen expectations because its vectors
are service-dependent.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Iterable, Protocol

import httpx

from .errors import EmbeddingServiceError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs; duplicates preserved."""
    return _TOKEN_RE.findall(text.lower())


class SimilarityScorer(Protocol):
    def score(self, a: str, b: str) -> float: ...


class TfidfCosineScorer:
    """Cosine similarity over tf-idf weighted token vectors.

    Fit over a document corpus (each text is one document); idf uses the
    smoothed form log((1 + N) / (1 + df)) + 1 so unseen tokens stay defined.
    With ``use_idf=False`` this degrades to plain term-frequency cosine.
    Scores are clamped to [0, 1]; an empty-token operand scores 0.
    """

    def __init__(self, documents: Iterable[str] = (), use_idf: bool = True):
        self.use_idf = use_idf
        self._df: Counter[str] = Counter()
        self._n_docs = 0
        for doc in documents:
            self._df.update(set(tokenize(doc)))
            self._n_docs += 1

    def _idf(self, token: str) -> float:
        if not self.use_idf:
            return 1.0
        return math.log((1 + self._n_docs) / (1 + self._df.get(token, 0))) + 1.0

    def _vector(self, text: str) -> dict[str, float]:
        tf = Counter(tokenize(text))
        return {tok: count * self._idf(tok) for tok, count in tf.items()}

    def score(self, a: str, b: str) -> float:
        va, vb = self._vector(a), self._vector(b)
        na = math.sqrt(sum(w * w for w in va.values()))
        nb = math.sqrt(sum(w * w for w in vb.values()))
        if na == 0.0 or nb == 0.0:
            return 0.0
        dot = sum(w * vb.get(tok, 0.0) for tok, w in va.items())
        return min(1.0, max(0.0, dot / (na * nb)))


class EmbeddingServiceScorer:
    """Cosine over unit-norm vectors fetched from an embedding endpoint.

    Posts ``{"texts": [a, b]}`` and expects ``{"vectors": [[...], [...]]}``.
    Negative cosines clamp to 0 so scores stay in [0, 1].
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=timeout)

    def _embed(self, texts: list[str]) -> list[list[float]]:
        try:
            resp = self._client.post(self.endpoint, json={"texts": texts})
        except httpx.HTTPError as exc:
            raise EmbeddingServiceError(f"embedding request failed: {exc}") from exc
        if resp.status_code != 200:
            raise EmbeddingServiceError(f"embedding service returned HTTP {resp.status_code}")
        try:
            vectors = resp.json()["vectors"]
        except (ValueError, KeyError) as exc:
            raise EmbeddingServiceError("malformed embedding response") from exc
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise EmbeddingServiceError("embedding response cardinality mismatch")
        return vectors

    def score(self, a: str, b: str) -> float:
        va, vb = self._embed([a, b])
        if len(va) != len(vb):
            raise EmbeddingServiceError("embedding dimensions disagree")
        dot = sum(x * y for x, y in zip(va, vb))
        return min(1.0, max(0.0, dot))


def cosine(a: str, b: str, scorer: SimilarityScorer) -> float:
    """Score two texts with the given scorer (symmetric, range [0, 1])."""
    return scorer.score(a, b)
