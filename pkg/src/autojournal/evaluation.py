"""Score a generated journal against ground truth by bidirectional max-matching.

Event texts from both journals are embedded as sentences; cosine similarity
fills an n-by-m matrix with ground-truth events as rows and predicted events
as columns. The truth-side event score averages the row maxima and the
prediction-side score averages the column maxima, so the two sides play the
roles recall and precision play in an F-score. Feeling scores reuse the
event argmax pairing: each entry's feelings text is compared against the
feelings of its best-matching event on the other side. Overall scores are
the harmonic mean of the two sides, computed separately for events and
feelings.

Similarities live in [-1, 1]. The harmonic mean is unstable once a side is
non-positive, so overall_score returns 0.0 and emits NonPositiveScoreWarning
in that case rather than producing a negative or unbounded value.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
import warnings
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import (
    AssignmentMismatch,
    DimensionMismatch,
    EmptyJournal,
    ProviderError,
)
from .journal import Journal

DEFAULT_STUB_DIM = 256

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class NonPositiveScoreWarning(UserWarning):
    """Harmonic mean guarded: one side of the score was <= 0."""


class EmbeddingProvider(Protocol):
    name: str

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return one row per text, in order; rows need not be normalized."""
        ...


class HashedEmbeddingProvider:
    """Deterministic hashed bag-of-words sentence vectors.

    Lowercases, splits on non-alphanumerics, hashes each token into one of
    ``dim`` buckets (stable across processes via sha1), and counts. Texts
    with no tokens at all fall back to the empty-string bucket so the vector
    is never zero.
    """

    def __init__(self, dim: int = DEFAULT_STUB_DIM):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.name = f"hashed-bow-{dim}"

    @staticmethod
    def _bucket(token: str, dim: int) -> int:
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % dim

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = _TOKEN_RE.findall(text.lower()) or [""]
            for token in tokens:
                out[row, self._bucket(token, self.dim)] += 1.0
        return out


class HttpEmbeddingProvider:
    """Client for the embedding service protocol: POST /embed with a text batch."""

    def __init__(self, endpoint: str | None = None, timeout_s: float = 60.0):
        endpoint = endpoint or os.environ.get("EMBED_ENDPOINT")
        if not endpoint:
            raise ValueError("no embedding endpoint configured (set EMBED_ENDPOINT)")
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_s
        self.name = f"http:{self.endpoint}"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        import requests

        try:
            resp = requests.post(
                f"{self.endpoint}/embed", json={"texts": list(texts)}, timeout=self.timeout_s
            )
        except requests.RequestException as exc:
            raise ProviderError(0, f"embedding request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(resp.status_code, resp.text[:500])
        vectors = resp.json().get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError(0, "embedding response does not match request batch")
        return np.asarray(vectors, dtype=np.float64)


def embed(texts: Sequence[str], provider: EmbeddingProvider) -> np.ndarray:
    """Embed texts and unit-normalize every row, whatever the provider returned."""
    if len(texts) == 0:
        raise ValueError("texts must be non-empty")
    raw = np.asarray(provider.embed(texts), dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] != len(texts):
        raise DimensionMismatch(
            f"provider returned shape {raw.shape} for a batch of {len(texts)}"
        )
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("provider returned a zero vector; cannot normalize")
    return raw / norms[:, None]


class EmbeddingClient:
    """Caches embeddings by exact text so repeated events embed once.

    Safe under concurrent use; the cache never returns a vector for any key
    other than the one requested, and caching cannot change results because
    providers are deterministic per text.
    """

    def __init__(self, provider: EmbeddingProvider):
        self.provider = provider
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self._dim: int | None = None

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        with self._lock:
            missing = [t for t in dict.fromkeys(texts) if t not in self._cache]
        if missing:
            fresh = embed(missing, self.provider)
            with self._lock:
                if self._dim is None:
                    self._dim = fresh.shape[1]
                elif fresh.shape[1] != self._dim:
                    raise DimensionMismatch(
                        f"provider dimension changed from {self._dim} to {fresh.shape[1]}"
                    )
                for text, vector in zip(missing, fresh):
                    self._cache[text] = vector
        with self._lock:
            return np.stack([self._cache[t] for t in texts])


@dataclass(frozen=True)
class MatchAssignment:
    """Argmax partners from the similarity matrix, 0-based, lowest-index ties.

    j_star[i] is the predicted-event column best matching ground-truth row i;
    i_star[j] is the ground-truth row best matching predicted column j.
    """

    j_star: tuple[int, ...]
    i_star: tuple[int, ...]


@dataclass(frozen=True)
class EvalScores:
    event_t: float
    event_p: float
    feeling_t: float
    feeling_p: float
    event_overall: float
    feeling_overall: float


def _as_client(provider: EmbeddingProvider | EmbeddingClient) -> EmbeddingClient:
    return provider if isinstance(provider, EmbeddingClient) else EmbeddingClient(provider)


def similarity_matrix(
    truth: Journal, pred: Journal, provider: EmbeddingProvider | EmbeddingClient
) -> np.ndarray:
    """Cosine similarities of event texts: rows are truth entries, columns predicted."""
    if not truth.entries:
        raise EmptyJournal("truth")
    if not pred.entries:
        raise EmptyJournal("pred")
    client = _as_client(provider)
    t_vecs = client.embed(truth.events())
    p_vecs = client.embed(pred.events())
    return np.clip(t_vecs @ p_vecs.T, -1.0, 1.0)


def event_scores(matrix: np.ndarray) -> tuple[float, float, MatchAssignment]:
    """Average row maxima (truth side) and column maxima (prediction side)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.size == 0:
        raise ValueError(f"similarity matrix must be 2-D and non-empty, got {matrix.shape}")
    j_star = tuple(int(j) for j in matrix.argmax(axis=1))  # argmax takes lowest index on ties
    i_star = tuple(int(i) for i in matrix.argmax(axis=0))
    score_t = float(matrix.max(axis=1).mean())
    score_p = float(matrix.max(axis=0).mean())
    return score_t, score_p, MatchAssignment(j_star=j_star, i_star=i_star)


def feeling_scores(
    truth: Journal,
    pred: Journal,
    assignment: MatchAssignment,
    provider: EmbeddingProvider | EmbeddingClient,
) -> tuple[float, float]:
    """Compare feelings texts across the event-matched pairs and average each side."""
    n, m = len(truth.entries), len(pred.entries)
    if len(assignment.j_star) != n or len(assignment.i_star) != m:
        raise AssignmentMismatch(
            f"assignment is {len(assignment.j_star)}x{len(assignment.i_star)}, "
            f"journals are {n}x{m}"
        )
    client = _as_client(provider)
    t_vecs = client.embed(truth.feelings())
    p_vecs = client.embed(pred.feelings())
    sims = np.clip(t_vecs @ p_vecs.T, -1.0, 1.0)
    score_t = float(np.mean([sims[i, assignment.j_star[i]] for i in range(n)]))
    score_p = float(np.mean([sims[assignment.i_star[j], j] for j in range(m)]))
    return score_t, score_p


def overall_score(score_t: float, score_p: float) -> float:
    """Harmonic mean of the two sides; 0.0 with a warning when either is <= 0."""
    if score_t <= 0.0 or score_p <= 0.0:
        warnings.warn(
            f"harmonic mean undefined for non-positive scores "
            f"({score_t:.6f}, {score_p:.6f}); reporting 0.0",
            NonPositiveScoreWarning,
            stacklevel=2,
        )
        return 0.0
    return 2.0 * score_t * score_p / (score_t + score_p)


def evaluate_pair(
    truth: Journal, pred: Journal, provider: EmbeddingProvider | EmbeddingClient
) -> EvalScores:
    """Full comparison of one generated journal against its ground truth."""
    if (truth.participant, truth.date) != (pred.participant, pred.date):
        raise ValueError(
            f"journal mismatch: truth is {truth.participant}/{truth.date}, "
            f"prediction is {pred.participant}/{pred.date}"
        )
    client = _as_client(provider)
    matrix = similarity_matrix(truth, pred, client)
    event_t, event_p, assignment = event_scores(matrix)
    feeling_t, feeling_p = feeling_scores(truth, pred, assignment, client)
    return EvalScores(
        event_t=event_t,
        event_p=event_p,
        feeling_t=feeling_t,
        feeling_p=feeling_p,
        event_overall=overall_score(event_t, event_p),
        feeling_overall=overall_score(feeling_t, feeling_p),
    )
