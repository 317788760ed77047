"""Sentence encoders selectable by model id.

Transformer ids load through sentence-transformers. The built-in
``hashed-bow-<dim>`` ids need no model download and stay deterministic
across processes, which keeps the service testable offline; clients
normalize, so raw count vectors are fine on the wire.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np

DEFAULT_MODEL_ID = "sentence-transformers/all-MiniLM-L6-v2"

_HASHED_ID = re.compile(r"^hashed-bow-(\d+)$")
_TOKENS = re.compile(r"[a-z0-9]+")


class SentenceEncoder(Protocol):
    model_id: str
    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class HashedBagOfWordsEncoder:
    """Token-count vectors over sha1-hashed buckets; no weights to load."""

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.model_id = f"hashed-bow-{dim}"

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = _TOKENS.findall(text.lower()) or [""]
            for token in tokens:
                digest = hashlib.sha1(token.encode("utf-8")).digest()
                out[row, int.from_bytes(digest[:8], "big") % self.dim] += 1.0
        return out


class TransformerEncoder:
    """sentence-transformers checkpoint behind the same encode() surface."""

    def __init__(self, model_id: str):
        from sentence_transformers import SentenceTransformer

        self.model_id = model_id
        self._model = SentenceTransformer(model_id)
        probe = self._model.encode(["probe"], convert_to_numpy=True)
        self.dim = int(probe.shape[1])

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(list(texts), convert_to_numpy=True), dtype=np.float64
        )


def load_encoder(model_id: str) -> SentenceEncoder:
    match = _HASHED_ID.match(model_id)
    if match:
        return HashedBagOfWordsEncoder(int(match.group(1)))
    return TransformerEncoder(model_id)
