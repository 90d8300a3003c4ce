"""Sentence-retrieval evaluation over externally produced embeddings.

The encoder lives elsewhere: this module ingests per-token vectors from a
binary export (or an already-pooled dense matrix), mean-pools them while
skipping positions flagged as special tokens, and scores aligned pairs by
cosine nearest neighbor. Top-1 accuracy is the fraction of queries whose
nearest target row has the query's own index; ties go to the lowest index,
so a tie is a miss unless the lowest tied index is the aligned one.

Binary layouts (both little-endian; see docs/embedding-format.md):

``EMBTOK01`` token file: 8-byte magic, uint32 header (N, max_tokens, dim,
layer), then per sentence a uint32 token count T, T special-flag bytes,
and T*dim float32 values.

``EMBPOOL1`` pooled file: 8-byte magic, uint32 header (N, dim, layer),
then N*dim float32 values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TOKEN_MAGIC = b"EMBTOK01"
POOLED_MAGIC = b"EMBPOOL1"


class RetrievalError(ValueError):
    pass


@dataclass(frozen=True)
class SentenceTokens:
    """Token vectors for one sentence with a per-token special flag."""

    vectors: np.ndarray  # (tokens, dim) float32
    special: np.ndarray  # (tokens,) bool

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise RetrievalError(f"token vectors must be (tokens, dim), got {self.vectors.shape}")
        if self.special.shape != (self.vectors.shape[0],):
            raise RetrievalError(
                f"special flags shape {self.special.shape} does not match "
                f"{self.vectors.shape[0]} tokens"
            )


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A corpus of token-level sentence embeddings sharing one dimension."""

    sentences: tuple[SentenceTokens, ...]
    dim: int
    layer: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise RetrievalError(f"dimension must be positive, got {self.dim}")
        for i, sent in enumerate(self.sentences):
            if sent.vectors.shape[1] != self.dim:
                raise RetrievalError(
                    f"sentence {i} has dimension {sent.vectors.shape[1]}, expected {self.dim}"
                )

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class RetrievalResult:
    top1_accuracy: float
    per_query_nearest: tuple[int, ...]
    margin: float


def mean_pool(vectors: np.ndarray, special: Sequence[bool] | np.ndarray) -> np.ndarray:
    """Arithmetic mean of the non-special token vectors.

    Raises when every position is flagged special: there is nothing to
    pool, and silently returning zeros would poison cosine scoring later.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    keep = ~np.asarray(special, dtype=bool)
    if keep.shape != (vectors.shape[0],):
        raise RetrievalError(
            f"{len(keep)} special flags for {vectors.shape[0]} token vectors"
        )
    if not keep.any():
        raise RetrievalError("all tokens flagged special; nothing to pool")
    return vectors[keep].mean(axis=0)


def pool_matrix(embeddings: EmbeddingMatrix) -> np.ndarray:
    """Pool every sentence into one row; (N, dim) float64."""
    if not embeddings.sentences:
        return np.zeros((0, embeddings.dim))
    rows = []
    for i, sent in enumerate(embeddings.sentences):
        try:
            rows.append(mean_pool(sent.vectors, sent.special))
        except RetrievalError as exc:
            raise RetrievalError(f"sentence {i}: {exc}") from exc
    return np.stack(rows)


def _normalize_rows(matrix: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise RetrievalError(f"zero-norm vector at row {bad[0]} of {name}")
    return matrix / norms[:, None]


def top1_retrieval(source: np.ndarray, target: np.ndarray) -> RetrievalResult:
    """Cosine nearest-neighbor scoring of aligned source/target rows.

    Row i of ``source`` is aligned with row i of ``target``. The margin is
    the mean gap between the best and second-best cosine per query (0.0
    when there is only one target).
    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if source.ndim != 2 or target.ndim != 2:
        raise RetrievalError("pooled embeddings must be 2-D (sentences, dim)")
    if source.shape[0] == 0:
        raise RetrievalError("no sentences to retrieve")
    if source.shape != target.shape:
        raise RetrievalError(
            f"source shape {source.shape} does not match target shape {target.shape}"
        )
    sims = _normalize_rows(source, "source") @ _normalize_rows(target, "target").T
    nearest = sims.argmax(axis=1)  # argmax takes the lowest index on ties
    n = source.shape[0]
    accuracy = float(np.mean(nearest == np.arange(n)))
    if n < 2:
        margin = 0.0
    else:
        top2 = np.partition(sims, -2, axis=1)[:, -2:]
        margin = float(np.mean(top2[:, 1] - top2[:, 0]))
    return RetrievalResult(accuracy, tuple(int(i) for i in nearest), margin)


def write_token_embeddings(path: str, embeddings: EmbeddingMatrix) -> None:
    max_tokens = max((s.vectors.shape[0] for s in embeddings.sentences), default=0)
    with open(path, "wb") as fh:
        fh.write(TOKEN_MAGIC)
        fh.write(struct.pack("<4I", len(embeddings), max_tokens, embeddings.dim, embeddings.layer))
        for sent in embeddings.sentences:
            fh.write(struct.pack("<I", sent.vectors.shape[0]))
            fh.write(np.asarray(sent.special, dtype=np.uint8).tobytes())
            fh.write(np.asarray(sent.vectors, dtype="<f4").tobytes())


def read_token_embeddings(path: str) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != TOKEN_MAGIC:
        raise RetrievalError(f"{path}: not a token embedding file (bad magic {data[:8]!r})")
    n, max_tokens, dim, layer = struct.unpack_from("<4I", data, 8)
    pos = 8 + 16
    sentences = []
    for i in range(n):
        try:
            (count,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if count > max_tokens:
                raise RetrievalError(
                    f"{path}: sentence {i} has {count} tokens, header says max {max_tokens}"
                )
            special = np.frombuffer(data, dtype=np.uint8, count=count, offset=pos).astype(bool)
            pos += count
            vectors = (
                np.frombuffer(data, dtype="<f4", count=count * dim, offset=pos)
                .reshape(count, dim)
                .copy()
            )
            pos += 4 * count * dim
        except struct.error as exc:
            raise RetrievalError(f"{path}: truncated at sentence {i}") from exc
        except ValueError as exc:
            if isinstance(exc, RetrievalError):
                raise
            raise RetrievalError(f"{path}: truncated at sentence {i}") from exc
        sentences.append(SentenceTokens(vectors, special))
    return EmbeddingMatrix(tuple(sentences), dim, layer)


def write_pooled_embeddings(path: str, matrix: np.ndarray, layer: int = 0) -> None:
    matrix = np.asarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise RetrievalError("pooled matrix must be 2-D (sentences, dim)")
    with open(path, "wb") as fh:
        fh.write(POOLED_MAGIC)
        fh.write(struct.pack("<3I", matrix.shape[0], matrix.shape[1], layer))
        fh.write(matrix.tobytes())


def read_pooled_embeddings(path: str) -> tuple[np.ndarray, int]:
    """Returns ``(matrix, layer)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != POOLED_MAGIC:
        raise RetrievalError(f"{path}: not a pooled embedding file (bad magic {data[:8]!r})")
    n, dim, layer = struct.unpack_from("<3I", data, 8)
    expected = 8 + 12 + 4 * n * dim
    if len(data) < expected:
        raise RetrievalError(f"{path}: truncated ({len(data)} bytes, expected {expected})")
    matrix = np.frombuffer(data, dtype="<f4", count=n * dim, offset=20).reshape(n, dim).copy()
    return matrix.astype(np.float64), layer


def read_embeddings(path: str) -> tuple[np.ndarray, int]:
    """Accept either format and return a pooled ``(matrix, layer)``."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic == POOLED_MAGIC:
        return read_pooled_embeddings(path)
    if magic == TOKEN_MAGIC:
        emb = read_token_embeddings(path)
        return pool_matrix(emb), emb.layer
    raise RetrievalError(f"{path}: unrecognized embedding file (magic {magic!r})")
