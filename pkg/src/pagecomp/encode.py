"""Page and query encoding.

Token embeddings come from a pluggable provider (a seeded feature-hash
provider for fully reproducible runs, or a float32 table exported from a real
model). Each token gets an inverse-term-frequency weight in [0, 1] computed
from in-context counts; page vectors fuse an ITF-weighted mean pool with a
masked coordinate-wise max pool. Queries are encoded either as one weighted
mean vector (short queries) or as per-token vectors with their ITF weights
(late interaction for longer queries).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, OutOfVocabularyError, TableFormatError
from .paging import PageTable
from .text import TokenStream

TABLE_MAGIC = b"PGEMB1\x00\x00"

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SEED_SALT = np.uint64(0xD1B54A32D192ED03)


# ---------------------------------------------------------------------------
# ITF weighting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ItfTable:
    """Per-token-id rarity weights, min-max normalized to [0, 1].

    token_ids is sorted and covers every id occurring in the context or the
    query; weights are non-increasing in term frequency. When all distinct
    raw values coincide the weights degenerate to 1.0 so the weighted-mean
    path is never zeroed out.
    """

    token_ids: np.ndarray  # sorted distinct ids
    weights: np.ndarray    # aligned with token_ids, in [0, 1]
    counts: np.ndarray     # term frequencies aligned with token_ids
    totals: tuple[int, int]  # (context length, query length)

    def weight_of(self, token_id: int) -> float:
        i = int(np.searchsorted(self.token_ids, token_id))
        if i >= self.token_ids.size or self.token_ids[i] != token_id:
            raise KeyError(token_id)
        return float(self.weights[i])

    def tf_of(self, token_id: int) -> int:
        i = int(np.searchsorted(self.token_ids, token_id))
        if i >= self.token_ids.size or self.token_ids[i] != token_id:
            raise KeyError(token_id)
        return int(self.counts[i])

    def weights_for(self, ids: np.ndarray) -> np.ndarray:
        """Vectorized weight lookup for an array of known token ids."""
        pos = np.searchsorted(self.token_ids, ids)
        return self.weights[pos]


def _build_itf(ids: np.ndarray, totals: tuple[int, int], uniform: bool) -> ItfTable:
    total = totals[0] + totals[1]
    if total < 1:
        raise ConfigurationError("cannot compute ITF weights over empty streams")
    uniq, counts = np.unique(ids, return_counts=True)
    if uniform:
        weights = np.ones(uniq.shape[0], dtype=np.float64)
    else:
        raw = np.log1p(total / (1.0 + counts.astype(np.float64)))
        lo, hi = float(raw.min()), float(raw.max())
        if hi - lo <= 0.0:
            weights = np.ones_like(raw)
        else:
            weights = (raw - lo) / (hi - lo)
    return ItfTable(token_ids=uniq, weights=weights, counts=counts, totals=totals)


def compute_itf(context: TokenStream, query: TokenStream) -> ItfTable:
    """Rarity weights from counts over the concatenated context and query."""
    ids = np.concatenate([context.ids, query.ids])
    return _build_itf(ids, (len(context), len(query)), uniform=False)


def uniform_itf(context: TokenStream, query: TokenStream) -> ItfTable:
    """All-ones weights over the same token set (ITF ablation switch)."""
    ids = np.concatenate([context.ids, query.ids])
    return _build_itf(ids, (len(context), len(query)), uniform=True)


# ---------------------------------------------------------------------------
# Embedding providers
# ---------------------------------------------------------------------------

def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class HashEmbeddingProvider:
    """Deterministic pseudo-embeddings from an integer hash.

    Coordinate j of token t is derived by the splitmix64 finalizer applied to
    base(t) + (j+1)*GOLDEN, where base(t) = mix64((t+1)*GOLDEN + mix64(seed ^
    SALT)), mapped onto [-1, 1) from the top 53 bits. Same (dim, seed) always
    yields the same vectors; any non-negative id is accepted.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise ConfigurationError(f"embedding dim must be >= 1, got {dim}")
        self.dim = dim
        self.seed = seed
        with np.errstate(over="ignore"):
            self._seed_mix = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _SEED_SALT)
        self._steps = (np.arange(1, dim + 1, dtype=np.uint64) * _GOLDEN).reshape(1, -1)

    def lookup(self, token_id: int) -> np.ndarray:
        return self.lookup_many(np.asarray([token_id], dtype=np.int64))[0]

    def lookup_many(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        uniq, inverse = np.unique(ids, return_inverse=True)
        with np.errstate(over="ignore"):
            base = _mix64((uniq.astype(np.uint64) + np.uint64(1)) * _GOLDEN + self._seed_mix)
            states = _mix64(base.reshape(-1, 1) + self._steps)
        unit = (states >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        return (2.0 * unit - 1.0)[inverse]


class TableEmbeddingProvider:
    """Embeddings from a memory-resident float32 matrix."""

    def __init__(self, matrix: np.ndarray):
        if matrix.ndim != 2:
            raise ConfigurationError("embedding table must be a 2-D matrix")
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        self.vocab_size = int(matrix.shape[0])
        self.dim = int(matrix.shape[1])

    @classmethod
    def load(cls, path: str | Path) -> "TableEmbeddingProvider":
        return cls(load_embedding_matrix(path))

    def lookup(self, token_id: int) -> np.ndarray:
        return self.lookup_many(np.asarray([token_id], dtype=np.int64))[0]

    def lookup_many(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            bad = ids[(ids < 0) | (ids >= self.vocab_size)][0]
            raise OutOfVocabularyError(
                f"token id {int(bad)} outside vocabulary of size {self.vocab_size}"
            )
        return self.matrix[ids].astype(np.float64)


def load_embedding_matrix(path: str | Path) -> np.ndarray:
    """Read a binary table: magic, u32 vocab, u32 dim, float32 rows (LE)."""
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:8] != TABLE_MAGIC:
        raise TableFormatError(f"{path}: bad magic at byte 0 (expected {TABLE_MAGIC!r})")
    if len(data) < 16:
        raise TableFormatError(f"{path}: truncated header at byte {len(data)} (need 16)")
    vocab_size, dim = struct.unpack_from("<II", data, 8)
    expected = 16 + vocab_size * dim * 4
    if len(data) < expected:
        raise TableFormatError(
            f"{path}: truncated payload at byte {len(data)} (need {expected})"
        )
    matrix = np.frombuffer(data, dtype="<f4", count=vocab_size * dim, offset=16)
    return matrix.reshape(vocab_size, dim).copy()


def write_embedding_table(path: str | Path, matrix: np.ndarray) -> None:
    """Write a float32 matrix in the binary table format read by load()."""
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2:
        raise ConfigurationError("embedding table must be a 2-D matrix")
    with open(path, "wb") as fh:
        fh.write(TABLE_MAGIC)
        fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def provider_from_spec(spec: str):
    """Build a provider from 'hash[:dim[:seed]]' or 'table:<path>'."""
    parts = spec.split(":")
    if parts[0] == "hash":
        dim = int(parts[1]) if len(parts) > 1 and parts[1] else 64
        seed = int(parts[2]) if len(parts) > 2 and parts[2] else 0
        return HashEmbeddingProvider(dim=dim, seed=seed)
    if parts[0] == "table":
        if len(parts) < 2 or not parts[1]:
            raise ConfigurationError("embedding spec 'table:' requires a path")
        return TableEmbeddingProvider.load(":".join(parts[1:]))
    raise ConfigurationError(f"unknown embedding spec {spec!r} (use hash:<dim>:<seed> or table:<path>)")


def embed(provider, stream: TokenStream) -> np.ndarray:
    """Token feature matrix: row l is the embedding of token l."""
    if len(stream) == 0:
        return np.zeros((0, provider.dim), dtype=np.float64)
    return provider.lookup_many(stream.ids)


# ---------------------------------------------------------------------------
# Dual-path page pooling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PageMatrix:
    """Fused page vectors plus the two pooled components for diagnostics."""

    rows: np.ndarray       # (N, d)
    mean_pool: np.ndarray  # (N, d)
    max_pool: np.ndarray   # (N, d)

    @property
    def n_pages(self) -> int:
        return int(self.rows.shape[0])


def encode_pages(
    features: np.ndarray,
    table: PageTable,
    token_weights: np.ndarray,
    gamma: float,
    eps: float = 1e-8,
    beta: float = -1e9,
) -> PageMatrix:
    """Pool token features into one vector per page.

    token_weights is position-aligned with the context (weight of token l).
    Pad slots contribute zero to the weighted mean and a floor of beta to the
    max pool; the fused row is gamma * mean + (1 - gamma) * max.
    """
    n_tokens = features.shape[0]
    if token_weights.shape[0] != n_tokens:
        raise ValueError(
            f"token_weights length {token_weights.shape[0]} != feature rows {n_tokens}"
        )
    if table.n_pages and int(table.page_last_token[-1]) >= n_tokens:
        raise ValueError("page table references tokens beyond the feature matrix")
    idx = table.index
    valid = idx >= 0
    safe = np.where(valid, idx, 0)
    x = features[safe] * valid[:, :, None]                      # (N, M, d)
    w = token_weights[safe] * valid                             # (N, M)
    mean_pool = (w[:, :, None] * x).sum(axis=1) / (w.sum(axis=1)[:, None] + eps)
    masked = np.where(valid[:, :, None], x, beta)
    max_pool = masked.max(axis=1)
    rows = gamma * mean_pool + (1.0 - gamma) * max_pool
    return PageMatrix(rows=rows, mean_pool=mean_pool, max_pool=max_pool)


# ---------------------------------------------------------------------------
# Query encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QueryRepr:
    """Dense (single weighted-mean vector) or multi (per-token late
    interaction) query representation."""

    mode: str               # "dense" | "multi"
    vectors: np.ndarray     # (K, d)
    weights: np.ndarray     # (K,)
    token_set: frozenset[int]


def encode_query(
    provider,
    query: TokenStream,
    itf: ItfTable,
    dense_threshold: int = 4,
    eps: float = 1e-8,
) -> QueryRepr:
    """Encode the query; short queries collapse to one weighted-mean vector."""
    n = len(query)
    if n == 0:
        raise ValueError("cannot encode an empty query")
    vectors = provider.lookup_many(query.ids)
    weights = itf.weights_for(query.ids)
    token_set = frozenset(int(t) for t in np.unique(query.ids))
    if n < dense_threshold:
        pooled = (weights[:, None] * vectors).sum(axis=0) / (weights.sum() + eps)
        return QueryRepr(
            mode="dense",
            vectors=pooled.reshape(1, -1),
            weights=np.ones(1, dtype=np.float64),
            token_set=token_set,
        )
    return QueryRepr(mode="multi", vectors=vectors, weights=weights, token_set=token_set)
