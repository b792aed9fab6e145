"""Tokenization with byte-offset bookkeeping, boundary detection, and
implicit-query extraction.

Two token sources are supported: a built-in unicode word/punctuation
tokenizer (runs of letters/digits are one token, every other non-space
character is its own token, whitespace is never tokenized) and a
pre-tokenized passthrough for externally produced vocabularies. In both
cases every token carries a (byte_start, byte_end) offset into the UTF-8
encoding of the source text; all downstream index arithmetic and the
final rendering rely on these offsets being exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputFormatError

# Letter/digit runs (underscore excluded), else one token per non-space char.
_TOKEN_RE = re.compile(r"[^\W_]+|[^\s\w]|_")

SENTENCE_TERMINATORS = (".", "!", "?", ";", "。", "！", "？")
_TERMINATOR_BYTES = tuple(t.encode("utf-8") for t in SENTENCE_TERMINATORS)
_NEWLINE = 0x0A


@dataclass(frozen=True)
class TokenStream:
    """Token ids plus byte offsets into the source text.

    ids and offsets have equal length L; offsets are 0-based, end-exclusive,
    non-overlapping, strictly increasing byte ranges.
    """

    ids: np.ndarray       # (L,) int64
    offsets: np.ndarray   # (L, 2) int64
    source_len: int       # byte length of the source text

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def slice(self, start: int, end: int) -> "TokenStream":
        """Sub-stream of tokens [start, end] inclusive; offsets keep pointing
        into the original source."""
        if end < start:
            return TokenStream(
                ids=self.ids[:0], offsets=self.offsets[:0], source_len=self.source_len
            )
        return TokenStream(
            ids=self.ids[start : end + 1],
            offsets=self.offsets[start : end + 1],
            source_len=self.source_len,
        )


@dataclass(frozen=True)
class BoundarySet:
    """Sorted token indices where segments and sentences end. The final token
    index is always a member of both lists."""

    segment_boundaries: np.ndarray
    sentence_boundaries: np.ndarray


@dataclass(frozen=True)
class QuerySplit:
    """Context/query partition of a stream. For implicit queries both ranges
    index the same stream; for explicit queries query_range indexes the
    separate query stream."""

    context_range: tuple[int, int]  # inclusive; (0, -1) when context is empty
    query_range: tuple[int, int]
    explicit: bool


def _char_to_byte_starts(text: str) -> np.ndarray:
    """Byte offset of every character boundary (length len(text)+1)."""
    cps = np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)
    nbytes = 1 + (cps >= 0x80).astype(np.int64) + (cps >= 0x800) + (cps >= 0x10000)
    out = np.zeros(len(text) + 1, dtype=np.int64)
    np.cumsum(nbytes, out=out[1:])
    return out


def tokenize(text: str, vocab: dict[str, int] | None = None) -> TokenStream:
    """Tokenize with the built-in word/punctuation splitter.

    Equal surface forms map to equal ids (assigned in order of first
    appearance), so id statistics double as surface-form statistics. Pass the
    same `vocab` dict to multiple calls to share one id space across streams
    (it is extended in place); context and query must share ids for term
    statistics and lexical overlap to line up.
    """
    source_len = len(text.encode("utf-8"))
    surfaces: list[str] = []
    char_spans: list[tuple[int, int]] = []
    for m in _TOKEN_RE.finditer(text):
        surfaces.append(m.group())
        char_spans.append(m.span())

    n = len(surfaces)
    ids = np.empty(n, dtype=np.int64)
    if vocab is None:
        vocab = {}
    for i, s in enumerate(surfaces):
        tid = vocab.get(s)
        if tid is None:
            tid = len(vocab)
            vocab[s] = tid
        ids[i] = tid

    offsets = np.empty((n, 2), dtype=np.int64)
    if n:
        spans = np.asarray(char_spans, dtype=np.int64)
        if text.isascii():
            offsets[:] = spans
        else:
            starts = _char_to_byte_starts(text)
            offsets[:, 0] = starts[spans[:, 0]]
            offsets[:, 1] = starts[spans[:, 1]]
    return TokenStream(ids=ids, offsets=offsets, source_len=source_len)


def from_pretokenized(
    ids: Sequence[int], offsets: Sequence[Sequence[int]], text: str
) -> TokenStream:
    """Build a stream from externally tokenized ids and byte offsets.

    Raises InputFormatError on length mismatch, out-of-range or overlapping
    offsets, or negative ids.
    """
    ids_arr = np.asarray(ids, dtype=np.int64).reshape(-1)
    off_arr = np.asarray(offsets, dtype=np.int64)
    source_len = len(text.encode("utf-8"))
    if off_arr.size == 0:
        off_arr = off_arr.reshape(0, 2)
    if off_arr.ndim != 2 or off_arr.shape[1] != 2:
        raise InputFormatError("offsets must be a list of [start, end] pairs")
    if ids_arr.shape[0] != off_arr.shape[0]:
        raise InputFormatError(
            f"ids/offsets length mismatch: {ids_arr.shape[0]} != {off_arr.shape[0]}"
        )
    if ids_arr.size and ids_arr.min() < 0:
        raise InputFormatError("token ids must be non-negative")
    if off_arr.size:
        if (off_arr[:, 0] >= off_arr[:, 1]).any():
            raise InputFormatError("each offset must satisfy start < end")
        if off_arr[:, 0].min() < 0 or off_arr[:, 1].max() > source_len:
            raise InputFormatError("offsets outside the source text byte range")
        if (off_arr[1:, 0] < off_arr[:-1, 1]).any():
            raise InputFormatError("offsets overlap or are not increasing")
    return TokenStream(ids=ids_arr, offsets=off_arr, source_len=source_len)


def detect_boundaries(stream: TokenStream, text: str) -> BoundarySet:
    """Find segment and sentence boundaries.

    A token ends a segment when its surface ends with a newline or a newline
    occurs before the next token ('#' headings at line start are covered by
    the preceding newline). A token ends a sentence when its surface is a
    terminator mark, or at any newline. The last token always closes both.
    """
    n = len(stream)
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return BoundarySet(segment_boundaries=empty, sentence_boundaries=empty)

    raw = text.encode("utf-8")
    data = np.frombuffer(raw, dtype=np.uint8)
    starts = stream.offsets[:, 0]
    ends = stream.offsets[:, 1]

    nl_pos = np.nonzero(data == _NEWLINE)[0]
    # Newline anywhere in [end_i, start_{i+1}) or as the token's last byte.
    gap_end = np.empty(n, dtype=np.int64)
    gap_end[:-1] = starts[1:]
    gap_end[-1] = ends[-1]
    has_nl = np.searchsorted(nl_pos, ends) < np.searchsorted(nl_pos, gap_end)
    ends_nl = data[ends - 1] == _NEWLINE

    lens = ends - starts
    is_term = np.zeros(n, dtype=bool)
    one = lens == 1
    if one.any():
        singles = frozenset(b[0] for b in _TERMINATOR_BYTES if len(b) == 1)
        is_term[one] = np.isin(data[starts[one]], np.array(sorted(singles), dtype=np.uint8))
    for tb in _TERMINATOR_BYTES:
        if len(tb) == 1:
            continue
        cand = np.nonzero(lens == len(tb))[0]
        for i in cand:
            if raw[starts[i] : ends[i]] == tb:
                is_term[i] = True

    seg = has_nl | ends_nl
    sent = seg | is_term
    seg[-1] = True
    sent[-1] = True
    return BoundarySet(
        segment_boundaries=np.nonzero(seg)[0].astype(np.int64),
        sentence_boundaries=np.nonzero(sent)[0].astype(np.int64),
    )


def resolve_implicit_query(
    stream: TokenStream, boundaries: BoundarySet, window: int
) -> QuerySplit:
    """Split off the trailing segment as the query.

    The query starts right after the last segment boundary that lies within
    `window` tokens of the end; with no such boundary it falls back to the
    last `window` tokens. A q_start of 0 leaves the context empty.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(stream)
    if n == 0:
        raise ValueError("stream must be non-empty")
    seg = boundaries.segment_boundaries
    interior = seg[(seg < n - 1) & (n - 1 - seg <= window)]
    if interior.size:
        q_start = int(interior[-1]) + 1
    else:
        q_start = max(0, n - window)
    return QuerySplit(
        context_range=(0, q_start - 1),
        query_range=(q_start, n - 1),
        explicit=False,
    )
