"""Segment the context at natural delimiters and greedily pack segments into
fixed-capacity pages.

Pages are rows of an N x M index matrix (pad value -1). Consecutive segments
share a page while their cumulative length fits the capacity; a segment longer
than the capacity always opens a fresh page and is split into maximal chunks,
and packing restarts on a new page after the split. Because segments tile the
context, every page covers one contiguous token interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .text import BoundarySet, TokenStream

PAD = -1


@dataclass(frozen=True)
class Segment:
    start: int  # inclusive token index
    end: int    # inclusive token index

    def __len__(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class PageTable:
    capacity: int
    index: np.ndarray             # (N, M) int64, pad entries are -1
    page_first_token: np.ndarray  # (N,) int64
    page_last_token: np.ndarray   # (N,) int64

    @property
    def n_pages(self) -> int:
        return int(self.index.shape[0])

    def page_span(self, page: int) -> tuple[int, int]:
        return int(self.page_first_token[page]), int(self.page_last_token[page])


def segment(stream: TokenStream, boundaries: BoundarySet) -> list[Segment]:
    """Cut the stream at each segment boundary; segments tile [0, L-1]."""
    n = len(stream)
    if n == 0:
        return []
    out: list[Segment] = []
    prev = -1
    for b in boundaries.segment_boundaries:
        out.append(Segment(start=prev + 1, end=int(b)))
        prev = int(b)
    return out


def paginate(segments: list[Segment], capacity: int) -> PageTable:
    """Greedy left-to-right packing of segments into pages of `capacity`."""
    if capacity < 1:
        raise ConfigurationError(f"page_size must be >= 1, got {capacity}")
    firsts: list[int] = []
    lasts: list[int] = []
    room = 0  # remaining capacity of the open page; 0 means no open page
    for seg in segments:
        length = len(seg)
        if length > capacity:
            # Oversized: fresh page, maximal chunks, no co-packing afterwards.
            for a in range(seg.start, seg.end + 1, capacity):
                firsts.append(a)
                lasts.append(min(a + capacity - 1, seg.end))
            room = 0
        elif length <= room:
            lasts[-1] = seg.end
            room -= length
        else:
            firsts.append(seg.start)
            lasts.append(seg.end)
            room = capacity - length
    n = len(firsts)
    first_arr = np.asarray(firsts, dtype=np.int64).reshape(n)
    last_arr = np.asarray(lasts, dtype=np.int64).reshape(n)
    lengths = last_arr - first_arr + 1
    cols = np.arange(capacity, dtype=np.int64)
    index = np.where(
        cols[None, :] < lengths[:, None],
        first_arr[:, None] + cols[None, :],
        np.int64(PAD),
    )
    return PageTable(
        capacity=capacity,
        index=index,
        page_first_token=first_arr,
        page_last_token=last_arr,
    )


def page_of_token(table: PageTable, t: int) -> int:
    """Index of the page whose token interval contains t."""
    n = table.n_pages
    if n == 0 or t < 0 or t > int(table.page_last_token[-1]):
        raise IndexError(f"token index {t} outside the paged context")
    return int(np.searchsorted(table.page_first_token, t, side="right")) - 1
