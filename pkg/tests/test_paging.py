import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pagecomp.errors import ConfigurationError
from pagecomp.paging import PAD, PageTable, Segment, page_of_token, paginate, segment
from pagecomp.text import BoundarySet, tokenize


def make_boundaries(seg: list[int]) -> BoundarySet:
    arr = np.asarray(seg, dtype=np.int64)
    return BoundarySet(segment_boundaries=arr, sentence_boundaries=arr)


def segments_from_lengths(lengths: list[int]) -> list[Segment]:
    out, start = [], 0
    for n in lengths:
        out.append(Segment(start=start, end=start + n - 1))
        start += n
    return out


class TestSegment:
    def test_boundary_cuts(self):
        s = tokenize("a b c d e")
        segs = segment(s, make_boundaries([1, 4]))
        assert [(x.start, x.end) for x in segs] == [(0, 1), (2, 4)]

    def test_single_segment(self):
        s = tokenize("a b c d e")
        segs = segment(s, make_boundaries([4]))
        assert [(x.start, x.end) for x in segs] == [(0, 4)]

    def test_enumerated_cuts(self):
        s = tokenize("a b c d e f g")
        segs = segment(s, make_boundaries([0, 3, 6]))
        assert [(x.start, x.end) for x in segs] == [(0, 0), (1, 3), (4, 6)]

    def test_empty_context(self):
        s = tokenize("")
        assert segment(s, make_boundaries([])) == []


class TestPaginate:
    def test_greedy_example(self):
        table = paginate(segments_from_lengths([2, 1, 3, 6]), 4)
        assert table.n_pages == 4
        spans = [table.page_span(i) for i in range(4)]
        assert spans == [(0, 2), (3, 5), (6, 9), (10, 11)]

    def test_exact_fit_single_page(self):
        table = paginate(segments_from_lengths([4]), 4)
        assert table.n_pages == 1
        assert (table.index != PAD).all()

    def test_full_segments_no_packing(self):
        table = paginate(segments_from_lengths([4, 4, 4]), 4)
        assert table.n_pages == 3

    def test_exact_remaining_capacity_packs(self):
        # 2 + 2 fills a 4-page exactly: inclusive fit.
        table = paginate(segments_from_lengths([2, 2]), 4)
        assert table.n_pages == 1

    def test_no_copack_after_split(self):
        # Oversized 5 splits into 4+1; the next segment starts a new page.
        table = paginate(segments_from_lengths([5, 2]), 4)
        assert [table.page_span(i) for i in range(table.n_pages)] == [
            (0, 3),
            (4, 4),
            (5, 6),
        ]

    def test_oversized_opens_fresh_page(self):
        table = paginate(segments_from_lengths([1, 6]), 4)
        assert [table.page_span(i) for i in range(table.n_pages)] == [
            (0, 0),
            (1, 4),
            (5, 6),
        ]

    def test_bad_capacity(self):
        with pytest.raises(ConfigurationError):
            paginate(segments_from_lengths([2]), 0)

    def test_pad_value(self):
        table = paginate(segments_from_lengths([2]), 4)
        assert table.index.tolist() == [[0, 1, PAD, PAD]]


lengths_strategy = st.lists(st.integers(min_value=1, max_value=17), min_size=1, max_size=40)
capacity_strategy = st.integers(min_value=1, max_value=8)


class TestPaginateProperties:
    @given(lengths_strategy, capacity_strategy)
    @settings(max_examples=300)
    def test_row_major_permutation(self, lengths, capacity):
        total = sum(lengths)
        table = paginate(segments_from_lengths(lengths), capacity)
        flat = table.index.reshape(-1)
        tokens = flat[flat != PAD]
        assert tokens.tolist() == list(range(total))

    @given(lengths_strategy, capacity_strategy)
    @settings(max_examples=300)
    def test_every_page_nonempty_and_within_capacity(self, lengths, capacity):
        table = paginate(segments_from_lengths(lengths), capacity)
        sizes = (table.index != PAD).sum(axis=1)
        assert (sizes >= 1).all()
        assert (sizes <= capacity).all()

    @given(lengths_strategy, capacity_strategy)
    @settings(max_examples=300)
    def test_page_count_bound(self, lengths, capacity):
        table = paginate(segments_from_lengths(lengths), capacity)
        assert table.n_pages <= len(lengths) + math.ceil(sum(lengths) / capacity)

    @given(lengths_strategy, capacity_strategy)
    @settings(max_examples=300)
    def test_greedy_minimality(self, lengths, capacity):
        # A segment never starts a new page when it would have fit in the
        # previous one (unless the previous page closed a split run).
        segs = segments_from_lengths(lengths)
        table = paginate(segs, capacity)
        split_last_chunks = set()
        for s in segs:
            if len(s) > capacity:
                last_start = s.start + ((len(s) - 1) // capacity) * capacity
                split_last_chunks.add((last_start, s.end))
        starts_of_segments = {s.start: s for s in segs}
        for i in range(1, table.n_pages):
            a, b = table.page_span(i)
            seg_here = starts_of_segments.get(a)
            if seg_here is None or len(seg_here) > capacity:
                continue  # continuation chunk of a split segment
            pa, pb = table.page_span(i - 1)
            if (pa, pb) in split_last_chunks:
                continue  # packing restarts after a split run
            used = pb - pa + 1
            assert used + len(seg_here) > capacity


class TestPageOfToken:
    @pytest.fixture
    def table(self) -> PageTable:
        return paginate(segments_from_lengths([2, 1, 3, 6]), 4)

    def test_worked_example(self, table):
        assert page_of_token(table, 5) == 1

    def test_first_and_last(self, table):
        assert page_of_token(table, 0) == 0
        assert page_of_token(table, 11) == table.n_pages - 1

    def test_out_of_range(self, table):
        with pytest.raises(IndexError):
            page_of_token(table, 12)
        with pytest.raises(IndexError):
            page_of_token(table, -1)

    @given(lengths_strategy, capacity_strategy)
    @settings(max_examples=100)
    def test_consistent_with_spans(self, lengths, capacity):
        table = paginate(segments_from_lengths(lengths), capacity)
        for t in range(sum(lengths)):
            p = page_of_token(table, t)
            a, b = table.page_span(p)
            assert a <= t <= b
