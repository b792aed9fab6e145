"""Page scoring and selection.

Pages are ranked by a min-max-normalized blend of semantic similarity
(weighted cosine against the query vectors) and lexical overlap (summed ITF
weight of query tokens occurring in the page). Selection applies three
structural priors under a causal constraint: the leading anchor pages, the
flow window immediately before the query, and budget-greedy flash pages by
descending blended score. Selected pages become token spans, get extended
outward to sentence boundaries, are merged, trimmed to the budget, and
rendered back as verbatim slices of the source text.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, replace

import numpy as np

from .encode import ItfTable, PageMatrix, QueryRepr
from .errors import ConfigurationError
from .paging import PageTable, page_of_token
from .text import QuerySplit, TokenStream

_NORM_FLOOR = 1e-12

ORIGIN_ANCHOR = "anchor"
ORIGIN_FLOW = "flow"
ORIGIN_FLASH = "flash"
_ORIGIN_RANK = {ORIGIN_ANCHOR: 0, ORIGIN_FLOW: 1, ORIGIN_FLASH: 2}

SELECTION_POLICIES = ("full", "anchor_only", "flow_only", "flash_only")


@dataclass(frozen=True)
class ScoreVector:
    raw_sem: np.ndarray
    raw_lex: np.ndarray
    norm_sem: np.ndarray
    norm_lex: np.ndarray
    mixed: np.ndarray


@dataclass(frozen=True)
class SelectionPlan:
    anchors: frozenset[int]
    flow: frozenset[int]
    flash: tuple[int, ...]  # admission order = descending mixed score
    p_qry: int

    def pages(self) -> list[int]:
        return sorted(self.anchors | self.flow | set(self.flash))

    def origin_of(self, page: int) -> str:
        if page in self.anchors:
            return ORIGIN_ANCHOR
        if page in self.flow:
            return ORIGIN_FLOW
        return ORIGIN_FLASH


@dataclass(frozen=True)
class Span:
    a: int  # inclusive token index
    b: int  # inclusive token index
    origin: str
    score: float

    def __len__(self) -> int:
        return self.b - self.a + 1


@dataclass(frozen=True)
class SpanSet:
    spans: tuple[Span, ...]

    def token_count(self) -> int:
        return sum(len(s) for s in self.spans)


def semantic_scores(pages: PageMatrix, query: QueryRepr) -> np.ndarray:
    """Weighted sum of cosines between each page vector and the query
    vectors; zero-norm vectors contribute zero."""
    rows = pages.rows
    r_norm = np.linalg.norm(rows, axis=1)
    q_norm = np.linalg.norm(query.vectors, axis=1)
    r_unit = np.where(r_norm[:, None] < _NORM_FLOOR, 0.0, rows / np.maximum(r_norm, _NORM_FLOOR)[:, None])
    q_unit = np.where(q_norm[:, None] < _NORM_FLOOR, 0.0, query.vectors / np.maximum(q_norm, _NORM_FLOOR)[:, None])
    return (r_unit @ q_unit.T) @ query.weights


def lexical_scores(
    table: PageTable,
    context: TokenStream,
    query_set: frozenset[int],
    itf: ItfTable,
) -> np.ndarray:
    """Per-page sum of ITF weights over occurrences of query tokens."""
    n_tokens = len(context)
    if n_tokens == 0 or table.n_pages == 0:
        return np.zeros(table.n_pages, dtype=np.float64)
    if query_set:
        in_set = np.isin(context.ids, np.fromiter(query_set, dtype=np.int64))
        values = np.where(in_set, itf.weights_for(context.ids), 0.0)
    else:
        values = np.zeros(n_tokens, dtype=np.float64)
    idx = table.index
    valid = idx >= 0
    safe = np.where(valid, idx, 0)
    return (values[safe] * valid).sum(axis=1)


def _minmax(raw: np.ndarray) -> np.ndarray:
    lo, hi = float(raw.min()), float(raw.max())
    if hi - lo <= 0.0:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def normalize_and_mix(raw_sem: np.ndarray, raw_lex: np.ndarray, lam: float) -> ScoreVector:
    """Min-max each branch over all pages (a constant branch maps to zeros),
    then blend with weight lam on the semantic side."""
    norm_sem = _minmax(np.asarray(raw_sem, dtype=np.float64))
    norm_lex = _minmax(np.asarray(raw_lex, dtype=np.float64))
    mixed = lam * norm_sem + (1.0 - lam) * norm_lex
    return ScoreVector(
        raw_sem=np.asarray(raw_sem, dtype=np.float64),
        raw_lex=np.asarray(raw_lex, dtype=np.float64),
        norm_sem=norm_sem,
        norm_lex=norm_lex,
        mixed=mixed,
    )


def locate_query_anchor(table: PageTable, split: QuerySplit) -> int:
    """Page containing the query start: the last context page for explicit
    queries, else the page of the token right before the query."""
    if split.explicit:
        return table.n_pages - 1
    q_start = split.query_range[0]
    if q_start <= 0:
        raise ValueError("implicit query with empty context has no anchor page")
    return page_of_token(table, q_start - 1)


# ---------------------------------------------------------------------------
# Sentence smoothing and span merging
# ---------------------------------------------------------------------------

def smooth_interval(a: int, b: int, sentence_boundaries: np.ndarray) -> tuple[int, int]:
    """Extend [a, b] outward to the enclosing sentence boundaries: a moves to
    one past the previous boundary (or 0), b to the next boundary."""
    i = int(np.searchsorted(sentence_boundaries, a, side="left")) - 1
    new_a = int(sentence_boundaries[i]) + 1 if i >= 0 else 0
    j = int(np.searchsorted(sentence_boundaries, b, side="left"))
    new_b = int(sentence_boundaries[j]) if j < sentence_boundaries.size else b
    return new_a, new_b


def merge_spans(spans: list[Span]) -> list[Span]:
    """Merge overlapping/adjacent spans; a merged span keeps the max score and
    the strongest origin (anchor over flow over flash)."""
    if not spans:
        return []
    ordered = sorted(spans, key=lambda s: (s.a, s.b))
    out = [ordered[0]]
    for s in ordered[1:]:
        last = out[-1]
        if s.a <= last.b + 1:
            origin = last.origin if _ORIGIN_RANK[last.origin] <= _ORIGIN_RANK[s.origin] else s.origin
            out[-1] = Span(
                a=last.a,
                b=max(last.b, s.b),
                origin=origin,
                score=max(last.score, s.score),
            )
        else:
            out.append(s)
    return out


class _IntervalBudget:
    """Merged-interval accumulator used to grow the flash set under a token
    budget. Intervals are kept disjoint, sorted, and adjacency-merged."""

    def __init__(self) -> None:
        self.starts: list[int] = []
        self.ends: list[int] = []
        self.total = 0

    def merged_total_with(self, a: int, b: int) -> int:
        lo = bisect.bisect_left(self.starts, a - 1)
        while lo > 0 and self.ends[lo - 1] >= a - 1:
            lo -= 1
        hi = bisect.bisect_right(self.starts, b + 1)
        na, nb = a, b
        absorbed = 0
        for k in range(lo, hi):
            na = min(na, self.starts[k])
            nb = max(nb, self.ends[k])
            absorbed += self.ends[k] - self.starts[k] + 1
        return self.total - absorbed + (nb - na + 1)

    def add(self, a: int, b: int) -> None:
        lo = bisect.bisect_left(self.starts, a - 1)
        while lo > 0 and self.ends[lo - 1] >= a - 1:
            lo -= 1
        hi = bisect.bisect_right(self.starts, b + 1)
        na, nb = a, b
        absorbed = 0
        for k in range(lo, hi):
            na = min(na, self.starts[k])
            nb = max(nb, self.ends[k])
            absorbed += self.ends[k] - self.starts[k] + 1
        del self.starts[lo:hi]
        del self.ends[lo:hi]
        self.starts.insert(lo, na)
        self.ends.insert(lo, nb)
        self.total += (nb - na + 1) - absorbed


def select_pages(
    scores: ScoreVector,
    p_qry: int,
    k_anc: int,
    w_flow: int,
    table: PageTable,
    budget: int,
    sentence_boundaries: np.ndarray,
    policy: str = "full",
    smoothing: bool = True,
) -> SelectionPlan:
    """Build the anchor/flow/flash selection under the token budget.

    Anchors and the flow window are unconditional; flash candidates (pages at
    or before the query anchor, outside anchors and flow) are visited in
    descending mixed score with ties to the lower page index and admitted
    whenever the smoothed, merged footprint of the plan stays within budget.
    Overflowing candidates are skipped, not terminal.
    """
    if budget < 1:
        raise ConfigurationError(f"budget must be >= 1, got {budget}")
    if policy not in SELECTION_POLICIES:
        raise ConfigurationError(f"unknown selection policy {policy!r}")

    anchors: set[int] = set()
    flow: set[int] = set()
    if policy in ("full", "anchor_only"):
        anchors = set(range(0, min(k_anc, p_qry + 1)))
    if policy in ("full", "flow_only"):
        flow = set(range(max(0, p_qry - w_flow), p_qry + 1)) - anchors

    def footprint(page: int) -> tuple[int, int]:
        a, b = table.page_span(page)
        if smoothing:
            a, b = smooth_interval(a, b, sentence_boundaries)
        return a, b

    flash: list[int] = []
    if policy in ("full", "flash_only"):
        acc = _IntervalBudget()
        for page in sorted(anchors | flow):
            acc.add(*footprint(page))
        taken = anchors | flow
        order = np.argsort(-scores.mixed[: p_qry + 1], kind="stable")
        for page in order:
            page = int(page)
            if page in taken:
                continue
            a, b = footprint(page)
            if acc.merged_total_with(a, b) <= budget:
                acc.add(a, b)
                flash.append(page)
    return SelectionPlan(
        anchors=frozenset(anchors),
        flow=frozenset(flow),
        flash=tuple(flash),
        p_qry=p_qry,
    )


def smooth_spans(
    plan: SelectionPlan,
    table: PageTable,
    sentence_boundaries: np.ndarray,
    mixed: np.ndarray,
    smoothing: bool = True,
) -> SpanSet:
    """Token spans for the selected pages, sentence-extended and merged."""
    spans: list[Span] = []
    for page in plan.pages():
        a, b = table.page_span(page)
        if smoothing:
            a, b = smooth_interval(a, b, sentence_boundaries)
        spans.append(Span(a=a, b=b, origin=plan.origin_of(page), score=float(mixed[page])))
    return SpanSet(spans=tuple(merge_spans(spans)))


def enforce_budget(
    span_set: SpanSet, budget: int, sentence_boundaries: np.ndarray
) -> SpanSet:
    """Trim an over-budget span set.

    Whole spans are dropped in ascending score, flash first, then flow, then
    anchors (ties drop the later span first). If one span remains and still
    overflows, its tail is cut at the latest sentence boundary that fits,
    falling back to a hard cut.
    """
    if budget < 1:
        raise ConfigurationError(f"budget must be >= 1, got {budget}")
    spans = list(span_set.spans)
    total = sum(len(s) for s in spans)
    if total <= budget:
        return span_set
    drop_order = sorted(
        range(len(spans)),
        key=lambda i: (-_ORIGIN_RANK[spans[i].origin], spans[i].score, -spans[i].a),
    )
    kept = set(range(len(spans)))
    for i in drop_order:
        if total <= budget or len(kept) <= 1:
            break
        kept.discard(i)
        total -= len(spans[i])
    survivors = [spans[i] for i in sorted(kept)]
    if total > budget and len(survivors) == 1:
        s = survivors[0]
        limit = s.a + budget - 1
        i = int(np.searchsorted(sentence_boundaries, limit, side="right")) - 1
        new_b = limit
        if i >= 0 and int(sentence_boundaries[i]) >= s.a:
            new_b = int(sentence_boundaries[i])
        survivors = [replace(s, b=new_b)]
    return SpanSet(spans=tuple(survivors))


def render(span_set: SpanSet, stream: TokenStream, text: str, query_text: str) -> str:
    """Concatenate the spans' verbatim byte ranges joined by newlines, with
    the query text appended; the query is always retained."""
    raw = text.encode("utf-8")
    parts = []
    for s in span_set.spans:
        lo = int(stream.offsets[s.a, 0])
        hi = int(stream.offsets[s.b, 1])
        parts.append(raw[lo:hi].decode("utf-8", errors="replace"))
    body = "\n".join(parts)
    if not query_text:
        return body
    if not parts:
        return query_text
    return body + "\n" + query_text
