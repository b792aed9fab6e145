"""End-to-end compression pipeline.

Wires tokenization, segmentation, encoding, and planning into a single call
that takes a context (text or pre-tokenized) with an optional query and
returns the compressed text plus span provenance. Everything is a pure
function of (config, provider, input), so identical runs produce identical
bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import plan as planning
from .config import CompressionConfig
from .encode import (
    compute_itf,
    embed,
    encode_pages,
    encode_query,
    provider_from_spec,
    uniform_itf,
)
from .paging import paginate, segment
from .plan import ScoreVector, Span
from .text import (
    BoundarySet,
    QuerySplit,
    TokenStream,
    detect_boundaries,
    from_pretokenized,
    resolve_implicit_query,
    tokenize,
)


@dataclass(frozen=True)
class CompressResult:
    """Compression output mirroring the CLI record fields."""

    compressed: str
    token_count: int
    ratio: float | None
    spans: tuple[Span, ...]
    query_token_count: int
    context_token_count: int
    scores: ScoreVector | None

    def to_record(self, record_id: str, emit_scores: bool = False) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "id": record_id,
            "compressed": self.compressed,
            "token_count": self.token_count,
            "ratio": self.ratio,
            "spans": [
                {"a": s.a, "b": s.b, "origin": s.origin, "score": s.score}
                for s in self.spans
            ],
            "query_token_count": self.query_token_count,
        }
        if emit_scores:
            sv = self.scores
            rec["scores"] = {
                "sem": [] if sv is None else [float(x) for x in sv.norm_sem],
                "lex": [] if sv is None else [float(x) for x in sv.norm_lex],
                "mixed": [] if sv is None else [float(x) for x in sv.mixed],
            }
        return rec


class Compressor:
    """Reusable pipeline bound to one config and one embedding provider."""

    def __init__(self, config: CompressionConfig | None = None, provider=None):
        self.config = config or CompressionConfig()
        self.config.validate()
        self.provider = provider if provider is not None else provider_from_spec(self.config.embedding)

    # -- public entry points ------------------------------------------------

    def compress(self, context: str, query: str | None = None) -> CompressResult:
        """Compress a text document; without a query the trailing segment is
        treated as the implicit query."""
        if query is None or query == "":
            full = tokenize(context)
            return self._compress_implicit(full, context)
        vocab: dict[str, int] = {}
        ctx_stream = tokenize(context, vocab=vocab)
        qry_stream = tokenize(query, vocab=vocab)
        return self._compress_explicit(ctx_stream, context, qry_stream, query)

    def compress_pretokenized(
        self,
        ids: Sequence[int],
        offsets: Sequence[Sequence[int]],
        text: str,
        query_ids: Sequence[int] | None = None,
        query_text: str | None = None,
    ) -> CompressResult:
        """Compress an externally tokenized document. An explicit query must
        arrive as query_ids (same vocabulary) plus its verbatim text."""
        full = from_pretokenized(ids, offsets, text)
        if query_ids is None:
            return self._compress_implicit(full, text)
        q_ids = np.asarray(query_ids, dtype=np.int64).reshape(-1)
        qry_stream = TokenStream(
            ids=q_ids,
            offsets=np.zeros((q_ids.shape[0], 2), dtype=np.int64),
            source_len=0,
        )
        return self._compress_explicit(full, text, qry_stream, query_text or "")

    # -- internals ----------------------------------------------------------

    def _compress_implicit(self, full: TokenStream, text: str) -> CompressResult:
        if len(full) == 0:
            return self._empty_result("", 0)
        bounds = detect_boundaries(full, text)
        split = resolve_implicit_query(full, bounds, self.config.implicit_query_window)
        q_start = split.query_range[0]
        raw = text.encode("utf-8")
        query_text = raw[int(full.offsets[q_start, 0]) :].decode("utf-8", errors="replace")
        qry_stream = full.slice(q_start, len(full) - 1)
        if q_start == 0:
            return self._empty_result(query_text, len(qry_stream))
        ctx_stream = full.slice(0, q_start - 1)
        ctx_bounds = _clip_boundaries(bounds, q_start - 1)
        return self._run(ctx_stream, text, ctx_bounds, qry_stream, query_text, split)

    def _compress_explicit(
        self,
        ctx_stream: TokenStream,
        text: str,
        qry_stream: TokenStream,
        query_text: str,
    ) -> CompressResult:
        if len(ctx_stream) == 0:
            return self._empty_result(query_text, len(qry_stream))
        bounds = detect_boundaries(ctx_stream, text)
        split = QuerySplit(
            context_range=(0, len(ctx_stream) - 1),
            query_range=(0, len(qry_stream) - 1),
            explicit=True,
        )
        return self._run(ctx_stream, text, bounds, qry_stream, query_text, split)

    def _empty_result(self, query_text: str, query_tokens: int) -> CompressResult:
        return CompressResult(
            compressed=query_text,
            token_count=0,
            ratio=None,
            spans=(),
            query_token_count=query_tokens,
            context_token_count=0,
            scores=None,
        )

    def _run(
        self,
        ctx: TokenStream,
        text: str,
        bounds: BoundarySet,
        qry: TokenStream,
        query_text: str,
        split: QuerySplit,
    ) -> CompressResult:
        cfg = self.config
        itf = (uniform_itf if cfg.disable_itf else compute_itf)(ctx, qry)
        table = paginate(segment(ctx, bounds), cfg.page_size)

        features = embed(self.provider, ctx)
        token_weights = itf.weights_for(ctx.ids)
        pages = encode_pages(
            features,
            table,
            token_weights,
            gamma=cfg.effective_gamma(),
            eps=cfg.epsilon,
            beta=cfg.beta,
        )

        n = table.n_pages
        if len(qry) > 0:
            query_repr = encode_query(
                self.provider, qry, itf, dense_threshold=cfg.dense_threshold, eps=cfg.epsilon
            )
            raw_sem = planning.semantic_scores(pages, query_repr)
            raw_lex = planning.lexical_scores(table, ctx, query_repr.token_set, itf)
        else:
            # Query tokenized to nothing: structural priors only.
            raw_sem = np.zeros(n, dtype=np.float64)
            raw_lex = np.zeros(n, dtype=np.float64)
        scores = planning.normalize_and_mix(raw_sem, raw_lex, cfg.effective_lambda())

        p_qry = planning.locate_query_anchor(table, split)
        smoothing = not cfg.disable_smoothing
        selection = planning.select_pages(
            scores,
            p_qry,
            cfg.k_anc,
            cfg.w_flow,
            table,
            cfg.budget,
            bounds.sentence_boundaries,
            policy=cfg.selection_policy,
            smoothing=smoothing,
        )
        spans = planning.smooth_spans(
            selection, table, bounds.sentence_boundaries, scores.mixed, smoothing=smoothing
        )
        spans = planning.enforce_budget(spans, cfg.budget, bounds.sentence_boundaries)
        compressed = planning.render(spans, ctx, text, query_text)
        token_count = spans.token_count()
        ratio = (len(ctx) / token_count) if token_count else None
        return CompressResult(
            compressed=compressed,
            token_count=token_count,
            ratio=ratio,
            spans=spans.spans,
            query_token_count=len(qry),
            context_token_count=len(ctx),
            scores=scores,
        )


def _clip_boundaries(bounds: BoundarySet, last: int) -> BoundarySet:
    """Restrict boundaries to the context [0, last], forcing `last` in."""

    def clip(arr: np.ndarray) -> np.ndarray:
        kept = arr[arr <= last]
        if kept.size == 0 or kept[-1] != last:
            kept = np.concatenate([kept, np.asarray([last], dtype=np.int64)])
        return kept

    return BoundarySet(
        segment_boundaries=clip(bounds.segment_boundaries),
        sentence_boundaries=clip(bounds.sentence_boundaries),
    )


def compress(
    context: str,
    query: str | None = None,
    config: CompressionConfig | None = None,
    provider=None,
) -> CompressResult:
    """One-shot convenience wrapper around Compressor."""
    return Compressor(config=config, provider=provider).compress(context, query)
