"""In-process wrapper around the pagecomp compressor.

Exposes exactly two callables for LLM-pipeline integration: compress() and
load_embedding_table(). Option names mirror the CLI flags with underscores
(budget, page_size, gamma, lambda_, k_anc, w_flow, ...); results carry the
same fields as the CLI output record and are byte-identical to it for
matching configuration and inputs.
"""

from __future__ import annotations

from typing import Any

from pagecomp.config import config_from_mapping, field_names
from pagecomp.encode import TableEmbeddingProvider
from pagecomp.errors import ConfigurationError, PagecompError
from pagecomp.pipeline import CompressResult, Compressor

__all__ = ["CompressResult", "compress", "load_embedding_table"]


def compress(context: str, query: str | None = None, **options: Any) -> CompressResult:
    """Compress a context (optionally against an explicit query).

    Keyword options must be CompressionConfig field names; anything else, or
    an out-of-range value, raises ValueError naming the field. Pipeline
    failures surface as RuntimeError with the CLI's error text.
    """
    for key in options:
        if key not in field_names():
            raise ValueError(f"unknown option {key!r}")
    try:
        config = config_from_mapping(options)
    except ConfigurationError as exc:
        raise ValueError(str(exc)) from exc
    try:
        return Compressor(config=config).compress(context, query)
    except PagecompError as exc:
        raise RuntimeError(str(exc)) from exc


def load_embedding_table(path: str) -> TableEmbeddingProvider:
    """Load a binary float32 embedding table as an embedding provider."""
    try:
        return TableEmbeddingProvider.load(path)
    except PagecompError as exc:
        raise RuntimeError(str(exc)) from exc
