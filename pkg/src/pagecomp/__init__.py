"""Training-free long-context prompt compression.

The pipeline segments text into fixed-capacity pages, pools token embeddings
per page with ITF weighting, scores pages against the query with a blended
semantic/lexical function, selects anchor/flow/flash pages under a token
budget, and renders a sentence-smoothed subsequence of the original text.
"""

from .config import CompressionConfig
from .encode import (
    HashEmbeddingProvider,
    ItfTable,
    TableEmbeddingProvider,
    compute_itf,
    load_embedding_matrix,
    provider_from_spec,
    write_embedding_table,
)
from .errors import (
    ConfigurationError,
    GenerationError,
    InputFormatError,
    OutOfVocabularyError,
    PagecompError,
    TableFormatError,
)
from .haystack import gen_haystack, latency_bench, needle_recall
from .pipeline import CompressResult, Compressor, compress
from .text import TokenStream, detect_boundaries, resolve_implicit_query, tokenize

__version__ = "0.1.0"

__all__ = [
    "CompressionConfig",
    "CompressResult",
    "Compressor",
    "ConfigurationError",
    "GenerationError",
    "HashEmbeddingProvider",
    "InputFormatError",
    "ItfTable",
    "OutOfVocabularyError",
    "PagecompError",
    "TableEmbeddingProvider",
    "TableFormatError",
    "TokenStream",
    "compress",
    "compute_itf",
    "detect_boundaries",
    "gen_haystack",
    "latency_bench",
    "load_embedding_matrix",
    "needle_recall",
    "provider_from_spec",
    "resolve_implicit_query",
    "tokenize",
    "write_embedding_table",
]
