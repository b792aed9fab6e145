"""Compression configuration.

Defaults: page size 64, fusion weight 0.7, score blend 0.7, four anchor
pages, flow window 4. The blend weight is exposed on the CLI as --lambda and
stored as `lambda_` because `lambda` is a Python keyword.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Any, Mapping

from .errors import ConfigurationError

SCORE_MODES = ("mixed", "semantic_only", "lexical_only")
SELECTION_POLICIES = ("full", "anchor_only", "flow_only", "flash_only")
TOKENIZER_MODES = ("word", "pretokenized")


@dataclass(frozen=True)
class CompressionConfig:
    budget: int = 2000
    page_size: int = 64
    gamma: float = 0.7
    lambda_: float = 0.7
    k_anc: int = 4
    w_flow: int = 4
    implicit_query_window: int = 64
    dense_threshold: int = 4
    epsilon: float = 1e-8
    beta: float = -1e9
    embedding: str = "hash:64:0"
    tokenizer: str = "word"
    disable_max_pool: bool = False
    disable_mean_pool: bool = False
    disable_itf: bool = False
    disable_smoothing: bool = False
    selection_policy: str = "full"
    score_mode: str = "mixed"

    def validate(self) -> None:
        if self.budget < 1:
            raise ConfigurationError(f"budget must be >= 1, got {self.budget}")
        if self.page_size < 1:
            raise ConfigurationError(f"page_size must be >= 1, got {self.page_size}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ConfigurationError(f"lambda_ must be in [0, 1], got {self.lambda_}")
        if self.k_anc < 0:
            raise ConfigurationError(f"k_anc must be >= 0, got {self.k_anc}")
        if self.w_flow < 0:
            raise ConfigurationError(f"w_flow must be >= 0, got {self.w_flow}")
        if self.implicit_query_window < 1:
            raise ConfigurationError(
                f"implicit_query_window must be >= 1, got {self.implicit_query_window}"
            )
        if self.dense_threshold < 1:
            raise ConfigurationError(
                f"dense_threshold must be >= 1, got {self.dense_threshold}"
            )
        if self.epsilon <= 0.0:
            raise ConfigurationError(f"epsilon must be > 0, got {self.epsilon}")
        if self.beta >= 0.0:
            raise ConfigurationError(f"beta must be < 0, got {self.beta}")
        if self.tokenizer not in TOKENIZER_MODES:
            raise ConfigurationError(f"tokenizer must be one of {TOKENIZER_MODES}, got {self.tokenizer!r}")
        if self.selection_policy not in SELECTION_POLICIES:
            raise ConfigurationError(
                f"selection_policy must be one of {SELECTION_POLICIES}, got {self.selection_policy!r}"
            )
        if self.score_mode not in SCORE_MODES:
            raise ConfigurationError(f"score_mode must be one of {SCORE_MODES}, got {self.score_mode!r}")
        if self.disable_max_pool and self.disable_mean_pool:
            raise ConfigurationError("disable_max_pool and disable_mean_pool cannot both be set")

    # Pooling/scoring switches resolve to effective blend weights.
    def effective_gamma(self) -> float:
        if self.disable_max_pool:
            return 1.0
        if self.disable_mean_pool:
            return 0.0
        return self.gamma

    def effective_lambda(self) -> float:
        if self.score_mode == "semantic_only":
            return 1.0
        if self.score_mode == "lexical_only":
            return 0.0
        return self.lambda_


def field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(CompressionConfig))


def config_from_mapping(values: Mapping[str, Any], base: CompressionConfig | None = None) -> CompressionConfig:
    """Overlay a mapping of field values onto a base config; unknown keys are
    configuration errors naming the key."""
    base = base or CompressionConfig()
    known = set(field_names())
    for key in values:
        if key not in known:
            raise ConfigurationError(f"unknown configuration field {key!r}")
    cfg = dataclasses.replace(base, **dict(values))
    cfg.validate()
    return cfg
