import json

import pytest

from pagecomp.config import CompressionConfig, config_from_mapping
from pagecomp.errors import ConfigurationError
from pagecomp.pipeline import Compressor, compress
from pagecomp.text import tokenize


def small_config(**kw) -> CompressionConfig:
    base = dict(budget=2000, page_size=8, embedding="hash:16:0")
    base.update(kw)
    return CompressionConfig(**base)


FILLER = " ".join(f"word{i % 7} thing{i % 5}." for i in range(120))


class TestCompressBasics:
    def test_identity_when_budget_covers(self):
        ctx = "The relevant sentence lives here."
        r = compress(ctx, "where does it live?", small_config())
        assert r.compressed == ctx + "\nwhere does it live?"
        assert r.ratio == 1.0

    def test_budget_bound(self):
        cfg = small_config(budget=40)
        r = compress(FILLER, "what about word3?", cfg)
        assert r.token_count <= 40
        assert r.ratio is not None and r.ratio > 1.0

    def test_empty_context(self):
        r = compress("", "query here?", small_config())
        assert r.compressed == "query here?"
        assert r.token_count == 0
        assert r.ratio is None
        assert r.spans == ()

    def test_empty_everything(self):
        r = compress("", None, small_config())
        assert r.compressed == ""
        assert r.token_count == 0

    def test_whitespace_query_retained_verbatim(self):
        r = compress("some context text.", "   ", small_config())
        assert r.compressed.endswith("   ")

    def test_spans_are_disjoint_ordered_substrings(self):
        cfg = small_config(budget=60)
        text = FILLER
        r = compress(text, "what about thing2?", cfg)
        stream = tokenize(text)
        raw = text.encode("utf-8")
        prev_end = -1
        for s in r.spans:
            assert s.a > prev_end
            chunk = raw[stream.offsets[s.a, 0] : stream.offsets[s.b, 1]].decode()
            assert chunk in text
            assert chunk in r.compressed
            prev_end = s.b

    def test_deterministic(self):
        cfg = small_config(budget=64)
        a = compress(FILLER, "what about word3?", cfg)
        b = compress(FILLER, "what about word3?", cfg)
        assert a.compressed == b.compressed
        assert a.spans == b.spans
        assert a.token_count == b.token_count

    def test_query_token_count_reported(self):
        r = compress("ctx words here.", "three token query", small_config())
        assert r.query_token_count == 3


class TestImplicitQuery:
    def test_trailing_segment_is_query(self):
        ctx = "Body sentence one. Body sentence two.\nWhat is the answer?"
        r = Compressor(small_config()).compress(ctx, None)
        assert r.compressed.endswith("What is the answer?")
        assert r.query_token_count == 5  # What is the answer ?
        # context portion precedes the query
        assert "Body sentence one." in r.compressed

    def test_whole_stream_query_empty_compression(self):
        # No interior boundary and window covers everything.
        ctx = "just a few words"
        r = Compressor(small_config()).compress(ctx, None)
        assert r.token_count == 0
        assert r.compressed == ctx

    def test_causality_no_span_at_or_after_query(self):
        ctx = FILLER + "\nWhat is the answer to thing3?"
        comp = Compressor(small_config(budget=64))
        r = comp.compress(ctx, None)
        full = tokenize(ctx)
        q_start = len(full) - r.query_token_count
        for s in r.spans:
            assert s.b < q_start

    def test_verbatim_tail_preserved(self):
        ctx = "Context sentence here.\nTrailing query with tail...  "
        r = Compressor(small_config()).compress(ctx, None)
        assert r.compressed.endswith("Trailing query with tail...  ")


class TestPretokenized:
    def test_matches_word_mode(self):
        text = FILLER
        query = "what about word3?"
        vocab: dict[str, int] = {}
        ctx_stream = tokenize(text, vocab=vocab)
        qry_stream = tokenize(query, vocab=vocab)
        cfg = small_config(budget=64, tokenizer="pretokenized")
        comp = Compressor(cfg)
        r1 = comp.compress_pretokenized(
            ctx_stream.ids.tolist(),
            ctx_stream.offsets.tolist(),
            text,
            query_ids=qry_stream.ids.tolist(),
            query_text=query,
        )
        r2 = Compressor(small_config(budget=64)).compress(text, query)
        assert r1.compressed == r2.compressed
        assert r1.token_count == r2.token_count

    def test_implicit_from_pretokenized(self):
        text = "alpha beta.\ngamma delta?"
        stream = tokenize(text)
        cfg = small_config(tokenizer="pretokenized")
        r = Compressor(cfg).compress_pretokenized(
            stream.ids.tolist(), stream.offsets.tolist(), text
        )
        assert r.compressed.endswith("gamma delta?")


class TestConfigValidation:
    def test_gamma_range(self):
        with pytest.raises(ConfigurationError, match="gamma"):
            CompressionConfig(gamma=1.5).validate()

    def test_lambda_range(self):
        with pytest.raises(ConfigurationError, match="lambda_"):
            CompressionConfig(lambda_=-0.1).validate()

    def test_unknown_field(self):
        with pytest.raises(ConfigurationError, match="unknown"):
            config_from_mapping({"not_a_field": 1})

    def test_both_pools_disabled(self):
        with pytest.raises(ConfigurationError):
            CompressionConfig(disable_max_pool=True, disable_mean_pool=True).validate()

    def test_defaults_follow_reported_settings(self):
        cfg = CompressionConfig()
        assert cfg.page_size == 64
        assert cfg.gamma == 0.7
        assert cfg.lambda_ == 0.7
        assert cfg.k_anc == 4
        assert cfg.w_flow == 4
        assert cfg.dense_threshold == 4

    def test_effective_overrides(self):
        assert CompressionConfig(disable_max_pool=True).effective_gamma() == 1.0
        assert CompressionConfig(disable_mean_pool=True).effective_gamma() == 0.0
        assert CompressionConfig(score_mode="semantic_only").effective_lambda() == 1.0
        assert CompressionConfig(score_mode="lexical_only").effective_lambda() == 0.0


class TestSwitches:
    def test_selection_policies_run(self):
        for policy in ("full", "anchor_only", "flow_only", "flash_only"):
            cfg = small_config(budget=48, selection_policy=policy)
            r = compress(FILLER, "what about word3?", cfg)
            assert r.token_count <= 48

    def test_no_smooth_spans_match_page_edges(self):
        cfg = small_config(budget=64, disable_smoothing=True, page_size=8)
        text = " ".join(f"w{i}" for i in range(100))  # no sentence marks inside
        r = compress(text, "w3 w57?", cfg)
        for s in r.spans:
            assert (s.b - s.a + 1) <= 64

    def test_record_round_trip_json(self):
        r = compress(FILLER, "what about word3?", small_config(budget=64))
        rec = r.to_record("doc-1", emit_scores=True)
        encoded = json.dumps(rec)
        back = json.loads(encoded)
        assert back["id"] == "doc-1"
        assert back["token_count"] == r.token_count
        assert set(back["scores"]) == {"sem", "lex", "mixed"}
