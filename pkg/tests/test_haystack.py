import io

import pytest

from pagecomp.config import CompressionConfig
from pagecomp.errors import ConfigurationError, GenerationError
from pagecomp.haystack import (
    VARIANT_PRESETS,
    ablation_run,
    gen_haystack,
    latency_bench,
    needle_recall,
    write_ablation_csv,
    write_bench_csv,
)
from pagecomp.plan import Span, SpanSet
from pagecomp.text import tokenize


def cfg(**kw) -> CompressionConfig:
    base = dict(budget=400, embedding="hash:32:0")
    base.update(kw)
    return CompressionConfig(**base)


class TestGenerator:
    def test_deterministic(self):
        a = gen_haystack(seed=5, length=600, needles=1, kind="single")
        b = gen_haystack(seed=5, length=600, needles=1, kind="single")
        assert a == b

    def test_seed_changes_case(self):
        a = gen_haystack(seed=5, length=600)
        b = gen_haystack(seed=6, length=600)
        assert a.context != b.context

    def test_gold_span_marks_needle_sentence(self):
        case = gen_haystack(seed=1, length=800, needles=1, kind="single")
        stream = tokenize(case.context)
        assert len(stream) >= 800
        (a, b) = case.gold_spans[0]
        raw = case.context.encode("utf-8")
        sentence = raw[stream.offsets[a, 0] : stream.offsets[b, 1]].decode()
        assert sentence.startswith("The secret code for ")
        assert sentence.endswith(".")
        key = sentence.split()[4]
        assert key in case.query

    def test_multi_disjoint_gold_spans(self):
        case = gen_haystack(seed=2, length=2000, needles=4, kind="multi")
        assert len(case.gold_spans) == 4
        for (a1, b1), (a2, b2) in zip(case.gold_spans, case.gold_spans[1:]):
            assert b1 < a2

    def test_needle_key_absent_from_filler(self):
        case = gen_haystack(seed=3, length=600)
        stream = tokenize(case.context)
        (a, b) = case.gold_spans[0]
        raw = case.context.encode("utf-8")
        needle = raw[stream.offsets[a, 0] : stream.offsets[b, 1]].decode()
        key = needle.split()[4]
        outside = case.context.replace(needle, "")
        assert key not in outside

    def test_interior_depth(self):
        case = gen_haystack(seed=4, length=2000)
        stream_len = len(tokenize(case.context))
        (a, b) = case.gold_spans[0]
        assert a > stream_len * 0.05
        assert b < stream_len * 0.95

    def test_freq_kind(self):
        case = gen_haystack(seed=5, length=900, needles=2, kind="freq")
        assert len(case.gold_spans) >= 8
        assert "special word" in case.context

    def test_too_short(self):
        with pytest.raises(GenerationError):
            gen_haystack(seed=0, length=100)

    def test_too_many_needles(self):
        with pytest.raises(GenerationError):
            gen_haystack(seed=0, length=300, needles=200, kind="multi")

    def test_unknown_kind(self):
        with pytest.raises(GenerationError):
            gen_haystack(seed=0, length=300, kind="bogus")


class TestRecall:
    def test_full_coverage(self):
        spans = SpanSet(spans=(Span(0, 100, "anchor", 1.0),))
        assert needle_recall(spans, [(10, 20)]) == 1.0

    def test_half_coverage(self):
        spans = [(0, 10), (40, 50)]
        gold = [(0, 5), (45, 48), (70, 80), (90, 95)]
        assert needle_recall(spans, gold) == 0.5

    def test_empty_result(self):
        assert needle_recall([], [(0, 5)]) == 0.0

    def test_partial_cover_does_not_count(self):
        assert needle_recall([(0, 4)], [(3, 6)]) == 0.0

    def test_adjacent_spans_union(self):
        assert needle_recall([(0, 4), (5, 9)], [(3, 7)]) == 1.0

    def test_monotone_in_result_spans(self):
        gold = [(5, 8), (20, 25), (40, 44)]
        spans: list[tuple[int, int]] = []
        prev = needle_recall(spans, gold)
        for extra in [(5, 8), (19, 26), (0, 3)]:
            spans.append(extra)
            cur = needle_recall(spans, gold)
            assert cur >= prev
            prev = cur


class TestAblation:
    def test_rows_and_determinism(self):
        cases = [gen_haystack(seed=i, length=600) for i in range(4)]
        variants = {k: VARIANT_PRESETS[k] for k in ("full", "anchor_only")}
        rows1 = ablation_run(cfg(), variants, cases)
        rows2 = ablation_run(cfg(), variants, cases)
        assert rows1 == rows2
        assert [r.variant for r in rows1] == ["full", "anchor_only"]
        assert all(r.cases == 4 for r in rows1)

    def test_empty_variants_base_row(self):
        cases = [gen_haystack(seed=0, length=600)]
        rows = ablation_run(cfg(), {}, cases)
        assert len(rows) == 1
        assert rows[0].variant == "base"

    def test_unknown_switch_rejected(self):
        cases = [gen_haystack(seed=0, length=600)]
        with pytest.raises(ConfigurationError):
            ablation_run(cfg(), {"bad": {"no_such_field": True}}, cases)

    def test_lambda_sweep(self):
        cases = [gen_haystack(seed=i, length=600) for i in range(2)]
        variants = {f"lam{v}": {"lambda_": v} for v in (0.0, 0.7, 1.0)}
        rows = ablation_run(cfg(), variants, cases)
        assert len(rows) == 3

    def test_csv_format(self):
        cases = [gen_haystack(seed=0, length=600)]
        rows = ablation_run(cfg(), {"full": {}}, cases)
        buf = io.StringIO()
        write_ablation_csv(rows, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "variant,mean_recall,cases"
        assert lines[1].startswith("full,")


class TestBench:
    def test_rows_and_fit(self):
        rows, fit = latency_bench([512, 1024, 2048], repeats=3, config=cfg())
        assert [r.context_len for r in rows] == [512, 1024, 2048]
        assert all(r.wall_time > 0 for r in rows)
        assert fit is not None
        assert fit.slope > 0

    def test_single_length_fit_omitted(self):
        rows, fit = latency_bench([512], repeats=3, config=cfg())
        assert len(rows) == 1
        assert fit is None

    def test_csv_trailing_fit_comment(self):
        rows, fit = latency_bench([512, 1024], repeats=3, config=cfg())
        buf = io.StringIO()
        write_bench_csv(rows, fit, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "context_len,median_s,ratio"
        assert lines[-1].startswith("# fit slope=")

    def test_bad_repeats(self):
        with pytest.raises(GenerationError):
            latency_bench([512], repeats=0, config=cfg())
