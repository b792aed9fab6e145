"""Synthetic needle-in-a-haystack evaluation harness.

Cases are built from a fixed pool of 64 filler templates with seeded noun
substitution, one needle sentence per hidden key-value fact, and a query
asking for the value(s). Needles are placed at interior depths (10-90% of the
document) and carry 8-character alphanumeric keys absent from the filler, so
the lexical branch has exact-match signal and hash embeddings give the
needle page a distinct vector. Gold spans are the needle sentences' token
intervals; recall is the fraction of gold spans fully covered by the
compressor's output spans.
"""

from __future__ import annotations

import bisect
import random
import string
import time
from dataclasses import dataclass
from itertools import product
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .config import CompressionConfig, config_from_mapping
from .errors import GenerationError
from .pipeline import Compressor
from .plan import Span, SpanSet
from .text import tokenize

_SUBJECTS = (
    "The {n0} beside the {n1}",
    "A {n0} from the {n1}",
    "That {n0} behind the {n1}",
    "Every {n0} across the {n1}",
)
_VERBS = (
    "quietly watched the {n2}",
    "slowly circled the {n2}",
    "carefully measured the {n2}",
    "finally reached the {n2}",
)
_TAILS = (
    "before the morning meeting started.",
    "while the rain kept falling outside.",
    "as the committee reviewed its notes.",
    "after the last train had departed.",
)
# 4 x 4 x 4 = 64 fixed templates.
FILLER_TEMPLATES = tuple(f"{s} {v} {t}" for s, v, t in product(_SUBJECTS, _VERBS, _TAILS))

_NOUNS = (
    "garden", "harbor", "library", "mountain", "village", "river", "market",
    "bridge", "orchard", "station", "museum", "valley", "forest", "window",
    "engine", "lantern", "meadow", "signal", "tower", "archive", "canal",
    "workshop", "courtyard", "granary",
)

_KINDS = ("single", "multi", "freq")
_DEPTH_LO = 0.10
_DEPTH_HI = 0.90

# Named configuration deltas for the ablation runner and the CLI.
VARIANT_PRESETS: dict[str, dict[str, Any]] = {
    "full": {},
    "no_max_pool": {"disable_max_pool": True},
    "no_mean_pool": {"disable_mean_pool": True},
    "no_itf": {"disable_itf": True},
    "no_smooth": {"disable_smoothing": True},
    "semantic_only": {"score_mode": "semantic_only"},
    "lexical_only": {"score_mode": "lexical_only"},
    "anchor_only": {"selection_policy": "anchor_only"},
    "flow_only": {"selection_policy": "flow_only"},
    "flash_only": {"selection_policy": "flash_only"},
    "page32": {"page_size": 32},
    "page128": {"page_size": 128},
}


@dataclass(frozen=True)
class HaystackCase:
    id: str
    context: str
    query: str
    gold_spans: tuple[tuple[int, int], ...]
    needles: int
    kind: str


@dataclass(frozen=True)
class BenchRow:
    context_len: int
    wall_time: float
    token_count_out: int
    ratio: float


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class AblationRow:
    variant: str
    mean_recall: float
    cases: int


def _alnum(rng: random.Random, length: int = 8) -> str:
    pool = string.ascii_lowercase + string.digits
    return "".join(rng.choice(pool) for _ in range(length))


def _filler_sentence(rng: random.Random, slot: int) -> str:
    template = FILLER_TEMPLATES[slot % len(FILLER_TEMPLATES)]
    return template.format(
        n0=rng.choice(_NOUNS), n1=rng.choice(_NOUNS), n2=rng.choice(_NOUNS)
    )


def gen_haystack(
    seed: int, length: int, needles: int = 1, kind: str = "single"
) -> HaystackCase:
    """Deterministic synthetic case of roughly `length` tokens."""
    if length < 256:
        raise GenerationError(f"length must be >= 256 tokens, got {length}")
    if needles < 1:
        raise GenerationError(f"needles must be >= 1, got {needles}")
    if kind not in _KINDS:
        raise GenerationError(f"kind must be one of {_KINDS}, got {kind!r}")
    if kind == "single" and needles != 1:
        raise GenerationError("kind 'single' requires exactly one needle")

    rng = random.Random(seed)

    sentences: list[str] = []
    counts: list[int] = []
    total = 0
    slot = 0
    while total < length:
        s = _filler_sentence(rng, slot)
        sentences.append(s)
        counts.append(len(tokenize(s)))
        total += counts[-1]
        slot += 1

    lo = max(1, int(len(sentences) * _DEPTH_LO))
    hi = int(len(sentences) * _DEPTH_HI)
    if kind == "freq":
        planted = max(needles, 8)
    else:
        planted = needles
    if hi - lo < planted:
        raise GenerationError(
            f"cannot place {planted} needles in {len(sentences)} sentences"
        )
    positions = sorted(rng.sample(range(lo, hi), planted))

    def plant(pos: int, sentence: str) -> None:
        nonlocal total
        total -= counts[pos]
        sentences[pos] = sentence
        counts[pos] = len(tokenize(sentence))
        total += counts[pos]

    if kind == "freq":
        word = _alnum(rng)
        for pos in positions:
            plant(
                pos,
                f"Remember that the special word {word} appears near the {rng.choice(_NOUNS)} again.",
            )
        query = "Which special word appears most often in the passage?"
    else:
        keys: list[str] = []
        while len(keys) < needles:
            k = _alnum(rng)
            if k not in keys:
                keys.append(k)
        values = [_alnum(rng) for _ in range(needles)]
        for pos, key, value in zip(positions, keys, values):
            plant(pos, f"The secret code for {key} is {value}.")
        if needles == 1:
            query = f"What is the secret code for {keys[0]}?"
        else:
            listed = ", ".join(keys[:-1]) + " and " + keys[-1]
            query = f"What are the secret codes for {listed}?"

    # Replacing fillers with shorter needles may undershoot; pad at the end so
    # earlier token spans stay put.
    while total < length:
        s = _filler_sentence(rng, slot)
        sentences.append(s)
        counts.append(len(tokenize(s)))
        total += counts[-1]
        slot += 1

    gold_spans: list[tuple[int, int]] = []
    running = 0
    wanted = set(positions)
    for i, c in enumerate(counts):
        if i in wanted:
            gold_spans.append((running, running + c - 1))
        running += c

    return HaystackCase(
        id=f"{kind}-{seed}-{length}-{needles}",
        context="\n".join(sentences),
        query=query,
        gold_spans=tuple(gold_spans),
        needles=needles,
        kind=kind,
    )


def _merged_intervals(spans: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    ordered = sorted(spans)
    out: list[tuple[int, int]] = []
    for a, b in ordered:
        if out and a <= out[-1][1] + 1:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def needle_recall(
    result_spans: SpanSet | Sequence[Span] | Sequence[tuple[int, int]],
    gold_spans: Sequence[tuple[int, int]],
) -> float:
    """Fraction of gold spans fully covered by the union of result spans."""
    if not gold_spans:
        return 1.0
    if isinstance(result_spans, SpanSet):
        intervals = [(s.a, s.b) for s in result_spans.spans]
    else:
        intervals = [
            (s.a, s.b) if isinstance(s, Span) else (int(s[0]), int(s[1]))
            for s in result_spans
        ]
    merged = _merged_intervals(intervals)
    starts = [a for a, _ in merged]
    covered = 0
    for ga, gb in gold_spans:
        i = bisect.bisect_right(starts, ga) - 1
        if i >= 0 and merged[i][1] >= gb:
            covered += 1
    return covered / len(gold_spans)


def run_case(case: HaystackCase, compressor: Compressor) -> float:
    result = compressor.compress(case.context, case.query)
    return needle_recall(result.spans, case.gold_spans)


def ablation_run(
    base_config: CompressionConfig,
    variants: Mapping[str, Mapping[str, Any]],
    cases: Sequence[HaystackCase],
    provider=None,
) -> list[AblationRow]:
    """Mean recall per configuration variant; a variant is a dict of config
    field overrides (unknown fields raise a configuration error). With no
    variants only the base row is reported."""
    named: dict[str, CompressionConfig] = {"base": base_config}
    if variants:
        named = {
            name: config_from_mapping(delta, base=base_config)
            for name, delta in variants.items()
        }
    rows: list[AblationRow] = []
    for name, cfg in named.items():
        comp = Compressor(config=cfg, provider=provider)
        recalls = [run_case(c, comp) for c in sorted(cases, key=lambda c: c.id)]
        rows.append(
            AblationRow(
                variant=name,
                mean_recall=float(np.mean(recalls)) if recalls else 0.0,
                cases=len(recalls),
            )
        )
    return rows


def latency_bench(
    lengths: Sequence[int],
    repeats: int,
    config: CompressionConfig,
    seed: int = 0,
) -> tuple[list[BenchRow], LinearFit | None]:
    """Median compression wall time per context length. Case generation and
    I/O sit outside the timed section."""
    if repeats < 1:
        raise GenerationError(f"repeats must be >= 1, got {repeats}")
    comp = Compressor(config=config)
    rows: list[BenchRow] = []
    for length in lengths:
        case = gen_haystack(seed=seed, length=length, needles=1, kind="single")
        times = []
        token_count = 0
        ratio = 0.0
        for _ in range(repeats):
            t0 = time.perf_counter()
            result = comp.compress(case.context, case.query)
            times.append(time.perf_counter() - t0)
            token_count = result.token_count
            ratio = result.ratio or 0.0
        rows.append(
            BenchRow(
                context_len=length,
                wall_time=float(np.median(times)),
                token_count_out=token_count,
                ratio=float(ratio),
            )
        )
    fit = None
    if len(rows) >= 2:
        xs = np.asarray([r.context_len for r in rows], dtype=np.float64)
        ys = np.asarray([r.wall_time for r in rows], dtype=np.float64)
        slope, intercept = np.polyfit(xs, ys, 1)
        pred = slope * xs + intercept
        ss_res = float(((ys - pred) ** 2).sum())
        ss_tot = float(((ys - ys.mean()) ** 2).sum())
        r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
        fit = LinearFit(slope=float(slope), intercept=float(intercept), r2=r2)
    return rows, fit


def write_ablation_csv(rows: Sequence[AblationRow], fp) -> None:
    fp.write("variant,mean_recall,cases\n")
    for r in rows:
        fp.write(f"{r.variant},{r.mean_recall:.6f},{r.cases}\n")


def write_bench_csv(rows: Sequence[BenchRow], fit: LinearFit | None, fp) -> None:
    fp.write("context_len,median_s,ratio\n")
    for r in rows:
        fp.write(f"{r.context_len},{r.wall_time:.6f},{r.ratio:.4f}\n")
    if fit is not None:
        fp.write(f"# fit slope={fit.slope:.6g} intercept={fit.intercept:.6g} r2={fit.r2:.4f}\n")
