"""Command-line interface.

Subcommands: compress (JSONL or plain text streaming), gen (synthetic cases),
ablate (variant sweep, CSV), bench (latency scaling, CSV). Exit codes:
0 success, 1 I/O error, 2 usage error, 3 data-format error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any

from .config import CompressionConfig, config_from_mapping
from .errors import ConfigurationError, InputFormatError
from .haystack import (
    VARIANT_PRESETS,
    ablation_run,
    gen_haystack,
    latency_bench,
    write_ablation_csv,
    write_bench_csv,
)
from .pipeline import Compressor

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3

_CONFIG_FLAGS = [
    # (flag, dest, type)
    ("--budget", "budget", int),
    ("--page-size", "page_size", int),
    ("--gamma", "gamma", float),
    ("--lambda", "lambda_", float),
    ("--k-anc", "k_anc", int),
    ("--w-flow", "w_flow", int),
    ("--implicit-query-window", "implicit_query_window", int),
    ("--dense-threshold", "dense_threshold", int),
    ("--embedding", "embedding", str),
    ("--tokenizer", "tokenizer", str),
    ("--selection-policy", "selection_policy", str),
    ("--score-mode", "score_mode", str),
]
_SWITCH_FLAGS = [
    ("--no-itf", "disable_itf"),
    ("--no-smooth", "disable_smoothing"),
    ("--no-max-pool", "disable_max_pool"),
    ("--no-mean-pool", "disable_mean_pool"),
]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    for flag, dest, typ in _CONFIG_FLAGS:
        p.add_argument(flag, dest=dest, type=typ, default=None)
    for flag, dest in _SWITCH_FLAGS:
        p.add_argument(flag, dest=dest, action="store_const", const=True, default=None)
    p.add_argument("--config", dest="config_file", default=None, help="JSON config file")


def _build_config(args: argparse.Namespace) -> CompressionConfig:
    file_values: dict[str, Any] = {}
    if getattr(args, "config_file", None):
        with open(args.config_file, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
    overrides = dict(file_values)
    for _, dest, _typ in _CONFIG_FLAGS:
        v = getattr(args, dest, None)
        if v is not None:
            overrides[dest] = v
    for _, dest in _SWITCH_FLAGS:
        v = getattr(args, dest, None)
        if v is not None:
            overrides[dest] = v
    return config_from_mapping(overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pagecomp")
    sub = parser.add_subparsers(dest="command", required=True)

    p_comp = sub.add_parser("compress", help="compress JSONL records or raw text")
    p_comp.add_argument("input", nargs="?", default="-", help="input path or - for stdin")
    _add_config_flags(p_comp)
    p_comp.add_argument("--format", dest="format", choices=("jsonl", "text"), default="jsonl")
    p_comp.add_argument("--emit-scores", action="store_true")
    p_comp.add_argument("--debug-pages", action="store_true")
    p_comp.add_argument("--jobs", type=int, default=None)
    p_comp.add_argument("--seed", type=int, default=0)

    p_gen = sub.add_parser("gen", help="generate synthetic haystack cases")
    p_gen.add_argument("--count", type=int, default=1)
    p_gen.add_argument("--length", type=int, default=16384)
    p_gen.add_argument("--needles", type=int, default=1)
    p_gen.add_argument("--kind", choices=("single", "multi", "freq"), default="single")
    p_gen.add_argument("--seed", type=int, default=0)

    p_abl = sub.add_parser("ablate", help="run configuration variants, report mean recall")
    _add_config_flags(p_abl)
    p_abl.add_argument("--variants", default="full", help="comma-separated preset names")
    p_abl.add_argument("--cases", type=int, default=50)
    p_abl.add_argument("--length", type=int, default=16384)
    p_abl.add_argument("--needles", type=int, default=1)
    p_abl.add_argument("--kind", choices=("single", "multi", "freq"), default="single")
    p_abl.add_argument("--seed", type=int, default=0)

    p_bench = sub.add_parser("bench", help="latency scaling across context lengths")
    _add_config_flags(p_bench)
    p_bench.add_argument("--lengths", default="8192,16384,32768,65536,131072")
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.add_argument("--seed", type=int, default=0)

    return parser


def _record_id(record: Any, index: int) -> str:
    if isinstance(record, dict) and isinstance(record.get("id"), str):
        return record["id"]
    return f"record-{index}"


def _process_record(
    line: str, index: int, compressor: Compressor, emit_scores: bool
) -> dict[str, Any]:
    record: Any = None
    try:
        record = json.loads(line)
        if not isinstance(record, dict):
            raise InputFormatError("record must be a JSON object")
        rid = _record_id(record, index)
        if compressor.config.tokenizer == "pretokenized":
            for key in ("ids", "offsets", "text"):
                if key not in record:
                    raise InputFormatError(f"pretokenized record missing {key!r}")
            if "query" in record and "query_ids" not in record:
                raise InputFormatError(
                    "pretokenized record with a query must carry query_ids"
                )
            result = compressor.compress_pretokenized(
                record["ids"],
                record["offsets"],
                record["text"],
                query_ids=record.get("query_ids"),
                query_text=record.get("query"),
            )
        else:
            context = record.get("context")
            if not isinstance(context, str):
                raise InputFormatError("record missing string field 'context'")
            query = record.get("query")
            if query is not None and not isinstance(query, str):
                raise InputFormatError("'query' must be a string when present")
            result = compressor.compress(context, query)
        return result.to_record(rid, emit_scores=emit_scores)
    except Exception as exc:  # per-record isolation: stream continues
        return {"id": _record_id(record, index), "error": str(exc)}


def _dump_pages(compressor: Compressor, record: dict[str, Any], out) -> None:
    from .paging import paginate, segment
    from .text import detect_boundaries, tokenize

    context = record.get("context")
    if not isinstance(context, str) or not context:
        return
    stream = tokenize(context)
    if len(stream) == 0:
        return
    table = paginate(
        segment(stream, detect_boundaries(stream, context)), compressor.config.page_size
    )
    for i in range(table.n_pages):
        a, b = table.page_span(i)
        pad = table.capacity - (b - a + 1)
        out.write(json.dumps({"page": i, "tokens": [a, b], "pad": pad}) + "\n")


def _cmd_compress(args: argparse.Namespace) -> int:
    config = _build_config(args)
    compressor = Compressor(config=config)

    if args.input == "-":
        data = sys.stdin.read()
    else:
        with open(args.input, "r", encoding="utf-8") as fh:
            data = fh.read()

    if args.format == "text":
        result = compressor.compress(data.rstrip("\n"), None)
        sys.stdout.write(result.compressed + "\n")
        return EXIT_OK

    lines = [ln for ln in data.splitlines() if ln.strip()]
    jobs = args.jobs or os.cpu_count() or 1
    if jobs > 1 and len(lines) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(
                pool.map(
                    lambda pair: _process_record(
                        pair[1], pair[0], compressor, args.emit_scores
                    ),
                    enumerate(lines),
                )
            )
    else:
        records = [
            _process_record(ln, i, compressor, args.emit_scores)
            for i, ln in enumerate(lines)
        ]
    for i, rec in enumerate(records):
        if args.debug_pages:
            try:
                _dump_pages(compressor, json.loads(lines[i]), sys.stderr)
            except (json.JSONDecodeError, TypeError):
                pass
        sys.stdout.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return EXIT_OK


def _cmd_gen(args: argparse.Namespace) -> int:
    for i in range(args.count):
        case = gen_haystack(
            seed=args.seed + i,
            length=args.length,
            needles=args.needles,
            kind=args.kind,
        )
        record = {
            "id": case.id,
            "context": case.context,
            "query": case.query,
            "gold_spans": [list(s) for s in case.gold_spans],
            "needles": case.needles,
            "kind": case.kind,
        }
        sys.stdout.write(json.dumps(record, ensure_ascii=False) + "\n")
    return EXIT_OK


def _cmd_ablate(args: argparse.Namespace) -> int:
    config = _build_config(args)
    names = [v.strip() for v in args.variants.split(",") if v.strip()]
    variants: dict[str, dict[str, Any]] = {}
    for name in names:
        if name not in VARIANT_PRESETS:
            raise ConfigurationError(
                f"unknown variant {name!r}; known: {', '.join(sorted(VARIANT_PRESETS))}"
            )
        variants[name] = VARIANT_PRESETS[name]
    cases = [
        gen_haystack(
            seed=args.seed + i, length=args.length, needles=args.needles, kind=args.kind
        )
        for i in range(args.cases)
    ]
    rows = ablation_run(config, variants, cases)
    write_ablation_csv(rows, sys.stdout)
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _build_config(args)
    try:
        lengths = sorted(int(x) for x in args.lengths.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigurationError(f"bad --lengths value: {exc}") from exc
    rows, fit = latency_bench(lengths, args.repeats, config, seed=args.seed)
    write_bench_csv(rows, fit, sys.stdout)
    return EXIT_OK


_COMMANDS = {
    "compress": _cmd_compress,
    "gen": _cmd_gen,
    "ablate": _cmd_ablate,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
