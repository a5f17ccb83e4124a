"""Command-line entry point.

Subcommands: fetch-wiki, score, estimate, mine, ngram-attr, synth,
report-dups. Option precedence is flags > environment (CUTOFFPROBE_*) >
config file (--config, flat JSON object) > built-in defaults. Data goes to
the declared output files, diagnostics to stderr; exit codes are stable:
2 config, 3 I/O, 4 provider, 5 degenerate series, 6 index format.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from . import __version__
from .bm25 import B_DEFAULT, K1_DEFAULT, Bm25Index, build_index
from .corpus import (
    bucket_stream,
    load_stream,
    load_timespan,
    save_stream,
    save_timespan,
)
from .cutoff import (
    EPSILON_DEFAULT,
    TRIM_FRAC_DEFAULT,
    estimate_cutoff,
    relative_curve,
)
from .errors import ConfigError, CutoffProbeError, DataError
from .mining import (
    EDIT_CHAR_CAP_DEFAULT,
    NGRAM_ORDER_DEFAULT,
    QUERY_WORDS_DEFAULT,
    THRESHOLD_DEFAULT,
    attribute_ngrams,
    attribute_versions,
    build_ngram_tables,
    duplicate_report,
    render_duplicate_report,
)
from .months import MonthStamp
from .outputs import (
    RunMeta,
    file_digest,
    read_curve_csv,
    read_records_jsonl,
    write_curve_csv,
    write_curve_svg,
    write_estimate_json,
    write_histogram_csv,
    write_records_jsonl,
    write_report_text,
)
from .scoring import (
    CountLmProvider,
    HttpProvider,
    ReplayProvider,
    ScoreCache,
    score_corpus,
)
from .synth import (
    DriftSpec,
    DumpSpec,
    dump_to_stream,
    generate_corpus,
    generate_dump,
    month_at,
    save_labels,
)
from .wiki import DEFAULT_ENDPOINT, fetch_wiki_revisions

ENV_PREFIX = "CUTOFFPROBE_"

_log = logging.getLogger("cutoffprobe")


@dataclass(frozen=True)
class Opt:
    name: str
    type: Callable = str
    default: object = None
    required: bool = False
    help: str = ""
    # Path-valued options are excluded from the echoed config so outputs stay
    # byte-identical across renames; inputs are identified by content digest.
    path: bool = False

    @property
    def key(self) -> str:
        return self.name.replace("-", "_")


def _coerce(opt: Opt, raw):
    if raw is None:
        return None
    try:
        if opt.type is str:
            return str(raw)
        if isinstance(raw, str) or not isinstance(raw, opt.type):
            return opt.type(raw)
        return raw
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for --{opt.name}: {raw!r} ({exc})") from exc


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return config


def resolve_options(
    opts: Sequence[Opt], args: argparse.Namespace, config: Mapping
) -> tuple[dict, dict]:
    """Apply the flags > environment > config file > defaults precedence.

    Returns the effective option dict plus the subset echoed into output
    metadata (everything that is not a filesystem path).
    """
    effective = {}
    echo = {}
    for opt in opts:
        raw = getattr(args, opt.key, None)
        if raw is None:
            env = os.environ.get(ENV_PREFIX + opt.key.upper())
            if env is not None:
                raw = env
            elif opt.key in config:
                raw = config[opt.key]
            else:
                raw = opt.default
        value = _coerce(opt, raw)
        if value is None and opt.required:
            raise ConfigError(f"missing required option --{opt.name}")
        effective[opt.key] = value
        if not opt.path:
            echo[opt.key] = value
    return effective, echo


def _jobs_default() -> int:
    return os.cpu_count() or 1


def _meta(command: str, cfg: Mapping, input_paths: Mapping[str, str | Path]) -> RunMeta:
    inputs = {}
    for name, path in input_paths.items():
        try:
            inputs[name] = file_digest(path)
        except OSError as exc:
            raise DataError(f"cannot read input {path}: {exc}") from exc
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(cfg.items())}
    return RunMeta(command=command, config=config, inputs=inputs)


def _header_line(meta: RunMeta) -> str:
    return json.dumps({"metadata": meta.as_dict()}, sort_keys=True)


def _parse_month(token: str, months: Sequence[MonthStamp] | None = None) -> MonthStamp:
    """A month flag value: absolute YYYY-MM or 1-based position in the span."""
    token = token.strip()
    if re.fullmatch(r"\d{4}-\d{2}", token):
        return MonthStamp.parse(token)
    try:
        position = int(token)
    except ValueError:
        raise ConfigError(f"not a month (YYYY-MM or position): {token!r}") from None
    if months is not None:
        if not 1 <= position <= len(months):
            raise ConfigError(f"month position {position} outside span of {len(months)} months")
        return months[position - 1]
    return month_at(position)


def _parse_month_map(text: str, value_type: Callable, what: str) -> dict[MonthStamp, object]:
    """Parse "6:0.8,18:0.2" style month->value maps."""
    out: dict[MonthStamp, object] = {}
    if not text:
        return out
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        month_tok, sep, value_tok = part.rpartition(":")
        if not sep:
            raise ConfigError(f"bad {what} entry {part!r}; expected MONTH:VALUE")
        try:
            value = value_type(value_tok)
        except ValueError as exc:
            raise ConfigError(f"bad {what} value in {part!r}: {exc}") from exc
        out[_parse_month(month_tok)] = value
    if not out:
        raise ConfigError(f"empty {what} specification: {text!r}")
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(cfg: dict, echo: dict) -> None:
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    drift = DriftSpec(
        topics=cfg["topics"],
        months=cfg["months"],
        tokens_per_doc=cfg["tokens_per_doc"],
        drift_rate=cfg["drift_rate"],
        vocab_size=cfg["vocab_size"],
        seed=cfg["seed"],
    )
    mixture = _parse_month_map(cfg["mixture"], float, "mixture")
    duplication = _parse_month_map(cfg["duplication"] or "", int, "duplication")
    dump_spec = DumpSpec(
        mixture=mixture,
        docs=cfg["docs"],
        seed=cfg["dump_seed"],
        duplication={m: int(v) for m, v in duplication.items()},
    )
    corpus = generate_corpus(drift)
    dump = generate_dump(corpus, dump_spec)
    meta = _meta("synth", echo, {})
    header = _header_line(meta)
    save_timespan(corpus, out_dir / "corpus.jsonl", header_line=header)
    save_stream(dump_to_stream(dump, corpus.span[1]), out_dir / "dump.jsonl", header_line=header)
    save_labels(dump, out_dir / "labels.jsonl", header_line=header)
    _log.info("wrote %s, %s, %s", out_dir / "corpus.jsonl", out_dir / "dump.jsonl",
              out_dir / "labels.jsonl")


def _sniff_kind(path: Path) -> str:
    try:
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                if isinstance(rec, dict) and set(rec) == {"metadata"}:
                    continue
                if "topic_id" in rec:
                    return "versioned"
                if "doc_id" in rec:
                    return "stream"
                break
    except OSError as exc:
        raise DataError(f"cannot read corpus {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed first record: {exc}") from exc
    raise DataError(f"{path}: records match no known corpus wire format")


def _make_provider(spec: str):
    """provider spec: replay:<file> | http:<base-url> | countlm:<dump>:<n>:<alpha>"""
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise ConfigError(f"bad provider spec {spec!r}")
    if kind == "replay":
        return ReplayProvider(rest), {"provider_file": rest}
    if kind == "http":
        base = "http:" + rest if rest.startswith("//") else rest
        if not base:
            raise ConfigError("http provider needs a base URL")
        return HttpProvider(base), {}
    if kind == "countlm":
        parts = rest.rsplit(":", 2)
        if len(parts) != 3:
            raise ConfigError(
                f"countlm provider spec must be countlm:<dump-file>:<n>:<alpha>, got {spec!r}"
            )
        train_path, n_tok, alpha_tok = parts
        try:
            n, alpha = int(n_tok), float(alpha_tok)
        except ValueError as exc:
            raise ConfigError(f"bad countlm parameters in {spec!r}: {exc}") from exc
        train_docs = [d.text for d in load_stream(train_path)]
        return CountLmProvider(train_docs, n=n, alpha=alpha), {"provider_file": train_path}
    raise ConfigError(f"unknown provider kind {kind!r} in {spec!r}")


def cmd_score(cfg: dict, echo: dict) -> None:
    corpus_path = Path(cfg["corpus"])
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    kind = _sniff_kind(corpus_path)
    max_tokens = cfg["max_tokens"]
    if max_tokens is None:
        max_tokens = 512 if kind == "versioned" else 256
        cfg = dict(cfg, max_tokens=max_tokens)
        echo = dict(echo, max_tokens=max_tokens)
    if kind == "versioned":
        corpus = load_timespan(corpus_path)
    else:
        docs = load_stream(corpus_path)
        target = cfg["bucket_target"] or max(len(docs), 1)
        corpus = bucket_stream(docs, target=target, seed=cfg["bucket_seed"])
    provider, provider_inputs = _make_provider(cfg["provider"])
    cache = ScoreCache(cfg["cache"]) if cfg["cache"] else None
    series = score_corpus(
        provider,
        corpus,
        max_tokens,
        cache=cache,
        jobs=cfg["jobs"],
        retries=cfg["retries"],
        backoff=cfg["backoff"],
        missing_threshold=cfg["missing_threshold"],
    )
    curve = relative_curve(series, cfg["trim_frac"])
    estimate = estimate_cutoff(curve, cfg["epsilon"])
    inputs = {"corpus": corpus_path, **{k: Path(v) for k, v in provider_inputs.items()}}
    meta = _meta("score", echo, inputs)
    write_curve_csv(out_dir / "curve.csv", series, curve, cfg["trim_frac"], meta)
    write_estimate_json(out_dir / "estimate.json", estimate, meta)
    if cfg["svg"]:
        write_curve_svg(cfg["svg"], curve, estimate, meta)
    print(
        json.dumps(
            {
                "argmin_month": str(estimate.argmin_month),
                "band": [str(m) for m in estimate.band],
                "epsilon": estimate.epsilon,
            },
            sort_keys=True,
        )
    )


def cmd_estimate(cfg: dict, echo: dict) -> None:
    curve_path = Path(cfg["curve"])
    curve = read_curve_csv(curve_path)
    estimate = estimate_cutoff(curve, cfg["epsilon"])
    meta = _meta("estimate", echo, {"curve": curve_path})
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    write_estimate_json(out, estimate, meta)
    if cfg["svg"]:
        write_curve_svg(cfg["svg"], curve, estimate, meta)
    print(
        json.dumps(
            {
                "argmin_month": str(estimate.argmin_month),
                "band": [str(m) for m in estimate.band],
                "epsilon": estimate.epsilon,
            },
            sort_keys=True,
        )
    )


def _load_or_build_index(
    dump_path: Path, dump_docs, index_dir: Path, k1: float, b: float, jobs: int
) -> Bm25Index:
    dump_digest = file_digest(dump_path)
    if (index_dir / "manifest.json").exists():
        index = Bm25Index.load(index_dir)
        if (
            index.metadata.get("source_sha256") == dump_digest
            and index.k1 == k1
            and index.b == b
        ):
            _log.info("reusing persisted index at %s", index_dir)
            return index
        _log.info("persisted index at %s is stale; rebuilding", index_dir)
    index = build_index(
        ((d.doc_id, d.text) for d in dump_docs),
        k1=k1,
        b=b,
        jobs=jobs,
        metadata={"source_sha256": dump_digest},
    )
    index.save(index_dir)
    return index


def cmd_mine(cfg: dict, echo: dict) -> None:
    corpus_path, dump_path = Path(cfg["corpus"]), Path(cfg["dump"])
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = load_timespan(corpus_path)
    dump_docs = load_stream(dump_path)
    texts = {d.doc_id: d.text for d in dump_docs}
    query_month = _parse_month(cfg["query_month"], corpus.months)
    echo = dict(echo, query_month=str(query_month))
    index_dir = Path(cfg["index_dir"]) if cfg["index_dir"] else out_dir / "index"
    index = _load_or_build_index(dump_path, dump_docs, index_dir, cfg["k1"], cfg["b"], cfg["jobs"])
    histogram, records = attribute_versions(
        index,
        texts,
        corpus,
        query_month,
        k=cfg["k"],
        threshold=cfg["threshold"],
        query_words=cfg["query_words"],
        char_cap=cfg["char_cap"],
    )
    report = duplicate_report(records, texts, threshold=cfg["threshold"], char_cap=cfg["char_cap"])
    meta = _meta("mine", echo, {"corpus": corpus_path, "dump": dump_path})
    credit = {m: histogram.counts.get(m, 0) for m in corpus.months}
    write_histogram_csv(out_dir / "histogram.csv", credit, meta)
    write_records_jsonl(out_dir / "records.jsonl", records, meta)
    write_report_text(out_dir / "duplicates.txt", render_duplicate_report(report), meta)
    _log.info(
        "attributed %d accepted matches over %d records", histogram.total_matches, len(records)
    )


def cmd_ngram_attr(cfg: dict, echo: dict) -> None:
    corpus_path, dump_path = Path(cfg["corpus"]), Path(cfg["dump"])
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = load_timespan(corpus_path)
    dump_docs = load_stream(dump_path)
    tables = build_ngram_tables(corpus, n=cfg["n"])
    totals: dict[MonthStamp, int] = {m: 0 for m in corpus.months}
    for doc in dump_docs:
        for month, credit in attribute_ngrams(tables, doc.text, cfg["prefix_words"]).items():
            totals[month] += credit
    meta = _meta("ngram-attr", echo, {"corpus": corpus_path, "dump": dump_path})
    write_histogram_csv(out_dir / "ngram_credit.csv", totals, meta)


def cmd_report_dups(cfg: dict, echo: dict) -> None:
    records_path, dump_path = Path(cfg["records"]), Path(cfg["dump"])
    records = read_records_jsonl(records_path)
    texts = {d.doc_id: d.text for d in load_stream(dump_path)}
    report = duplicate_report(records, texts, threshold=cfg["threshold"], char_cap=cfg["char_cap"])
    meta = _meta("report-dups", echo, {"records": records_path, "dump": dump_path})
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    write_report_text(out, render_duplicate_report(report), meta)


def cmd_fetch_wiki(cfg: dict, echo: dict) -> None:
    titles: list[str] = []
    if cfg["titles"]:
        titles.extend(t.strip() for t in cfg["titles"].split(",") if t.strip())
    if cfg["titles_file"]:
        try:
            lines = Path(cfg["titles_file"]).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise DataError(f"cannot read titles file: {exc}") from exc
        titles.extend(t.strip() for t in lines if t.strip())
    span = (MonthStamp.parse(cfg["start"]), MonthStamp.parse(cfg["end"]))
    if span[1] < span[0]:
        raise ConfigError(f"span ends before it starts: {span[0]}..{span[1]}")
    corpus = fetch_wiki_revisions(
        titles,
        span,
        endpoint=cfg["endpoint"],
        retries=cfg["retries"],
        backoff=cfg["backoff"],
        jobs=cfg["jobs"],
    )
    meta = _meta("fetch-wiki", echo, {})
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_timespan(corpus, out, header_line=_header_line(meta))
    _log.info("fetched %d topics x %d months", len(corpus.topics), len(corpus.months))


# ---------------------------------------------------------------------------
# parser wiring

_COMMON = [
    Opt("config", str, help="JSON config file overlaid under flags and environment"),
]

_COMMANDS: dict[str, tuple[Callable[[dict], None], list[Opt], str]] = {
    "synth": (
        cmd_synth,
        [
            Opt("topics", int, 50),
            Opt("months", int, 24),
            Opt("tokens-per-doc", int, 400),
            Opt("drift-rate", float, 0.05),
            Opt("vocab-size", int, 2000),
            Opt("seed", int, 0),
            Opt("docs", int, 400),
            Opt("mixture", str, required=True, help="MONTH:PROB pairs, e.g. 6:0.8,18:0.2"),
            Opt("duplication", str, "", help="MONTH:FACTOR pairs, e.g. 6:3"),
            Opt("dump-seed", int, 1),
            Opt("out-dir", str, required=True, path=True),
        ],
        "generate a synthetic versioned corpus plus a labeled training dump",
    ),
    "score": (
        cmd_score,
        [
            Opt("corpus", str, required=True, path=True),
            Opt("provider", str, required=True,
                help="replay:<file> | http:<base-url> | countlm:<dump>:<n>:<alpha>"),
            Opt("max-tokens", int, help="default 512 for versioned corpora, 256 for streams"),
            Opt("cache", str, path=True, help="append-only score cache for resumable runs"),
            Opt("trim-frac", float, TRIM_FRAC_DEFAULT),
            Opt("epsilon", float, EPSILON_DEFAULT),
            Opt("bucket-target", int, help="per-month cap when scoring a stream corpus"),
            Opt("bucket-seed", int, 0),
            Opt("retries", int, 3),
            Opt("backoff", float, 0.5),
            Opt("missing-threshold", float, 0.5),
            Opt("jobs", int, _jobs_default()),
            Opt("svg", str, path=True, help="also write an SVG chart of the relative curve"),
            Opt("out-dir", str, required=True, path=True),
        ],
        "measure per-month perplexities and estimate the effective cutoff",
    ),
    "estimate": (
        cmd_estimate,
        [
            Opt("curve", str, required=True, path=True, help="curve CSV produced by `score`"),
            Opt("epsilon", float, EPSILON_DEFAULT),
            Opt("svg", str, path=True),
            Opt("out", str, required=True, path=True),
        ],
        "re-derive the cutoff estimate from an existing curve CSV",
    ),
    "mine": (
        cmd_mine,
        [
            Opt("corpus", str, required=True, path=True),
            Opt("dump", str, required=True, path=True),
            Opt("query-month", str, required=True, help="YYYY-MM or 1-based span position"),
            Opt("k", int, 10),
            Opt("threshold", float, THRESHOLD_DEFAULT),
            Opt("query-words", int, QUERY_WORDS_DEFAULT),
            Opt("char-cap", int, EDIT_CHAR_CAP_DEFAULT),
            Opt("k1", float, K1_DEFAULT),
            Opt("b", float, B_DEFAULT),
            Opt("index-dir", str, path=True, help="defaults to <out-dir>/index; reused when fresh"),
            Opt("jobs", int, _jobs_default()),
            Opt("out-dir", str, required=True, path=True),
        ],
        "retrieve dump documents per topic and attribute them to closest versions",
    ),
    "ngram-attr": (
        cmd_ngram_attr,
        [
            Opt("corpus", str, required=True, path=True),
            Opt("dump", str, required=True, path=True),
            Opt("n", int, NGRAM_ORDER_DEFAULT),
            Opt("prefix-words", int, QUERY_WORDS_DEFAULT),
            Opt("out-dir", str, required=True, path=True),
        ],
        "attribute dump documents to months by discounted n-gram overlap",
    ),
    "report-dups": (
        cmd_report_dups,
        [
            Opt("records", str, required=True, path=True, help="records.jsonl produced by `mine`"),
            Opt("dump", str, required=True, path=True),
            Opt("threshold", float, THRESHOLD_DEFAULT),
            Opt("char-cap", int, EDIT_CHAR_CAP_DEFAULT),
            Opt("out", str, required=True, path=True),
        ],
        "report exact and near duplicates among accepted matches",
    ),
    "fetch-wiki": (
        cmd_fetch_wiki,
        [
            Opt("titles", str, help="comma-separated article titles"),
            Opt("titles-file", str, path=True, help="file with one title per line"),
            Opt("start", str, required=True, help="first month, YYYY-MM"),
            Opt("end", str, required=True, help="last month, YYYY-MM"),
            Opt("endpoint", str, DEFAULT_ENDPOINT),
            Opt("retries", int, 3),
            Opt("backoff", float, 0.5),
            Opt("jobs", int, 4),
            Opt("out", str, required=True, path=True),
        ],
        "build a versioned corpus from live MediaWiki revision history",
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutoffprobe",
        description="Effective knowledge-cutoff probing and version attribution.",
    )
    parser.add_argument("--version", action="version", version=f"cutoffprobe {__version__}")
    sub = parser.add_subparsers(dest="command")
    for name, (handler, opts, help_text) in _COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        for opt in _COMMON + opts:
            sp.add_argument(f"--{opt.name}", default=None, help=opt.help, dest=opt.key)
        sp.add_argument("-v", "--verbose", action="count", default=0)
        sp.set_defaults(handler=handler, opt_specs=opts)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "handler", None) is None:
        parser.print_help(sys.stderr)
        return 2
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s: %(message)s")
    try:
        config = _load_config(args.config)
        cfg, echo = resolve_options(args.opt_specs, args, config)
        args.handler(cfg, echo)
    except CutoffProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
