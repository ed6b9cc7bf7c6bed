"""ngviz command line: fingerprint, analyze, synth, chart, split.

Exit codes: 0 clean, 1 usage error, 2 input error, 3 detection.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

from pydantic import ValidationError

from src.core.charts import render_delta_chart, render_rank_chart
from src.core.errors import NgvizError, OrderMismatch
from src.core.names import QueryName
from src.core.ngrams import build_fingerprint, build_table, load_fingerprint, save_fingerprint
from src.core.pcap import read_input, records_from_names, skip_summary, write_domain_list, write_pcap
from src.core.scoring import MatchParams
from src.core.segments import split
from src.core.synth import SynthConfig, gen_legit, gen_random, gen_repeated_label, gen_tunnel
from src.pipeline.graph import run_pipeline, safe_name
from src.pipeline.schemas import RunConfig

log = logging.getLogger("ngviz")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_DETECTED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse's default exit status is 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _err(message: str) -> None:
    print(f"ngviz: {message}", file=sys.stderr)


def _load_fp(path: Path):
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return load_fingerprint(fh, default_label=Path(path).name)


def _read_all(paths: Sequence[Path]):
    records = []
    for path in paths:
        got, stats = read_input(path)
        log.info("%s: %s", path, skip_summary(stats))
        records.extend(got)
    return records


# ---------- subcommands ----------
def cmd_fingerprint(args: argparse.Namespace) -> int:
    records = _read_all(args.inputs)
    label = args.label or ",".join(Path(p).name for p in args.inputs)
    fp = build_fingerprint(records, source_label=label, n=args.n, dedup=args.dedup, scope=args.scope)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="\n") as fh:
        save_fingerprint(fp, fh)
    print(f"k={fp.table.k} total={fp.table.total}", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    config = RunConfig(
        inputs=args.inputs,
        fingerprint=args.fingerprint,
        n=args.n,
        dedup=args.dedup,
        scope=args.scope,
        split=args.split_by,
        window=args.window,
        params=MatchParams(a=args.a, b=args.b, x=args.x, y=args.y),
        threshold=args.threshold,
        sort=args.sort,
        format=args.format,
        chart_dir=args.chart_dir,
        top_k=args.top_k,
    )
    state = run_pipeline(config)

    if args.verbose:
        for entry in state["log"]:
            print(json.dumps(entry, sort_keys=True), file=sys.stderr)
    if state["error"]:
        _err(state["error"])
        return EXIT_USAGE

    if args.out:
        Path(args.out).write_bytes(state["report"])
    else:
        sys.stdout.flush()
        sys.stdout.buffer.write(state["report"])
        sys.stdout.buffer.flush()

    if config.chart_dir is not None:
        config.chart_dir.mkdir(parents=True, exist_ok=True)
        for name, svg in state["charts"].items():
            (config.chart_dir / name).write_text(svg, encoding="utf-8")

    flagged = [s for s in state["ranked"] if s.flagged]
    if flagged:
        log.info("%d of %d segments below threshold %.2f", len(flagged), len(state["ranked"]), config.threshold)
        return EXIT_DETECTED
    return EXIT_OK


def _synth_names(args: argparse.Namespace, config: SynthConfig) -> Iterator[QueryName]:
    if args.kind == "legit":
        return gen_legit(config.seed, config.count)
    if args.kind == "random":
        return gen_random(config)
    if args.kind == "repeated":
        return gen_repeated_label(config, args.label)
    return gen_tunnel(config)


def cmd_synth(args: argparse.Namespace) -> int:
    fields = {
        "seed": args.seed,
        "count": args.count,
        "encoding": args.encoding,
        "padding": args.padding,
    }
    # unset flags fall back to the model defaults
    for name in ("apex", "label_len", "labels"):
        value = getattr(args, name)
        if value is not None:
            fields[name] = tuple(value) if isinstance(value, list) else value
    config = SynthConfig(**fields)
    names = _synth_names(args, config)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("wb") as fh:
        if args.emit == "pcap":
            written = write_pcap(records_from_names(names), fh)
        else:
            written = write_domain_list(names, fh)
    print(f"wrote {written} {args.kind} names to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_chart(args: argparse.Namespace) -> int:
    fp = _load_fp(args.fingerprint)
    if fp.n != args.n:
        raise OrderMismatch(f"fingerprint is a {fp.n}-gram table but --n is {args.n}")
    table = build_table(_read_all(args.inputs), n=args.n, dedup=args.dedup, scope=args.scope)

    prefix = str(args.out)
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}-rank.svg").write_text(render_rank_chart(table, fp, top_k=args.top_k), encoding="utf-8")
    if table.k >= 2:
        Path(f"{prefix}-delta.svg").write_text(render_delta_chart(table), encoding="utf-8")
    else:
        log.warning("input has a single distinct %d-gram, no delta chart", args.n)
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    groups = split(_read_all(args.inputs), mode=args.split_by)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for key, group in groups.items():
        with (out_dir / f"{safe_name(key)}.txt").open("wb") as fh:
            write_domain_list((r.name for r in group), fh)
    print(f"wrote {len(groups)} files to {out_dir}", file=sys.stderr)
    return EXIT_OK


# ---------- parser ----------
def _table_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=1, choices=(1, 2, 3), help="n-gram order")
    p.add_argument("--dedup", action=argparse.BooleanOptionalAction, default=True, help="count each distinct name once")
    p.add_argument("--scope", choices=("whole_name", "subdomain_only"), default="whole_name")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ngviz", description="N-gram DNS tunnel detection")
    p.add_argument("--log-level", default="WARNING", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = p.add_subparsers(dest="command", required=True)

    fp = sub.add_parser("fingerprint", help="build a fingerprint from legitimate traffic")
    fp.add_argument("inputs", nargs="+", type=Path, help="domain lists or pcap files")
    _table_flags(fp)
    fp.add_argument("--label", default="", help="source label stored in the fingerprint")
    fp.add_argument("--out", required=True, type=Path)
    fp.set_defaults(func=cmd_fingerprint)

    an = sub.add_parser("analyze", help="score traffic against a fingerprint")
    an.add_argument("inputs", nargs="+", type=Path)
    an.add_argument("--fingerprint", "-f", required=True, type=Path)
    _table_flags(an)
    an.add_argument("--split-by", choices=("none", "by_ip", "by_domain", "by_ip_domain"), default="by_domain")
    an.add_argument("--window", type=int, default=100, help="unique names per scored window")
    an.add_argument("--a", type=float, default=1.0)
    an.add_argument("--b", type=float, default=1.0)
    an.add_argument("--x", type=float, default=0.5)
    an.add_argument("--y", type=float, default=0.5)
    an.add_argument("--threshold", type=float, default=0.5)
    an.add_argument("--sort", choices=("ascending", "descending"), default="ascending")
    an.add_argument("--format", choices=("tsv", "json_lines"), default="tsv")
    an.add_argument("--out", type=Path, default=None, help="report file (default: standard output)")
    an.add_argument("--chart-dir", type=Path, default=None)
    an.add_argument("--top-k", type=int, default=40)
    an.add_argument("--verbose", action="store_true", help="write the pipeline step log to standard error")
    an.set_defaults(func=cmd_analyze)

    sy = sub.add_parser("synth", help="generate a synthetic corpus")
    sy.add_argument("kind", choices=("tunnel", "legit", "random", "repeated"))
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--count", type=int, default=1000)
    sy.add_argument("--apex", default=None)
    sy.add_argument("--encoding", choices=("base32", "base64url", "hex", "base128"), default="base32")
    sy.add_argument("--label-len", type=int, nargs=2, metavar=("LO", "HI"), default=None)
    sy.add_argument("--labels", type=int, nargs=2, metavar=("LO", "HI"), default=None)
    sy.add_argument("--padding", type=float, default=0.0)
    sy.add_argument("--label", default="abcdefgh", help="shared label for the repeated kind")
    sy.add_argument("--emit", choices=("list", "pcap"), default="list")
    sy.add_argument("--out", required=True, type=Path)
    sy.set_defaults(func=cmd_synth)

    ch = sub.add_parser("chart", help="rank and delta charts for one input")
    ch.add_argument("inputs", nargs="+", type=Path)
    ch.add_argument("--fingerprint", "-f", required=True, type=Path)
    _table_flags(ch)
    ch.add_argument("--top-k", type=int, default=40)
    ch.add_argument("--out", required=True, type=Path, help="output prefix")
    ch.set_defaults(func=cmd_chart)

    sp = sub.add_parser("split", help="split traffic into one domain list per key")
    sp.add_argument("inputs", nargs="+", type=Path)
    sp.add_argument("--split-by", choices=("none", "by_ip", "by_domain", "by_ip_domain"), default="by_ip")
    sp.add_argument("--out-dir", required=True, type=Path)
    sp.set_defaults(func=cmd_split)

    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    try:
        return args.func(args)
    except ValidationError as e:
        _err(f"invalid configuration: {e}")
        return EXIT_USAGE
    except OrderMismatch as e:
        _err(str(e))
        return EXIT_USAGE
    except NgvizError as e:
        _err(f"{type(e).__name__}: {e}")
        return EXIT_INPUT
    except OSError as e:
        _err(str(e))
        return EXIT_INPUT
    except ValueError as e:
        _err(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
