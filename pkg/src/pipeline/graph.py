from __future__ import annotations

import logging
import re
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, TypedDict

from langgraph.graph import END, StateGraph

from src.core.charts import render_delta_chart, render_rank_chart
from src.core.errors import EmptyInput
from src.core.names import QueryRecord
from src.core.ngrams import Fingerprint, load_fingerprint
from src.core.pcap import IngestStats, read_input, skip_summary
from src.core.report import render_report, rows_from_scored
from src.core.segments import ScoredSegment, Segment, rank_results, score_segments, segment_all
from src.pipeline.schemas import RunConfig

log = logging.getLogger(__name__)

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]")


def safe_name(key: str) -> str:
    """File-name form of a split key."""
    return _UNSAFE.sub("_", key) or "_"


# ---------- LangGraph State ----------
class PipelineState(TypedDict):
    config: RunConfig
    fingerprint: Optional[Fingerprint]
    records: List[QueryRecord]
    stats: Optional[IngestStats]
    segments: List[Segment]
    scored: List[ScoredSegment]
    ranked: List[ScoredSegment]
    report: bytes
    charts: Dict[str, str]
    error: str
    log: List[Dict[str, Any]]


def _ingest(state: PipelineState) -> PipelineState:
    config = state["config"]
    if state["fingerprint"] is None:
        if config.fingerprint is None:
            raise ValueError("no fingerprint given")
        with Path(config.fingerprint).open("r", encoding="utf-8", newline="") as fh:
            state["fingerprint"] = load_fingerprint(fh, default_label=Path(config.fingerprint).name)

    records: List[QueryRecord] = []
    total = IngestStats()
    for path in config.inputs:
        got, stats = read_input(path)
        log.info("%s: %s", path, skip_summary(stats))
        # one sequence across all inputs, in the order given
        records.extend(replace(r, seq=len(records) + i) for i, r in enumerate(got))
        total.packets_total += stats.packets_total
        total.packets_dns += stats.packets_dns
        total.packets_skipped += stats.packets_skipped
        for reason, count in stats.skip_reasons.items():
            total.skip_reasons[reason] = total.skip_reasons.get(reason, 0) + count

    if not records:
        raise EmptyInput("no usable query names in input")

    state["records"] = records
    state["stats"] = total
    state["log"].append(
        {
            "step": "ingest",
            "inputs": len(config.inputs),
            "records": len(records),
            "skipped": total.packets_skipped,
            "skip_reasons": dict(sorted(total.skip_reasons.items())),
        }
    )
    return state


def _check(state: PipelineState) -> PipelineState:
    config, fp = state["config"], state["fingerprint"]
    if fp.n != config.n:
        state["error"] = (
            f"fingerprint is a {fp.n}-gram table but --n is {config.n}; "
            f"rebuild the fingerprint or pass --n {fp.n}"
        )
    elif fp.table.scope != config.scope:
        log.warning("fingerprint scope %s differs from --scope %s", fp.table.scope, config.scope)
    state["log"].append(
        {"step": "check", "n": config.n, "fingerprint_n": fp.n, "k_fingerprint": fp.table.k, "ok": not state["error"]}
    )
    return state


def _after_check(state: PipelineState) -> str:
    return "stop" if state["error"] else "continue"


def _segment(state: PipelineState) -> PipelineState:
    config = state["config"]
    state["segments"] = segment_all(state["records"], mode=config.split, size=config.window, dedup=config.dedup)
    keys = {s.key for s in state["segments"]}
    state["log"].append(
        {
            "step": "segment",
            "split": config.split,
            "groups": len(keys),
            "segments": len(state["segments"]),
            "names": sum(len(s) for s in state["segments"]),
        }
    )
    return state


def _score(state: PipelineState) -> PipelineState:
    config = state["config"]
    state["scored"] = score_segments(
        state["segments"],
        state["fingerprint"],
        params=config.params,
        threshold=config.threshold,
        dedup=config.dedup,
        scope=config.scope,
    )
    flagged = sum(1 for s in state["scored"] if s.flagged)
    state["log"].append({"step": "score", "scored": len(state["scored"]), "flagged": flagged})
    return state


def _rank(state: PipelineState) -> PipelineState:
    state["ranked"] = rank_results(state["scored"], order=state["config"].sort)
    lowest = state["ranked"][0].score.total_match if state["ranked"] else None
    state["log"].append({"step": "rank", "order": state["config"].sort, "first_total_match": lowest})
    return state


def _render(state: PipelineState) -> PipelineState:
    config = state["config"]
    state["report"] = render_report(rows_from_scored(state["ranked"]), config.format)

    charts: Dict[str, str] = {}
    if config.chart_dir is not None:
        for s in state["ranked"]:
            stem = f"{safe_name(s.key)}-{s.window_index}"
            charts[f"{stem}-rank.svg"] = render_rank_chart(s.table, state["fingerprint"], top_k=config.top_k)
            if s.table.k >= 2:
                charts[f"{stem}-delta.svg"] = render_delta_chart(s.table)
    state["charts"] = charts
    state["log"].append({"step": "render", "format": config.format, "bytes": len(state["report"]), "charts": len(charts)})
    return state


def build_graph():
    g = StateGraph(PipelineState)

    g.add_node("ingest", _ingest)
    g.add_node("check", _check)
    g.add_node("segment", _segment)
    g.add_node("score", _score)
    g.add_node("rank", _rank)
    g.add_node("render", _render)

    g.set_entry_point("ingest")
    g.add_edge("ingest", "check")
    g.add_conditional_edges("check", _after_check, {"continue": "segment", "stop": END})
    g.add_edge("segment", "score")
    g.add_edge("score", "rank")
    g.add_edge("rank", "render")
    g.add_edge("render", END)

    return g.compile()


def run_pipeline(config: RunConfig, fingerprint: Optional[Fingerprint] = None) -> PipelineState:
    graph = build_graph()
    init: PipelineState = {
        "config": config,
        "fingerprint": fingerprint,
        "records": [],
        "stats": None,
        "segments": [],
        "scored": [],
        "ranked": [],
        "report": b"",
        "charts": {},
        "error": "",
        "log": [],
    }
    return graph.invoke(init)
