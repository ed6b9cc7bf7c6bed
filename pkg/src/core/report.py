from __future__ import annotations

import io
import json
from typing import Iterable, List, Literal, Sequence

import pandas as pd
from pydantic import BaseModel, ConfigDict

from src.core.segments import ScoredSegment

ReportFormat = Literal["tsv", "json_lines"]

COLUMNS = ["key", "window_index", "k_input", "rank_match", "freq_match", "total_match", "flagged"]
SCORE_FIELDS = ("rank_match", "freq_match", "total_match")


class ReportRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    key: str
    window_index: int
    k_input: int
    rank_match: float
    freq_match: float
    total_match: float
    flagged: bool

    @classmethod
    def from_scored(cls, scored: ScoredSegment) -> "ReportRow":
        return cls(
            key=scored.key,
            window_index=scored.window_index,
            k_input=scored.score.k_input,
            rank_match=scored.score.rank_match,
            freq_match=scored.score.freq_match,
            total_match=scored.score.total_match,
            flagged=scored.flagged,
        )


def rows_from_scored(scored: Iterable[ScoredSegment]) -> List[ReportRow]:
    return [ReportRow.from_scored(s) for s in scored]


def _tsv(rows: Sequence[ReportRow]) -> str:
    df = pd.DataFrame([r.model_dump() for r in rows], columns=COLUMNS)
    df["flagged"] = df["flagged"].map(lambda v: "true" if v else "false")
    for col in SCORE_FIELDS:
        df[col] = df[col].astype(float)
    buf = io.StringIO()
    df.to_csv(buf, sep="\t", index=False, float_format="%.4f", lineterminator="\n")
    return buf.getvalue()


def _json_line(row: ReportRow) -> str:
    # hand-built so scores keep exactly four decimals
    parts = [
        f'"key": {json.dumps(row.key)}',
        f'"window_index": {row.window_index}',
        f'"k_input": {row.k_input}',
    ]
    parts += [f'"{name}": {getattr(row, name):.4f}' for name in SCORE_FIELDS]
    parts.append(f'"flagged": {"true" if row.flagged else "false"}')
    return "{" + ", ".join(parts) + "}\n"


def render_report(rows: Sequence[ReportRow], fmt: ReportFormat = "tsv") -> bytes:
    """Rows are written in the order given; callers rank them first."""
    if fmt == "tsv":
        # keys are byte text, latin-1 gives back their octets
        return _tsv(rows).encode("latin-1")
    if fmt == "json_lines":
        return "".join(_json_line(r) for r in rows).encode("ascii")
    raise ValueError(f"unknown report format {fmt!r}")
