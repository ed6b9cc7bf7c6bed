from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

from src.core.errors import EmptyTable
from src.core.names import QueryRecord, registered_domain
from src.core.ngrams import Fingerprint, NgramTable, Scope, build_table
from src.core.scoring import MatchParams, MatchScore, total_match

log = logging.getLogger(__name__)

SplitMode = Literal["none", "by_ip", "by_domain", "by_ip_domain"]
SortOrder = Literal["ascending", "descending"]

ALL_KEY = "all"


@dataclass(frozen=True)
class Segment:
    key: str
    window_index: int
    records: Tuple[QueryRecord, ...]

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ScoredSegment:
    segment: Segment
    score: MatchScore
    flagged: bool
    table: Optional[NgramTable] = None

    @property
    def key(self) -> str:
        return self.segment.key

    @property
    def window_index(self) -> int:
        return self.segment.window_index


def split_key(record: QueryRecord, mode: SplitMode) -> str:
    if mode == "by_ip":
        return str(record.client_ip)
    if mode == "by_domain":
        return registered_domain(record.name)
    if mode == "by_ip_domain":
        return f"{record.client_ip}|{registered_domain(record.name)}"
    if mode == "none":
        return ALL_KEY
    raise ValueError(f"unknown split mode {mode!r}")


def split(records: Iterable[QueryRecord], mode: SplitMode = "by_domain") -> Dict[str, List[QueryRecord]]:
    groups: Dict[str, List[QueryRecord]] = {}
    for record in records:
        groups.setdefault(split_key(record, mode), []).append(record)
    for group in groups.values():
        group.sort(key=lambda r: r.seq)
    return groups


def min_tail(size: int) -> float:
    return max(2, size / 10)


def window(group: Sequence[QueryRecord], size: int, dedup: bool = True, key: str = ALL_KEY) -> List[Segment]:
    if size < 1:
        raise ValueError(f"window size must be >= 1, got {size}")
    names: List[QueryRecord] = list(group)
    if dedup:
        seen = set()
        names = []
        for record in group:
            if record.name.normalized not in seen:
                seen.add(record.name.normalized)
                names.append(record)

    segments: List[Segment] = []
    for index, start in enumerate(range(0, len(names), size)):
        chunk = tuple(names[start:start + size])
        if len(chunk) < size and len(chunk) < min_tail(size):
            log.debug("dropping %d-name tail of %s", len(chunk), key)
            break
        segments.append(Segment(key=key, window_index=index, records=chunk))
    return segments


def segment_all(
    records: Iterable[QueryRecord],
    mode: SplitMode = "by_domain",
    size: int = 100,
    dedup: bool = True,
) -> List[Segment]:
    segments: List[Segment] = []
    for key, group in split(records, mode).items():
        segments.extend(window(group, size, dedup=dedup, key=key))
    return segments


def score_segment(
    segment: Segment,
    fp: Fingerprint,
    params: MatchParams = MatchParams(),
    threshold: float = 0.5,
    dedup: bool = True,
    scope: Scope = "whole_name",
) -> ScoredSegment:
    table = build_table(segment.records, n=fp.n, dedup=dedup, scope=scope)
    score = total_match(table, fp, params)
    return ScoredSegment(segment=segment, score=score, flagged=score.total_match < threshold, table=table)


def score_segments(
    segments: Iterable[Segment],
    fp: Fingerprint,
    params: MatchParams = MatchParams(),
    threshold: float = 0.5,
    dedup: bool = True,
    scope: Scope = "whole_name",
) -> List[ScoredSegment]:
    scored: List[ScoredSegment] = []
    for segment in segments:
        try:
            scored.append(score_segment(segment, fp, params, threshold, dedup, scope))
        except EmptyTable:
            log.info("segment %s/%d has no n-grams, not scored", segment.key, segment.window_index)
    return scored


def rank_results(scored: Iterable[ScoredSegment], order: SortOrder = "ascending") -> List[ScoredSegment]:
    """Most suspicious (lowest total_match) first; ties by key, then window."""
    sign = 1 if order == "ascending" else -1
    return sorted(scored, key=lambda s: (sign * s.score.total_match, s.key, s.window_index))
