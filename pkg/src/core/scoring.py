from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.errors import EmptyInput, OrderMismatch
from src.core.ngrams import Fingerprint, NgramTable

WEIGHT_TOLERANCE = 1e-12


class MatchParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float = Field(default=1.0, ge=0, description="exponent on rank_match")
    b: float = Field(default=1.0, ge=0, description="exponent on freq_match")
    x: float = Field(default=0.5, ge=0, le=1, description="weight of rank_match")
    y: float = Field(default=0.5, ge=0, le=1, description="weight of freq_match")
    missing_rank_policy: Literal["fingerprint_size_plus_one"] = "fingerprint_size_plus_one"

    @model_validator(mode="after")
    def _weights_sum_to_one(self) -> "MatchParams":
        if abs(self.x + self.y - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"x + y must equal 1 (got x={self.x}, y={self.y})")
        return self


@dataclass(frozen=True)
class MatchScore:
    rank_match: float
    freq_match: float
    total_match: float
    k_input: int
    k_fingerprint: int


def _baseline(fp: Union[Fingerprint, NgramTable]) -> NgramTable:
    return fp.table if isinstance(fp, Fingerprint) else fp


def _check(table: NgramTable, baseline: NgramTable) -> None:
    if table.k == 0:
        raise EmptyInput("input table has no n-grams")
    if table.n != baseline.n:
        raise OrderMismatch(f"input is {table.n}-gram but fingerprint is {baseline.n}-gram")


def rank_match(table: NgramTable, fp: Union[Fingerprint, NgramTable], params: MatchParams = MatchParams()) -> float:
    """((K - D) / K) ** a, D = mean |rank_input - rank_fingerprint| over the input's n-grams."""
    baseline = _baseline(fp)
    _check(table, baseline)
    missing = baseline.k + 1
    diffs = sum(abs(rank - (baseline.rank_of(g) or missing)) for rank, (g, _) in enumerate(table.ranking, start=1))
    k = table.k
    mean_diff = diffs / k
    base = min(1.0, max(0.0, (k - mean_diff) / k))
    return base ** params.a


def freq_match(table: NgramTable, fp: Union[Fingerprint, NgramTable], params: MatchParams = MatchParams()) -> float:
    """Rank-positional frequency agreement: mean of min/max over ranks 1..K, raised to b."""
    baseline = _baseline(fp)
    _check(table, baseline)
    total = 0.0
    for rank, f_in in enumerate(table.frequencies, start=1):
        f_fp = baseline.frequency_at(rank)
        if f_fp > 0:
            total += min(f_in, f_fp) / max(f_in, f_fp)
    return (total / table.k) ** params.b


def total_match(table: NgramTable, fp: Union[Fingerprint, NgramTable], params: MatchParams = MatchParams()) -> MatchScore:
    baseline = _baseline(fp)
    r = rank_match(table, baseline, params)
    f = freq_match(table, baseline, params)
    total = min(1.0, params.x * r + params.y * f)
    return MatchScore(rank_match=r, freq_match=f, total_match=total, k_input=table.k, k_fingerprint=baseline.k)
