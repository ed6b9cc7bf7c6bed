from __future__ import annotations

from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.ngrams import ORDERS, Scope
from src.core.report import ReportFormat
from src.core.scoring import MatchParams
from src.core.segments import SortOrder, SplitMode


class RunConfig(BaseModel):
    """Every analyze knob, with the defaults the CLI advertises."""

    model_config = ConfigDict(frozen=True)

    inputs: List[Path] = Field(default_factory=list)
    fingerprint: Optional[Path] = None
    n: int = 1
    dedup: bool = True
    scope: Scope = "whole_name"
    split: SplitMode = "by_domain"
    window: int = Field(default=100, ge=1)
    params: MatchParams = Field(default_factory=MatchParams)
    threshold: float = Field(default=0.5, ge=0, le=1)
    sort: SortOrder = "ascending"
    format: ReportFormat = "tsv"
    chart_dir: Optional[Path] = None
    top_k: int = Field(default=40, ge=1)

    @field_validator("n")
    @classmethod
    def _supported_order(cls, v: int) -> int:
        if v not in ORDERS:
            raise ValueError(f"n must be one of {ORDERS}, got {v}")
        return v
