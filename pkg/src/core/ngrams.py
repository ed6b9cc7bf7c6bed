from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Literal, Mapping, Optional, TextIO, Tuple, Union

from src.core.errors import BadFingerprint, EmptyTable, OrderMismatch, TooFewNgrams
from src.core.names import QueryName, QueryRecord, subdomain_labels

Scope = Literal["whole_name", "subdomain_only"]

ORDERS = (1, 2, 3)
FP_HEADER_RE = re.compile(r"^ngviz-fp v1 n=(\d+) total=(\d+)$")


@dataclass(frozen=True)
class NgramTable:
    n: int
    counts: Mapping[str, int]
    total: int
    ranking: Tuple[Tuple[str, int], ...]
    scope: Scope = "whole_name"

    @classmethod
    def from_counts(cls, counts: Mapping[str, int], n: int, scope: Scope = "whole_name") -> "NgramTable":
        kept = {g: int(c) for g, c in counts.items() if c > 0}
        # count descending, ties lexicographic ascending
        ranking = tuple(sorted(kept.items(), key=lambda item: (-item[1], item[0])))
        return cls(n=n, counts=kept, total=sum(kept.values()), ranking=ranking, scope=scope)

    @property
    def k(self) -> int:
        return len(self.ranking)

    @cached_property
    def ranks(self) -> Dict[str, int]:
        return {g: i for i, (g, _) in enumerate(self.ranking, start=1)}

    @cached_property
    def frequencies(self) -> Tuple[float, ...]:
        """Relative frequency by rank (index 0 is rank 1)."""
        return tuple(c / self.total for _, c in self.ranking)

    def rank_of(self, ngram: str) -> Optional[int]:
        return self.ranks.get(ngram)

    def frequency_at(self, rank: int) -> float:
        if 1 <= rank <= self.k:
            return self.frequencies[rank - 1]
        return 0.0


@dataclass(frozen=True)
class Fingerprint:
    table: NgramTable
    source_label: str
    dedup_applied: bool = True

    def __post_init__(self) -> None:
        if not self.source_label.strip():
            raise ValueError("fingerprint source_label must be non-empty")

    @property
    def n(self) -> int:
        return self.table.n


def extract_ngrams(label: Union[str, bytes], n: int) -> List[str]:
    """Sliding window of width n, stride 1, over one label's octets."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    if isinstance(label, (bytes, bytearray)):
        label = bytes(label).decode("latin-1")
    return [label[i:i + n] for i in range(len(label) - n + 1)]


def _name_of(item: Union[QueryRecord, QueryName]) -> QueryName:
    return item.name if isinstance(item, QueryRecord) else item


def _labels_for(name: QueryName, scope: Scope) -> Iterable[str]:
    if scope == "subdomain_only":
        return subdomain_labels(name)
    return name.labels


def count_ngrams(
    items: Iterable[Union[QueryRecord, QueryName]],
    n: int,
    dedup: bool = True,
    scope: Scope = "whole_name",
) -> Counter:
    seen = set()
    counts: Counter = Counter()
    for item in items:
        name = _name_of(item)
        if dedup:
            if name.normalized in seen:
                continue
            seen.add(name.normalized)
        for label in _labels_for(name, scope):
            counts.update(extract_ngrams(label, n))
    return counts


def build_table(
    items: Iterable[Union[QueryRecord, QueryName]],
    n: int = 1,
    dedup: bool = True,
    scope: Scope = "whole_name",
) -> NgramTable:
    if n not in ORDERS:
        raise ValueError(f"n-gram order must be one of {ORDERS}, got {n}")
    if scope not in ("whole_name", "subdomain_only"):
        raise ValueError(f"unknown scope {scope!r}")
    counts = count_ngrams(items, n, dedup=dedup, scope=scope)
    if not counts:
        raise EmptyTable(f"no {n}-grams in input (scope={scope})")
    return NgramTable.from_counts(counts, n, scope)


def build_fingerprint(
    items: Iterable[Union[QueryRecord, QueryName]],
    source_label: str,
    n: int = 1,
    dedup: bool = True,
    scope: Scope = "whole_name",
) -> Fingerprint:
    return Fingerprint(table=build_table(items, n, dedup, scope), source_label=source_label, dedup_applied=dedup)


def merge_tables(first: NgramTable, second: NgramTable) -> NgramTable:
    if first.n != second.n or first.scope != second.scope:
        raise OrderMismatch(f"cannot merge n={first.n}/{first.scope} with n={second.n}/{second.scope}")
    merged = Counter(first.counts)
    merged.update(second.counts)
    return NgramTable.from_counts(merged, first.n, first.scope)


def freq_deltas(table: NgramTable) -> List[float]:
    """Drop in relative frequency from each rank to the next."""
    if table.k < 2:
        raise TooFewNgrams(f"need at least 2 distinct n-grams, table has {table.k}")
    f = table.frequencies
    return [f[i] - f[i + 1] for i in range(table.k - 1)]


def shannon_entropy(table: NgramTable) -> float:
    return -sum(p * math.log2(p) for p in table.frequencies)


# ---------- persistence ----------
def escape_ngram(ngram: str) -> str:
    out = []
    for ch in ngram:
        o = ord(ch)
        if 0x20 <= o <= 0x7E and ch != "\\":
            out.append(ch)
        else:
            out.append(f"\\x{o:02x}")
    return "".join(out)


def unescape_ngram(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        code = text[i + 1:i + 4]
        if len(code) != 3 or code[0] != "x":
            raise BadFingerprint(f"bad escape in {text!r}")
        try:
            out.append(chr(int(code[1:], 16)))
        except ValueError:
            raise BadFingerprint(f"bad escape in {text!r}")
        i += 4
    return "".join(out)


def save_fingerprint(fp: Fingerprint, stream: TextIO) -> None:
    table = fp.table
    stream.write(f"ngviz-fp v1 n={table.n} total={table.total}\n")
    label = " ".join(fp.source_label.split())
    stream.write(f"# dedup={int(fp.dedup_applied)} scope={table.scope} source={label}\n")
    for ngram, count in table.ranking:
        stream.write(f"{escape_ngram(ngram)}\t{count}\n")


def load_fingerprint(stream: TextIO, default_label: str = "fingerprint") -> Fingerprint:
    header = stream.readline().rstrip("\r\n")
    m = FP_HEADER_RE.match(header)
    if not m:
        raise BadFingerprint(f"missing or garbled fingerprint header: {header[:60]!r}")
    n, total = int(m.group(1)), int(m.group(2))
    if n not in ORDERS:
        raise BadFingerprint(f"unsupported order n={n}")

    source, dedup, scope = default_label, True, "whole_name"
    counts: Dict[str, int] = {}
    for lineno, line in enumerate(stream, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        if line.startswith("#") and "\t" not in line:
            meta = line[1:].strip()
            if "source=" in meta:
                meta, source = meta.split("source=", 1)
            for token in meta.split():
                key, _, value = token.partition("=")
                if key == "dedup":
                    dedup = value == "1"
                elif key == "scope" and value in ("whole_name", "subdomain_only"):
                    scope = value
            continue
        escaped, sep, count_text = line.rpartition("\t")
        if not sep:
            raise BadFingerprint(f"line {lineno}: expected '<ngram>\\t<count>'")
        ngram = unescape_ngram(escaped)
        if len(ngram) != n:
            raise BadFingerprint(f"line {lineno}: {escaped!r} is not a {n}-gram")
        if ngram in counts:
            raise BadFingerprint(f"line {lineno}: duplicate n-gram {escaped!r}")
        try:
            count = int(count_text)
        except ValueError:
            raise BadFingerprint(f"line {lineno}: bad count {count_text!r}")
        if count <= 0:
            raise BadFingerprint(f"line {lineno}: count must be positive")
        counts[ngram] = count

    if not counts:
        raise BadFingerprint("fingerprint has no n-grams")
    if sum(counts.values()) != total:
        raise BadFingerprint(f"header total={total} but counts sum to {sum(counts.values())}")
    table = NgramTable.from_counts(counts, n, scope)  # type: ignore[arg-type]
    return Fingerprint(table=table, source_label=source.strip() or default_label, dedup_applied=dedup)
