"""Query names and the records that carry them.

Names are kept as "byte text": every character is one octet of the wire
form (a latin-1 view), so labels full of tunnel payload bytes survive
intact and n-gram windows line up with bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from ipaddress import IPv4Address
from typing import List, Literal, Tuple, Union

from src.core.errors import EmptyName, LabelTooLong, NameTooLong

Direction = Literal["query", "response"]

MAX_LABEL = 63
MAX_NAME = 253

# ASCII-only case folding; octets >= 0x80 are left alone.
_ASCII_LOWER = {c: c + 32 for c in range(ord("A"), ord("Z") + 1)}

UNSPECIFIED_IP = IPv4Address("0.0.0.0")

# str.strip() alone would also eat 0x1c-0x1f, 0x85 and 0xa0 octets.
ASCII_WHITESPACE = " \t\r\n\f\v"


@dataclass(frozen=True)
class QueryName:
    raw: str
    labels: Tuple[str, ...]
    normalized: str

    def wire(self) -> bytes:
        return self.normalized.encode("latin-1")

    def __str__(self) -> str:
        return self.normalized


@dataclass(frozen=True)
class QueryRecord:
    name: QueryName
    client_ip: IPv4Address
    direction: Direction
    ts_sec: int
    ts_usec: int
    seq: int


def as_byte_text(text: Union[str, bytes]) -> str:
    if isinstance(text, (bytes, bytearray)):
        return bytes(text).decode("latin-1")
    return text.encode("utf-8").decode("latin-1")


def parse_name(text: Union[str, bytes]) -> QueryName:
    """Parse a raw name into lowercase labels.

    bytes are wire octets and are kept as they are. str is UTF-8 encoded
    and trimmed of ASCII whitespace.
    """
    raw = as_byte_text(text)
    s = raw if isinstance(text, (bytes, bytearray)) else raw.strip(ASCII_WHITESPACE)
    if s.endswith("."):
        s = s[:-1]
    if not s:
        raise EmptyName("empty name")

    labels = tuple(s.translate(_ASCII_LOWER).split("."))
    for label in labels:
        if not label:
            raise EmptyName(f"empty label in {s!r}")
        if len(label) > MAX_LABEL:
            raise LabelTooLong(f"label of {len(label)} bytes exceeds {MAX_LABEL}")

    normalized = ".".join(labels)
    if len(normalized) > MAX_NAME:
        raise NameTooLong(f"name of {len(normalized)} bytes exceeds {MAX_NAME}")
    return QueryName(raw=raw, labels=labels, normalized=normalized)


def registered_domain(name: QueryName) -> str:
    # Last two labels; no public suffix list.
    return ".".join(name.labels[-2:])


def subdomain_labels(name: QueryName) -> List[str]:
    return list(name.labels[:-2])
