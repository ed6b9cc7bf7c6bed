"""Deterministic synthetic corpora.

Every generator draws from its own ``random.Random(seed)`` (CPython's
MT19937), using only ``randint``, ``choice``, ``choices`` and ``random``,
so a seed gives a byte-identical corpus on every platform. Generators
stream names one at a time.
"""
from __future__ import annotations

import random
from functools import lru_cache
from pathlib import Path
from typing import Iterator, List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.names import MAX_LABEL, MAX_NAME, QueryName, as_byte_text, parse_name

Encoding = Literal["base32", "base64url", "hex", "base128"]

ALPHABETS = {
    "base32": "abcdefghijklmnopqrstuvwxyz234567",
    "base64url": "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_",
    "hex": "0123456789abcdef",
    # iodine-style: 62 hostname characters plus the octets 0xbc-0xfd
    "base128": "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    + "".join(chr(o) for o in range(0xBC, 0xFE)),
}

TLDS = ("com", "net", "org", "io", "co")

WORDS_PATH = Path(__file__).parent / "data" / "words.txt"


@lru_cache(maxsize=1)
def load_words() -> Tuple[str, ...]:
    lines = WORDS_PATH.read_text(encoding="utf-8").split()
    return tuple(w for w in lines if w)


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = Field(default=0, ge=0, lt=2**64)
    count: int = Field(default=1000, ge=1)
    apex: str = "t.example.com"
    encoding: Encoding = "base32"
    label_len: Tuple[int, int] = (24, 60)
    labels: Tuple[int, int] = (1, 2)
    padding: float = Field(default=0.0, ge=0, le=1)

    @field_validator("label_len")
    @classmethod
    def _label_len_in_range(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        lo, hi = v
        if not 1 <= lo <= hi <= MAX_LABEL:
            raise ValueError(f"label_len must satisfy 1 <= lo <= hi <= {MAX_LABEL}, got {v}")
        return v

    @field_validator("labels")
    @classmethod
    def _labels_in_range(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        lo, hi = v
        if not 1 <= lo <= hi:
            raise ValueError(f"labels must satisfy 1 <= lo <= hi, got {v}")
        return v

    @field_validator("apex")
    @classmethod
    def _apex_is_a_name(cls, v: str) -> str:
        v = v.strip().strip(".")
        if v:
            return parse_name(v).normalized
        return v

    @model_validator(mode="after")
    def _names_fit(self) -> "SynthConfig":
        longest = self.labels[1] * (self.label_len[1] + 1) + len(self.apex)
        if longest > MAX_NAME:
            raise ValueError(f"names could reach {longest} bytes, limit is {MAX_NAME}")
        return self


def _with_apex(labels: List[str], apex: str) -> QueryName:
    if apex:
        labels = labels + [apex]
    # labels are byte text; keep their octets as they are
    return parse_name(".".join(labels).encode("latin-1"))


def _word_stream(rng: random.Random) -> Iterator[str]:
    words = load_words()
    while True:
        yield from rng.choice(words)


def _random_label(rng: random.Random, alphabet: str, length: int) -> str:
    return "".join(rng.choices(alphabet, k=length))


def _padded_label(rng: random.Random, alphabet: str, length: int, padding: float, words: Iterator[str]) -> str:
    return "".join(next(words) if rng.random() < padding else rng.choice(alphabet) for _ in range(length))


def gen_tunnel(config: SynthConfig) -> Iterator[QueryName]:
    """<random-label>[.<random-label>].<apex>, labels over the encoding alphabet."""
    rng = random.Random(config.seed)
    alphabet = ALPHABETS[config.encoding]
    words = _word_stream(random.Random(config.seed ^ 0x5EED))
    lo, hi = config.label_len
    for _ in range(config.count):
        labels = []
        for _ in range(rng.randint(*config.labels)):
            length = rng.randint(lo, hi)
            if config.padding > 0:
                labels.append(_padded_label(rng, alphabet, length, config.padding, words))
            else:
                labels.append(_random_label(rng, alphabet, length))
        yield _with_apex(labels, config.apex)


def gen_random(config: SynthConfig) -> Iterator[QueryName]:
    """One random label per name; no label shared between names."""
    rng = random.Random(config.seed)
    alphabet = ALPHABETS[config.encoding]
    lo, hi = config.label_len
    for _ in range(config.count):
        yield _with_apex([_random_label(rng, alphabet, rng.randint(lo, hi))], config.apex)


def gen_repeated_label(config: SynthConfig, label: str) -> Iterator[QueryName]:
    """Many names sharing one fixed label, told apart by a short random suffix."""
    lo, hi = config.label_len
    label = as_byte_text(label)
    if not label or len(label) + hi > MAX_LABEL:
        raise ValueError(f"label of {len(label)} bytes plus suffix up to {hi} must fit in {MAX_LABEL}")
    rng = random.Random(config.seed)
    alphabet = ALPHABETS[config.encoding]
    for _ in range(config.count):
        yield _with_apex([label + _random_label(rng, alphabet, rng.randint(lo, hi))], config.apex)


def _legit_patterns(rng: random.Random, words: Tuple[str, ...]) -> str:
    w = lambda: rng.choice(words)  # noqa: E731
    tld = rng.choice(TLDS)
    kind = rng.randint(0, 6)
    if kind == 0:
        return f"{w()}.{tld}"
    if kind == 1:
        return f"www.{w()}{w()}.{tld}"
    if kind == 2:
        return f"{w()}-{w()}.{tld}"
    if kind == 3:
        return f"cdn{rng.randint(0, 9)}.{w()}.{tld}"
    if kind == 4:
        return f"www.{w()}.{tld}"
    if kind == 5:
        return f"{w()}.{w()}.{tld}"
    return f"mail.{w()}.{tld}"


def gen_legit(seed: int, count: int) -> Iterator[QueryName]:
    """Word-composed names standing in for ordinary browsing traffic."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = random.Random(seed)
    words = load_words()
    for _ in range(count):
        yield parse_name(_legit_patterns(rng, words))
