"""Classic pcap in, DNS question names out.

Only Ethernet II / IPv4 / UDP port 53 is decoded, and only the first
question of each DNS message. Anything else is skipped and counted.
"""
from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass, field
from ipaddress import IPv4Address
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, Iterator, List, Literal, Optional, Tuple

import dpkt

from src.core.errors import BadMagic, NgvizError, TruncatedHeader, UnsupportedLinkType
from src.core.names import ASCII_WHITESPACE, UNSPECIFIED_IP, QueryName, QueryRecord, parse_name

log = logging.getLogger(__name__)

ByteOrder = Literal["little", "big"]

MAGIC_LITTLE = b"\xd4\xc3\xb2\xa1"
MAGIC_BIG = b"\xa1\xb2\xc3\xd4"
# Recognised but unsupported: nanosecond pcap (both orders) and pcapng.
OTHER_CAPTURE_MAGICS = {b"\x4d\x3c\xb2\xa1", b"\xa1\xb2\x3c\xd4", b"\x0a\x0d\x0d\x0a"}

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16
DNS_PORT = 53
MAX_POINTER_HOPS = 128

# Octets a domain-list line cannot carry as is; written as \xNN.
_LIST_UNSAFE = re.compile(r"[\x00-\x20\x7f\\]|^#")
_LIST_ESCAPE = re.compile(r"\\x([0-9a-f]{2})")

SERVER_IP = IPv4Address("10.53.53.53")
CLIENT_MAC = b"\x02\x00\x00\x00\x00\x01"
SERVER_MAC = b"\x02\x00\x00\x00\x00\x35"


class _DnsHeader(dpkt.Packet):
    __hdr__ = (
        ("id", "H", 0),
        ("flags", "H", 0),
        ("qdcount", "H", 0),
        ("ancount", "H", 0),
        ("nscount", "H", 0),
        ("arcount", "H", 0),
    )


class _Question(dpkt.Packet):
    __hdr__ = (
        ("qtype", "H", dpkt.dns.DNS_A),
        ("qclass", "H", dpkt.dns.DNS_IN),
    )


QR_BIT = 0x8000
RD_BIT = 0x0100


@dataclass
class IngestStats:
    packets_total: int = 0
    packets_dns: int = 0
    packets_skipped: int = 0
    skip_reasons: Dict[str, int] = field(default_factory=dict)

    def skip(self, reason: str) -> None:
        self.packets_skipped += 1
        self.skip_reasons[reason] = self.skip_reasons.get(reason, 0) + 1


@dataclass(frozen=True)
class PcapSource:
    byte_order: ByteOrder
    snaplen: int
    linktype: int


class _Skip(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# ---------- reading ----------
def _file_header_cls(byte_order: ByteOrder):
    return dpkt.pcap.LEFileHdr if byte_order == "little" else dpkt.pcap.FileHdr


def _record_header_cls(byte_order: ByteOrder):
    return dpkt.pcap.LEPktHdr if byte_order == "little" else dpkt.pcap.PktHdr


def read_source(stream: BinaryIO) -> PcapSource:
    head = stream.read(GLOBAL_HEADER_LEN)
    if len(head) < 4:
        raise TruncatedHeader(f"pcap global header needs {GLOBAL_HEADER_LEN} bytes, got {len(head)}")
    magic = head[:4]
    if magic == MAGIC_LITTLE:
        byte_order: ByteOrder = "little"
    elif magic == MAGIC_BIG:
        byte_order = "big"
    else:
        raise BadMagic(f"not a microsecond pcap file (magic {magic.hex()})")
    if len(head) < GLOBAL_HEADER_LEN:
        raise TruncatedHeader(f"pcap global header needs {GLOBAL_HEADER_LEN} bytes, got {len(head)}")

    hdr = _file_header_cls(byte_order)(head)
    if hdr.linktype != dpkt.pcap.DLT_EN10MB:
        raise UnsupportedLinkType(f"linktype {hdr.linktype} is not Ethernet")
    return PcapSource(byte_order=byte_order, snaplen=hdr.snaplen, linktype=hdr.linktype)


def decode_qname(message: bytes, offset: int) -> bytes:
    """Decode a length-prefixed QNAME, following compression pointers."""
    labels: List[bytes] = []
    hops = 0
    while True:
        if offset >= len(message):
            raise _Skip("qname-overrun")
        length = message[offset]
        kind = length & 0xC0
        if kind == 0xC0:
            if offset + 1 >= len(message):
                raise _Skip("qname-overrun")
            hops += 1
            if hops > MAX_POINTER_HOPS:
                raise _Skip("pointer-loop")
            offset = ((length & 0x3F) << 8) | message[offset + 1]
            continue
        if kind:
            raise _Skip("bad-label-type")
        if length == 0:
            return b".".join(labels)
        end = offset + 1 + length
        if end > len(message):
            raise _Skip("qname-overrun")
        labels.append(message[offset + 1:end])
        offset = end


def _decode_frame(frame: bytes) -> Tuple[QueryName, IPv4Address, str]:
    try:
        eth = dpkt.ethernet.Ethernet(frame)
    except dpkt.UnpackError:
        raise _Skip("short-ethernet")
    if eth.type != dpkt.ethernet.ETH_TYPE_IP:
        raise _Skip("non-ipv4")
    ip = eth.data
    if not isinstance(ip, dpkt.ip.IP):
        raise _Skip("short-ip-header")
    if ip.p != dpkt.ip.IP_PROTO_UDP:
        raise _Skip("non-udp")
    udp = ip.data
    if not isinstance(udp, dpkt.udp.UDP):
        raise _Skip("short-udp-header")
    if DNS_PORT not in (udp.sport, udp.dport):
        raise _Skip("non-dns-port")

    message = bytes(udp.data)
    try:
        header = _DnsHeader(message)
    except dpkt.UnpackError:
        raise _Skip("short-dns-header")
    if header.qdcount < 1:
        raise _Skip("no-question")

    qname = decode_qname(message, _DnsHeader.__hdr_len__)
    if not qname:
        raise _Skip("root-qname")
    try:
        name = parse_name(qname)
    except NgvizError:
        raise _Skip("bad-name")

    if header.flags & QR_BIT:
        return name, IPv4Address(ip.dst), "response"
    return name, IPv4Address(ip.src), "query"


def iter_pcap(stream: BinaryIO, stats: IngestStats) -> Iterator[QueryRecord]:
    source = read_source(stream)
    record_header = _record_header_cls(source.byte_order)
    seq = 0
    while True:
        raw = stream.read(RECORD_HEADER_LEN)
        if not raw:
            break
        stats.packets_total += 1
        if len(raw) < RECORD_HEADER_LEN:
            stats.skip("truncated-record")
            break
        ph = record_header(raw)
        frame = stream.read(ph.caplen)
        if len(frame) < ph.caplen:
            stats.skip("truncated-record")
            break

        try:
            name, client_ip, direction = _decode_frame(frame)
        except _Skip as skip:
            stats.skip(skip.reason)
            continue
        except Exception as e:  # arbitrary bytes must never abort a capture
            log.debug("packet %d undecodable: %s", stats.packets_total, e)
            stats.skip("malformed")
            continue

        stats.packets_dns += 1
        yield QueryRecord(
            name=name,
            client_ip=client_ip,
            direction=direction,
            ts_sec=ph.tv_sec,
            ts_usec=ph.tv_usec,
            seq=seq,
        )
        seq += 1


def read_pcap(stream: BinaryIO) -> Tuple[List[QueryRecord], IngestStats]:
    stats = IngestStats()
    records = list(iter_pcap(stream, stats))
    if stats.packets_skipped:
        log.info("pcap: %d of %d packets skipped %s", stats.packets_skipped, stats.packets_total, stats.skip_reasons)
    return records, stats


def read_domain_list(stream: Iterable[str]) -> Tuple[List[QueryRecord], int]:
    """One record per valid line. Returns the records and the number of rejected lines.

    ``\\xNN`` escapes written by :func:`write_domain_list` are decoded.
    """
    records: List[QueryRecord] = []
    warnings = 0
    for lineno, line in enumerate(stream, start=1):
        text = line.strip(ASCII_WHITESPACE)
        if not text or text.startswith("#"):
            continue
        octets = text.encode("utf-8", "surrogateescape").decode("latin-1")
        octets = _LIST_ESCAPE.sub(lambda m: chr(int(m.group(1), 16)), octets)
        try:
            name = parse_name(octets.encode("latin-1"))
        except NgvizError as e:
            warnings += 1
            log.warning("line %d skipped: %s", lineno, e)
            continue
        records.append(
            QueryRecord(
                name=name,
                client_ip=UNSPECIFIED_IP,
                direction="query",
                ts_sec=0,
                ts_usec=0,
                seq=lineno,
            )
        )
    return records, warnings


def read_input(path: Path) -> Tuple[List[QueryRecord], IngestStats]:
    """Read a capture or a domain list, sniffing the first bytes."""
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(4)
        fh.seek(0)
        looks_like_capture = magic in (MAGIC_LITTLE, MAGIC_BIG) or magic in OTHER_CAPTURE_MAGICS
        if looks_like_capture or path.suffix.lower() in (".pcap", ".cap"):
            return read_pcap(fh)

        text = io.TextIOWrapper(fh, encoding="utf-8", errors="surrogateescape", newline=None)
        records, warnings = read_domain_list(text)

    stats = IngestStats(packets_total=len(records) + warnings, packets_dns=len(records))
    if warnings:
        stats.packets_skipped = warnings
        stats.skip_reasons["bad-name"] = warnings
    return records, stats


# ---------- writing ----------
def build_dns_message(name: QueryName, ident: int, response: bool = False) -> bytes:
    flags = RD_BIT | (QR_BIT if response else 0)
    qname = b"".join(bytes([len(label)]) + label.encode("latin-1") for label in name.labels) + b"\x00"
    return bytes(_DnsHeader(id=ident & 0xFFFF, flags=flags, qdcount=1)) + qname + bytes(_Question())


def build_dns_frame(record: QueryRecord) -> bytes:
    response = record.direction == "response"
    client_port = 40000 + record.seq % 20000
    message = build_dns_message(record.name, record.seq, response=response)

    if response:
        src, dst, sport, dport = SERVER_IP, record.client_ip, DNS_PORT, client_port
        src_mac, dst_mac = SERVER_MAC, CLIENT_MAC
    else:
        src, dst, sport, dport = record.client_ip, SERVER_IP, client_port, DNS_PORT
        src_mac, dst_mac = CLIENT_MAC, SERVER_MAC

    udp = dpkt.udp.UDP(sport=sport, dport=dport, data=message)
    udp.ulen = len(udp)
    ip = dpkt.ip.IP(src=src.packed, dst=dst.packed, p=dpkt.ip.IP_PROTO_UDP, ttl=64, data=udp)
    ip.len = len(ip)
    eth = dpkt.ethernet.Ethernet(src=src_mac, dst=dst_mac, type=dpkt.ethernet.ETH_TYPE_IP, data=ip)
    return bytes(eth)


def write_pcap_frames(
    frames: Iterable[Tuple[int, int, bytes]],
    stream: BinaryIO,
    byte_order: ByteOrder = "little",
    snaplen: int = 65535,
) -> int:
    """Write (ts_sec, ts_usec, frame) tuples as a classic pcap. Returns the packet count."""
    stream.write(
        bytes(_file_header_cls(byte_order)(magic=dpkt.pcap.TCPDUMP_MAGIC, snaplen=snaplen, linktype=dpkt.pcap.DLT_EN10MB))
    )
    record_header = _record_header_cls(byte_order)
    n = 0
    for ts_sec, ts_usec, frame in frames:
        stream.write(bytes(record_header(tv_sec=ts_sec, tv_usec=ts_usec, caplen=len(frame), len=len(frame))))
        stream.write(frame)
        n += 1
    return n


def write_pcap(records: Iterable[QueryRecord], stream: BinaryIO, byte_order: ByteOrder = "little") -> int:
    frames = ((r.ts_sec, r.ts_usec, build_dns_frame(r)) for r in records)
    return write_pcap_frames(frames, stream, byte_order=byte_order)


def write_domain_list(names: Iterable[QueryName], stream: BinaryIO) -> int:
    """One name per line, newline-terminated.

    Octets are written raw except control bytes, space, backslash and a
    leading '#', which become ``\\xNN`` so the line reads back unchanged.
    """
    written = 0
    for name in names:
        line = _LIST_UNSAFE.sub(lambda m: f"\\x{ord(m.group()):02x}", name.normalized)
        stream.write(line.encode("latin-1") + b"\n")
        written += 1
    return written


def records_from_names(
    names: Iterable[QueryName],
    client_ip: Optional[IPv4Address] = None,
    start_ts: int = 1_262_304_000,
) -> Iterator[QueryRecord]:
    """Wrap bare names as query records, one per second from start_ts."""
    ip = client_ip or IPv4Address("192.168.1.10")
    for i, name in enumerate(names):
        yield QueryRecord(name=name, client_ip=ip, direction="query", ts_sec=start_ts + i, ts_usec=0, seq=i)


def skip_summary(stats: IngestStats) -> str:
    reasons = ", ".join(f"{k}={v}" for k, v in sorted(stats.skip_reasons.items()))
    return f"{stats.packets_dns}/{stats.packets_total} usable ({reasons or 'no skips'})"
