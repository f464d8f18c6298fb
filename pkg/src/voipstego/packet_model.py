"""IPv4/UDP/RTP voice packets: in-memory model, wire format and pcap I/O.

Packets are immutable; use :func:`dataclasses.replace` plus
:func:`with_valid_checksum` to derive modified copies.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from .kernels import ones_complement_checksum

IP_HEADER_LEN = 20
UDP_HEADER_LEN = 8
RTP_HEADER_LEN = 12
HEADERS_LEN = IP_HEADER_LEN + UDP_HEADER_LEN + RTP_HEADER_LEN
MAX_PAYLOAD = 1400

IPPROTO_UDP = 17
FLAG_DF = 0b010

PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_RAW = 101

_IP = struct.Struct("!BBHHHBBHII")
_UDP = struct.Struct("!HHHH")
_RTP = struct.Struct("!BBHII")
_PCAP_GLOBAL = struct.Struct("!IHHiIII")
_PCAP_RECORD = struct.Struct("!IIII")


class PacketError(ValueError):
    """Raised for malformed or unsupported wire images."""


class TruncatedPacket(PacketError):
    pass


class PcapError(IOError):
    pass


@dataclass(frozen=True)
class Ipv4Header:
    version: int = 4
    ihl: int = 5
    tos: int = 0
    total_length: int = HEADERS_LEN
    identification: int = 0
    flags: int = FLAG_DF
    fragment_offset: int = 0
    ttl: int = 64
    protocol: int = IPPROTO_UDP
    checksum: int = 0
    src: int = 0x0A000001
    dst: int = 0x0A000002

    def pack(self, checksum: Optional[int] = None) -> bytes:
        return _IP.pack(
            (self.version << 4) | self.ihl,
            self.tos,
            self.total_length,
            self.identification,
            (self.flags << 13) | self.fragment_offset,
            self.ttl,
            self.protocol,
            self.checksum if checksum is None else checksum,
            self.src,
            self.dst,
        )

    def computed_checksum(self) -> int:
        return ones_complement_checksum(self.pack(checksum=0))


@dataclass(frozen=True)
class UdpHeader:
    src_port: int = 16384
    dst_port: int = 16384
    length: int = UDP_HEADER_LEN + RTP_HEADER_LEN
    checksum: int = 0


@dataclass(frozen=True)
class RtpHeader:
    version: int = 2
    padding: int = 0
    extension: int = 0
    marker: int = 0
    cc: int = 0
    payload_type: int = 0
    sequence_number: int = 0
    timestamp: int = 0
    ssrc: int = 0


@dataclass(frozen=True)
class VoicePacket:
    ip: Ipv4Header
    udp: UdpHeader
    rtp: RtpHeader
    payload: bytes = b""
    # Only meaningful for parsed packets; excluded from equality.
    checksum_ok: bool = field(default=True, compare=False)

    @property
    def wire_length(self) -> int:
        return HEADERS_LEN + len(self.payload)


@dataclass(frozen=True)
class StreamParams:
    """Per-direction constants of a voice stream."""

    src: int = 0x0A000001
    dst: int = 0x0A000002
    src_port: int = 16384
    dst_port: int = 16384
    ssrc: int = 0x1234ABCD
    payload_type: int = 0
    ttl: int = 64


def with_valid_checksum(p: VoicePacket) -> VoicePacket:
    """Return ``p`` with its IPv4 header checksum recomputed."""
    ip = replace(p.ip, checksum=p.ip.computed_checksum())
    return replace(p, ip=ip, checksum_ok=True)


def build_packet(seq: int, ts: int, payload: bytes, stream: StreamParams = StreamParams()) -> VoicePacket:
    if len(payload) > MAX_PAYLOAD:
        raise ValueError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    payload = bytes(payload)
    ip = Ipv4Header(
        total_length=HEADERS_LEN + len(payload),
        identification=seq & 0xFFFF,
        ttl=stream.ttl,
        src=stream.src,
        dst=stream.dst,
    )
    udp = UdpHeader(
        src_port=stream.src_port,
        dst_port=stream.dst_port,
        length=UDP_HEADER_LEN + RTP_HEADER_LEN + len(payload),
    )
    rtp = RtpHeader(
        payload_type=stream.payload_type,
        sequence_number=seq & 0xFFFF,
        timestamp=ts & 0xFFFFFFFF,
        ssrc=stream.ssrc,
    )
    return with_valid_checksum(VoicePacket(ip, udp, rtp, payload))


def serialize(p: VoicePacket) -> bytes:
    ip = p.ip.pack(checksum=p.ip.computed_checksum())
    udp = _UDP.pack(p.udp.src_port, p.udp.dst_port, p.udp.length, p.udp.checksum)
    r = p.rtp
    rtp = _RTP.pack(
        (r.version << 6) | (r.padding << 5) | (r.extension << 4) | r.cc,
        (r.marker << 7) | r.payload_type,
        r.sequence_number,
        r.timestamp,
        r.ssrc,
    )
    return ip + udp + rtp + p.payload


def parse(data: bytes) -> VoicePacket:
    """Decode a wire image.

    A bad IPv4 checksum does not raise; it is reported through
    ``checksum_ok`` so tampered packets can still be examined.
    """
    data = bytes(data)
    if len(data) < HEADERS_LEN:
        raise TruncatedPacket(f"need at least {HEADERS_LEN} bytes, got {len(data)}")
    vihl, tos, total_length, ident, flags_frag, ttl, proto, csum, src, dst = _IP.unpack_from(data)
    version, ihl = vihl >> 4, vihl & 0x0F
    if version != 4:
        raise PacketError(f"bad IP version {version}")
    if ihl != 5:
        raise PacketError("IP options are not supported")
    if proto != IPPROTO_UDP:
        raise PacketError(f"not a UDP datagram (protocol {proto})")
    if total_length > len(data):
        raise TruncatedPacket(f"IP total length {total_length} exceeds {len(data)} bytes")
    if total_length < HEADERS_LEN:
        raise PacketError(f"IP total length {total_length} too small for IP/UDP/RTP")
    ip = Ipv4Header(
        version, ihl, tos, total_length, ident, flags_frag >> 13, flags_frag & 0x1FFF,
        ttl, proto, csum, src, dst,
    )
    sport, dport, ulen, ucsum = _UDP.unpack_from(data, IP_HEADER_LEN)
    if ulen != total_length - IP_HEADER_LEN:
        raise PacketError(f"UDP length {ulen} inconsistent with IP total length")
    b0, b1, seq, ts, ssrc = _RTP.unpack_from(data, IP_HEADER_LEN + UDP_HEADER_LEN)
    if b0 >> 6 != 2:
        raise PacketError(f"bad RTP version {b0 >> 6}")
    rtp = RtpHeader(
        version=b0 >> 6,
        padding=(b0 >> 5) & 1,
        extension=(b0 >> 4) & 1,
        cc=b0 & 0x0F,
        marker=b1 >> 7,
        payload_type=b1 & 0x7F,
        sequence_number=seq,
        timestamp=ts,
        ssrc=ssrc,
    )
    payload = data[HEADERS_LEN:total_length]
    ok = ones_complement_checksum(data[:IP_HEADER_LEN]) == 0
    return VoicePacket(ip, UdpHeader(sport, dport, ulen, ucsum), rtp, payload, checksum_ok=ok)


def pcap_write(
    packets: Iterable[VoicePacket],
    path,
    timestamps_us: Optional[Sequence[int]] = None,
) -> None:
    """Write a classic pcap file with raw-IP link type.

    Record timestamps default to a 20 ms spacing starting at zero.
    """
    packets = list(packets)
    if timestamps_us is None:
        timestamps_us = [i * 20_000 for i in range(len(packets))]
    if len(timestamps_us) != len(packets):
        raise ValueError("one timestamp per packet required")
    try:
        with open(path, "wb") as f:
            f.write(_PCAP_GLOBAL.pack(PCAP_MAGIC, 2, 4, 0, 0, 65535, LINKTYPE_RAW))
            for pkt, ts in zip(packets, timestamps_us):
                wire = serialize(pkt)
                f.write(_PCAP_RECORD.pack(ts // 1_000_000, ts % 1_000_000, len(wire), len(wire)))
                f.write(wire)
    except OSError as exc:
        raise PcapError(f"cannot write {path}: {exc}") from exc


def pcap_read(path) -> List[VoicePacket]:
    return [pkt for _, pkt in pcap_read_records(path)]


def pcap_read_records(path):
    """Return ``(timestamp_us, packet)`` pairs from a pcap file."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise PcapError(f"cannot read {path}: {exc}") from exc
    if len(data) < _PCAP_GLOBAL.size:
        raise PcapError("file too short for a pcap global header")
    magic = struct.unpack_from("!I", data)[0]
    if magic == PCAP_MAGIC:
        order = "!"
    elif magic == 0xD4C3B2A1:
        order = "<"
    else:
        raise PcapError(f"bad pcap magic 0x{magic:08x}")
    _, _, _, _, _, _, linktype = struct.unpack_from(order + "IHHiIII", data)
    if linktype != LINKTYPE_RAW:
        raise PcapError(f"unsupported link type {linktype}")
    records = []
    offset = _PCAP_GLOBAL.size
    rec = struct.Struct(order + "IIII")
    while offset < len(data):
        if offset + rec.size > len(data):
            raise PcapError("truncated record header")
        sec, usec, incl, _orig = rec.unpack_from(data, offset)
        offset += rec.size
        if offset + incl > len(data):
            raise PcapError("truncated record body")
        try:
            pkt = parse(data[offset:offset + incl])
        except PacketError as exc:
            raise PcapError(f"bad packet at offset {offset}: {exc}") from exc
        records.append((sec * 1_000_000 + usec, pkt))
        offset += incl
    return records
