import random

import pytest
from hypothesis import given, settings

from voipstego.packet_model import (
    HEADERS_LEN,
    PacketError,
    PcapError,
    TruncatedPacket,
    build_packet,
    parse,
    pcap_read,
    pcap_write,
    serialize,
)
from conftest import random_packet, voice_packets
from oracles import checksum_oracle


def test_build_lengths():
    p = build_packet(0, 0, bytes(20))
    assert p.ip.total_length == 60
    assert p.udp.length == 8 + 12 + 20
    assert len(serialize(p)) == 60


def test_build_copies_fields():
    p = build_packet(1, 160, bytes(20))
    assert p.rtp.sequence_number == 1
    assert p.rtp.timestamp == 160
    assert p.rtp.version == 2 and p.ip.version == 4


def test_payload_limit():
    build_packet(0, 0, bytes(1400))
    with pytest.raises(ValueError):
        build_packet(0, 0, bytes(1401))


def test_minimal_wire_image():
    assert len(serialize(build_packet(0, 0, b""))) == HEADERS_LEN == 40


def test_identification_big_endian():
    wire = serialize(build_packet(0x0013, 0, b""))
    assert wire[4:6] == b"\x00\x13"


@settings(max_examples=1000)
@given(voice_packets())
def test_round_trip(p):
    assert parse(serialize(p)) == p


@given(voice_packets())
def test_checksum_validates_with_oracle(p):
    wire = serialize(p)
    header = wire[:20]
    stored = int.from_bytes(header[10:12], "big")
    assert stored == checksum_oracle(header[:10] + b"\0\0" + header[12:])


def test_truncated():
    wire = serialize(build_packet(0, 0, b""))
    with pytest.raises(TruncatedPacket):
        parse(wire[:39])
    with pytest.raises(TruncatedPacket):
        parse(serialize(build_packet(0, 0, bytes(10)))[:45])


def test_bad_version():
    wire = bytearray(serialize(build_packet(0, 0, b"")))
    wire[0] = 0x65
    with pytest.raises(PacketError):
        parse(bytes(wire))


def test_flipped_checksum_is_reported_not_fatal():
    rng = random.Random(1)
    for _ in range(200):
        p = random_packet(rng)
        wire = bytearray(serialize(p))
        byte = rng.choice((10, 11))
        wire[byte] ^= 1 << rng.randrange(8)
        q = parse(bytes(wire))
        assert not q.checksum_ok
        assert q.rtp == p.rtp and q.payload == p.payload
    assert parse(serialize(p)).checksum_ok


def test_pcap_sizes(tmp_path):
    path = tmp_path / "empty.pcap"
    pcap_write([], path)
    assert path.stat().st_size == 24
    path = tmp_path / "one.pcap"
    pcap_write([build_packet(0, 0, bytes(20))], path)
    assert path.stat().st_size == 24 + 16 + 60
    head = path.read_bytes()
    assert head[:4] == bytes.fromhex("a1b2c3d4")
    assert int.from_bytes(head[20:24], "big") == 101


def test_pcap_round_trip(tmp_path):
    rng = random.Random(2)
    packets = [random_packet(rng) for _ in range(500)]
    path = tmp_path / "trace.pcap"
    pcap_write(packets, path)
    assert pcap_read(path) == packets


def test_pcap_errors(tmp_path):
    with pytest.raises(PcapError):
        pcap_read(tmp_path / "missing.pcap")
    path = tmp_path / "eth.pcap"
    pcap_write([], path)
    data = bytearray(path.read_bytes())
    data[20:24] = (1).to_bytes(4, "big")
    path.write_bytes(bytes(data))
    with pytest.raises(PcapError, match="link type"):
        pcap_read(path)


def test_pcap_little_endian_readable(tmp_path):
    import struct

    p = build_packet(5, 800, bytes(20))
    wire = serialize(p)
    data = struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, 101)
    data += struct.pack("<IIII", 1, 0, len(wire), len(wire)) + wire
    path = tmp_path / "le.pcap"
    path.write_bytes(data)
    assert pcap_read(path) == [p]
