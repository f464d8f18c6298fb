"""Watermark channel: parameter bits carried inside voice payloads.

The reference codec writes one bit into the least significant bit of each
leading payload byte. It stands in for a real audio watermarking scheme;
the protocol only relies on a per-packet bit capacity and an error rate,
which :class:`ChannelModel` supplies.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Sequence

from . import kernels
from .bits import Bits

PACKETS_PER_SECOND = 50


class Scheme(enum.Enum):
    LSB_REFERENCE = "lsb_reference"
    NULL = "null"


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class WatermarkCodec:
    capacity_bits_per_packet: int = 10
    scheme: Scheme = Scheme.LSB_REFERENCE

    def __post_init__(self):
        if self.capacity_bits_per_packet < 1:
            raise ValueError("capacity must be a positive number of bits")

    @classmethod
    def from_rate(cls, bits_per_second: float, scheme: Scheme = Scheme.LSB_REFERENCE) -> "WatermarkCodec":
        """Codec for a bit/s watermark rate at the default 50 packets/s, at least 1 bit/packet."""
        return cls(max(1, round(bits_per_second / PACKETS_PER_SECOND)), scheme)

    @property
    def effective_capacity(self) -> int:
        return 0 if self.scheme is Scheme.NULL else self.capacity_bits_per_packet


@dataclass(frozen=True)
class ChannelModel:
    packet_loss_prob: float = 0.0
    watermark_bitflip_prob: float = 0.0
    reorder_window: int = 0
    delay_ms: int = 40
    delay_jitter_ms: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("packet_loss_prob", "watermark_bitflip_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.reorder_window < 0 or self.delay_ms < 0 or self.delay_jitter_ms < 0:
            raise ValueError("reorder window and delays must be non-negative")

    def rng(self) -> random.Random:
        return random.Random(self.rng_seed)


def embed_bits(payload: bytes, bits: Sequence[int], codec: WatermarkCodec) -> bytes:
    if len(bits) > codec.capacity_bits_per_packet:
        raise CapacityError(f"{len(bits)} bits exceed capacity {codec.capacity_bits_per_packet}")
    if codec.scheme is Scheme.NULL:
        return bytes(payload)
    if len(bits) > len(payload):
        raise CapacityError(f"payload of {len(payload)} bytes cannot hold {len(bits)} bits")
    return kernels.lsb_embed(payload, bits)


def extract_bits(payload: bytes, count: int, codec: WatermarkCodec) -> Bits:
    if count > codec.capacity_bits_per_packet:
        raise CapacityError(f"{count} bits exceed capacity {codec.capacity_bits_per_packet}")
    if codec.scheme is Scheme.NULL:
        return ()
    if count > len(payload):
        raise CapacityError(f"payload of {len(payload)} bytes cannot hold {count} bits")
    return kernels.lsb_extract(payload, count)


def channel_degrade(bits: Sequence[int], model: ChannelModel, rng: random.Random) -> Bits:
    """Flip each bit independently with ``model.watermark_bitflip_prob``."""
    p = model.watermark_bitflip_prob
    if p == 0.0:
        return tuple(bits)
    if p == 1.0:
        return tuple(b ^ 1 for b in bits)
    return tuple(b ^ 1 if rng.random() < p else b for b in bits)
