"""Helpers for the tuple-of-ints bit sequences used throughout the package.

Bit sequences are MSB-first: ``int_to_bits(6, 4) == (0, 1, 1, 0)``.
"""
from typing import Iterable, Sequence, Tuple

Bits = Tuple[int, ...]


def int_to_bits(value: int, width: int) -> Bits:
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


def bits_to_int(bits: Iterable[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | (b & 1)
    return value


def bits_to_bytes(bits: Sequence[int]) -> bytes:
    """Pack bits big-endian, zero-padding the final byte on the right."""
    pad = (-len(bits)) % 8
    value = bits_to_int(tuple(bits) + (0,) * pad)
    return value.to_bytes((len(bits) + pad) // 8, "big")


def bytes_to_bits(data: bytes) -> Bits:
    return int_to_bits(int.from_bytes(data, "big"), 8 * len(data)) if data else ()
