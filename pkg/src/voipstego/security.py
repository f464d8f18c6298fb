"""Security parameters: voice/source authentication and chained authentication.

Both kinds are 32-bit values. When the material to authenticate is longer
than that it is hashed, and a session-secret :class:`BitSelectionPattern`
picks which 32 digest bits are transmitted.
"""
from __future__ import annotations

import hashlib
from random import Random
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Sequence, Tuple

from . import kernels
from .bits import bits_to_bytes, bytes_to_bits, int_to_bits
from .pdu import AUTH, CHAIN_AUTH, SENDER, Kind, Parameter, parameter_of_code

HashFn = Callable[[bytes], bytes]
SELECTED_BITS = 32


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class BitSelectionPattern:
    indices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(self.indices) != SELECTED_BITS:
            raise ValueError(f"pattern needs {SELECTED_BITS} indices, got {len(self.indices)}")
        if len(set(self.indices)) != SELECTED_BITS:
            raise ValueError("pattern indices must be distinct")
        if min(self.indices) < 0:
            raise ValueError("pattern indices must be non-negative")

    @classmethod
    def identity(cls) -> "BitSelectionPattern":
        return cls(tuple(range(SELECTED_BITS)))

    @classmethod
    def random(cls, rng: Random, digest_bits: int = 256) -> "BitSelectionPattern":
        return cls(tuple(rng.sample(range(digest_bits), SELECTED_BITS)))


def select_bits(digest: bytes, pattern: BitSelectionPattern) -> int:
    """Output bit ``j`` (MSB first) is digest bit ``pattern.indices[j]``."""
    if max(pattern.indices) >= 8 * len(digest):
        raise IndexError(f"pattern index {max(pattern.indices)} beyond {8 * len(digest)}-bit digest")
    return kernels.gather_bits(digest, pattern.indices)


@dataclass(frozen=True)
class VoiceAuthInput:
    user_global_id: bytes
    voice_features: bytes = b""

    def __post_init__(self):
        if not self.user_global_id:
            raise ValueError("user global id must not be empty")


def raw_payload_features(payloads: Iterable[bytes], length: int = 8) -> bytes:
    """Reference feature extractor: a digest of the voice frames.

    Watermark LSBs are masked off so the features of a frame do not depend on
    what it carries.
    """
    h = hashlib.sha256()
    for frame in payloads:
        h.update(bytes(b & 0xFE for b in frame))
    return h.digest()[:length]


def compute_voice_auth_param(
    inp: VoiceAuthInput,
    pattern: BitSelectionPattern,
    side: int = SENDER,
    hash_fn: HashFn = sha256,
) -> Parameter:
    material = inp.user_global_id + inp.voice_features
    if 8 * len(material) <= SELECTED_BITS:
        bits = bytes_to_bits(material)
        bits = bits + (0,) * (SELECTED_BITS - len(bits))
    else:
        bits = int_to_bits(select_bits(hash_fn(material), pattern), SELECTED_BITS)
    return Parameter(parameter_of_code(AUTH), side, bits)


@dataclass
class ChainBuffer:
    """Parameters awaiting coverage by the next chain-auth parameter."""

    n: int
    blocks: List[Parameter] = field(default_factory=list)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("chain length n must be at least 2")

    @property
    def full(self) -> bool:
        return len(self.blocks) == self.n - 1

    def push(self, param: Parameter) -> None:
        if param.kind is Kind.SECURITY_CHAIN:
            raise ValueError("chain-auth parameters are not chained themselves")
        if self.full:
            raise OverflowError(f"chain buffer already holds {self.n - 1} blocks")
        self.blocks.append(param)

    def clear(self) -> None:
        self.blocks.clear()


def chain_digest_value(blocks: Sequence[Parameter], pattern: BitSelectionPattern, hash_fn: HashFn = sha256) -> int:
    bits: Tuple[int, ...] = ()
    for b in blocks:
        bits += b.value_bits
    return select_bits(hash_fn(bits_to_bytes(bits)), pattern)


def compute_chain_auth_param(
    buf: ChainBuffer,
    pattern: BitSelectionPattern,
    side: int = SENDER,
    hash_fn: HashFn = sha256,
) -> Parameter:
    if not buf.full:
        raise ValueError(f"chain buffer holds {len(buf.blocks)} of {buf.n - 1} blocks")
    value = chain_digest_value(buf.blocks, pattern, hash_fn)
    buf.clear()
    return Parameter(parameter_of_code(CHAIN_AUTH), side, int_to_bits(value, SELECTED_BITS))


def verify_security_param(received: Parameter, locally_recomputed: int) -> bool:
    if received.kind is Kind.INFORMATIONAL:
        raise ValueError(f"{received.code.name} is not a security parameter")
    return received.value == locally_recomputed
