"""Protocol parameters, fragmentation into per-packet slices and reassembly."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .bits import Bits, bits_to_int, int_to_bits
from .covert_header import ControlHeader

SENDER = 1
RECEIVER = 0


class Kind(enum.Enum):
    INFORMATIONAL = "informational"
    SECURITY_VOICE = "security_voice"
    SECURITY_CHAIN = "security_chain"


@dataclass(frozen=True)
class ParameterCode:
    code: int
    name: str
    width_bits: int

    @property
    def assigned(self) -> bool:
        return self.width_bits > 0

    @property
    def kind(self) -> Kind:
        return KIND_OF_CODE.get(self.code, Kind.INFORMATIONAL)


AUTH = 0b0001
LSR = 0b0010
DLSR = 0b0011
JITTER = 0b0100
EXT_HIGHEST_SEQ = 0b0101
CHAIN_AUTH = 0b0110
CUMULATIVE_LOST = 0b0111
FRACTION_LOST = 0b1000
SENDER_PACKET_COUNT = 0b1001
RTP_TIMESTAMP = 0b1010
NTP_TIMESTAMP = 0b1011

PARAMETER_CODES: Dict[int, ParameterCode] = {
    pc.code: pc
    for pc in (
        ParameterCode(AUTH, "voice_auth", 32),
        ParameterCode(LSR, "lsr", 32),
        ParameterCode(DLSR, "dlsr", 32),
        ParameterCode(JITTER, "interarrival_jitter", 32),
        ParameterCode(EXT_HIGHEST_SEQ, "extended_highest_seq", 32),
        ParameterCode(CHAIN_AUTH, "chain_auth", 32),
        ParameterCode(CUMULATIVE_LOST, "cumulative_lost", 24),
        ParameterCode(FRACTION_LOST, "fraction_lost", 8),
        ParameterCode(SENDER_PACKET_COUNT, "sender_packet_count", 32),
        ParameterCode(RTP_TIMESTAMP, "rtp_timestamp", 32),
        ParameterCode(NTP_TIMESTAMP, "ntp_timestamp", 64),
    )
}
CODE_BY_NAME = {pc.name: pc for pc in PARAMETER_CODES.values()}

KIND_OF_CODE = {AUTH: Kind.SECURITY_VOICE, CHAIN_AUTH: Kind.SECURITY_CHAIN}


def parameter_of_code(code: int) -> ParameterCode:
    """Look up a 4-bit code; unknown codes come back with ``assigned == False``."""
    return PARAMETER_CODES.get(code, ParameterCode(code, "unassigned", 0))


@dataclass(frozen=True)
class Parameter:
    code: ParameterCode
    side: int
    value_bits: Bits

    def __post_init__(self):
        if not self.code.assigned:
            raise ValueError(f"code {self.code.code:04b} is unassigned")
        if len(self.value_bits) != self.code.width_bits:
            raise ValueError(
                f"{self.code.name} needs {self.code.width_bits} bits, got {len(self.value_bits)}"
            )
        if self.side not in (SENDER, RECEIVER):
            raise ValueError("side must be 0 or 1")

    @classmethod
    def from_value(cls, code: int, side: int, value: int) -> "Parameter":
        pc = parameter_of_code(code)
        return cls(pc, side, int_to_bits(value, pc.width_bits))

    @property
    def kind(self) -> Kind:
        return self.code.kind

    @property
    def value(self) -> int:
        return bits_to_int(self.value_bits)


@dataclass(frozen=True)
class Fragment:
    header: ControlHeader
    bits: Bits


def fragment_parameter(param: Parameter, capacity: int) -> List[Fragment]:
    if capacity < 1:
        raise ValueError("capacity must be at least one bit")
    bits = param.value_bits
    out = []
    for start in range(0, len(bits), capacity):
        header = ControlHeader(p=param.code.code, s=param.side, c=1 if start == 0 else 0)
        out.append(Fragment(header, bits[start:start + capacity]))
    return out


class PushStatus(enum.Enum):
    COLLECTING = "collecting"
    COMPLETE = "complete"
    PROTOCOL_ERROR = "protocol_error"


@dataclass(frozen=True)
class PushResult:
    status: PushStatus
    parameter: Optional[Parameter] = None
    error: str = ""
    # code of a parameter abandoned by this push, if any
    aborted: Optional[int] = None


@dataclass
class ReassemblyBuffer:
    """Collects the fragments of one side's parameter stream."""

    current: Optional[ParameterCode] = None
    side: Optional[int] = None
    accumulated: List[int] = field(default_factory=list)
    completed: int = 0
    aborted: int = 0

    @property
    def in_progress(self) -> bool:
        return self.current is not None

    def remaining(self) -> int:
        return self.current.width_bits - len(self.accumulated) if self.current else 0

    def reset(self) -> Optional[int]:
        """Drop any incomplete parameter; return its code if there was one."""
        dropped = self.current.code if self.current else None
        if dropped is not None:
            self.aborted += 1
        self.current = None
        self.side = None
        self.accumulated = []
        return dropped

    def push(self, h: ControlHeader, bits: Sequence[int]) -> PushResult:
        return reassemble_push(self, h, bits)


def reassemble_push(buf: ReassemblyBuffer, h: ControlHeader, bits: Sequence[int]) -> PushResult:
    aborted = None
    if h.c == 1:
        aborted = buf.reset()
        pc = parameter_of_code(h.p)
        if not pc.assigned:
            return PushResult(PushStatus.PROTOCOL_ERROR, error=f"unassigned code {h.p:04b}", aborted=aborted)
        buf.current, buf.side = pc, h.s
    else:
        if buf.current is None:
            return PushResult(PushStatus.PROTOCOL_ERROR, error="continuation without start")
        if (buf.current.code, buf.side) != (h.p, h.s):
            msg = f"continuation of {h.p:04b}/{h.s} while {buf.current.code:04b}/{buf.side} in progress"
            code = buf.reset()
            return PushResult(PushStatus.PROTOCOL_ERROR, error=msg, aborted=code)
    if len(bits) > buf.remaining():
        code = buf.reset()
        return PushResult(PushStatus.PROTOCOL_ERROR, error="fragment overflows parameter width", aborted=code)
    buf.accumulated.extend(bits)
    if buf.remaining() == 0:
        param = Parameter(buf.current, buf.side, tuple(buf.accumulated))
        buf.current, buf.side, buf.accumulated = None, None, []
        buf.completed += 1
        return PushResult(PushStatus.COMPLETE, parameter=param, aborted=aborted)
    return PushResult(PushStatus.COLLECTING, aborted=aborted)


class Reassembler:
    """Independent buffers for sender-report (s=1) and receiver-report (s=0) streams.

    With ``exclusive=True`` at most one parameter is in flight across both
    sides, matching a sender that transmits parameters strictly one after
    another: a packet that does not continue the in-flight parameter
    abandons it.
    """

    def __init__(self, exclusive: bool = False):
        self.exclusive = exclusive
        self.buffers: Dict[int, ReassemblyBuffer] = {SENDER: ReassemblyBuffer(), RECEIVER: ReassemblyBuffer()}

    def buffer_for(self, side: int) -> ReassemblyBuffer:
        return self.buffers[side]

    def expected_bits(self, h: ControlHeader, capacity: int) -> int:
        """How many watermark bits the packet carrying ``h`` should hold."""
        if h.c == 1:
            width = parameter_of_code(h.p).width_bits
        else:
            buf = self.buffers[h.s]
            if buf.current is None or buf.current.code != h.p:
                return 0
            width = buf.remaining()
        return min(capacity, width)

    def push(self, h: ControlHeader, bits: Sequence[int]) -> PushResult:
        other_aborted = None
        if self.exclusive:
            other = self.buffers[1 - h.s]
            if other.in_progress:
                other_aborted = other.reset()
        result = reassemble_push(self.buffers[h.s], h, bits)
        if other_aborted is not None and result.aborted is None:
            result = PushResult(result.status, result.parameter, result.error, other_aborted)
        return result

    def reset(self) -> List[int]:
        return [c for c in (b.reset() for b in self.buffers.values()) if c is not None]


def fragment_count(width: int, capacity: int) -> int:
    return -(-width // capacity)

