"""The 6-bit P/S/C control header and its placement in packet header fields."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, List, Sequence, Tuple

from .packet_model import FLAG_DF, VoicePacket, with_valid_checksum

HEADER_BITS = 6


class Layer(enum.Enum):
    IP = "ip"
    UDP = "udp"
    RTP = "rtp"


# (layer, field) -> (field width, bit indices usable as carriers; 0 = LSB)
ALLOWED_CARRIERS: Dict[Tuple[Layer, str], Tuple[int, FrozenSet[int]]] = {
    (Layer.IP, "tos"): (8, frozenset(range(8))),
    (Layer.IP, "identification"): (16, frozenset(range(16))),
    # reserved flag is the most significant of the three flag bits
    (Layer.IP, "flags"): (3, frozenset({2})),
    # usable only while DF is set, i.e. the datagram is never fragmented
    (Layer.IP, "fragment_offset"): (13, frozenset(range(13))),
    (Layer.UDP, "checksum"): (16, frozenset(range(16))),
    (Layer.RTP, "padding"): (1, frozenset({0})),
}

_DF_DEPENDENT = {(Layer.IP, "fragment_offset")}


class InvalidCarrierMap(ValueError):
    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class ControlHeader:
    p: int
    s: int
    c: int

    def __post_init__(self):
        if not (0 <= self.p < 16 and self.s in (0, 1) and self.c in (0, 1)):
            raise ValueError(f"invalid control header {self!r}")


@dataclass(frozen=True)
class CarrierSlot:
    layer: Layer
    field: str
    bit_index: int

    @classmethod
    def from_config(cls, entry) -> "CarrierSlot":
        layer, field_name, bit = entry
        return cls(Layer(str(layer).lower()), str(field_name), int(bit))

    def to_config(self) -> list:
        return [self.layer.value, self.field, self.bit_index]


@dataclass(frozen=True)
class CarrierMap:
    slots: Tuple[CarrierSlot, ...]

    @classmethod
    def from_config(cls, entries) -> "CarrierMap":
        return cls(tuple(CarrierSlot.from_config(e) for e in entries))

    def to_config(self) -> list:
        return [s.to_config() for s in self.slots]


DEFAULT_CARRIER_MAP = CarrierMap(
    tuple(CarrierSlot(Layer.IP, "identification", i) for i in range(HEADER_BITS))
)


def covert_capacity(df_set: bool = True) -> int:
    """Number of header bits usable as carriers in one packet."""
    return sum(
        len(bits)
        for key, (_, bits) in ALLOWED_CARRIERS.items()
        if df_set or key not in _DF_DEPENDENT
    )


def pack_header(h: ControlHeader) -> int:
    return (h.p << 2) | (h.s << 1) | h.c


def unpack_header(v: int) -> ControlHeader:
    if not 0 <= v < 64:
        raise ValueError(f"control header value {v} is not a 6-bit value")
    return ControlHeader(p=v >> 2, s=(v >> 1) & 1, c=v & 1)


def validate_carrier_map(cmap: CarrierMap) -> List[str]:
    """Return a list of violations; an empty list means the map is usable."""
    violations = []
    if len(cmap.slots) != HEADER_BITS:
        violations.append(f"map has {len(cmap.slots)} slots, expected {HEADER_BITS}")
    seen = set()
    for i, slot in enumerate(cmap.slots):
        key = (slot.layer, slot.field)
        allowed = ALLOWED_CARRIERS.get(key)
        if allowed is None:
            violations.append(f"slot {i}: {slot.layer.value}.{slot.field} is not an allowed carrier field")
        elif slot.bit_index not in allowed[1]:
            violations.append(
                f"slot {i}: bit {slot.bit_index} of {slot.layer.value}.{slot.field} is not an allowed carrier bit"
            )
        ident = (slot.layer, slot.field, slot.bit_index)
        if ident in seen:
            violations.append(f"slot {i}: duplicate slot {slot.layer.value}.{slot.field}[{slot.bit_index}]")
        seen.add(ident)
    return violations


def _check(cmap: CarrierMap) -> None:
    violations = validate_carrier_map(cmap)
    if violations:
        raise InvalidCarrierMap(violations)


def _layer_header(p: VoicePacket, layer: Layer):
    return {Layer.IP: p.ip, Layer.UDP: p.udp, Layer.RTP: p.rtp}[layer]


def embed_control_bits(p: VoicePacket, h: ControlHeader, cmap: CarrierMap = DEFAULT_CARRIER_MAP) -> VoicePacket:
    """Overwrite the carrier bits of ``p`` with the packed header ``h``.

    Slot ``i`` receives packed-header bit ``i`` (bit 0 = ``c``).
    """
    _check(cmap)
    if any((s.layer, s.field) in _DF_DEPENDENT for s in cmap.slots) and not p.ip.flags & FLAG_DF:
        raise ValueError("fragment_offset carries data only when DF is set")
    value = pack_header(h)
    fields: Dict[Tuple[Layer, str], int] = {}
    headers = {Layer.IP: p.ip, Layer.UDP: p.udp, Layer.RTP: p.rtp}
    for i, slot in enumerate(cmap.slots):
        key = (slot.layer, slot.field)
        old = fields[key] if key in fields else getattr(headers[slot.layer], slot.field)
        bit = (value >> i) & 1
        fields[key] = (old & ~(1 << slot.bit_index)) | (bit << slot.bit_index)
    return with_valid_checksum(_apply_fields(p, fields))


def _apply_fields(p: VoicePacket, fields: Dict[Tuple[Layer, str], int]) -> VoicePacket:
    per_layer: Dict[Layer, Dict[str, int]] = {}
    for (layer, name), v in fields.items():
        per_layer.setdefault(layer, {})[name] = v
    return replace(
        p,
        ip=replace(p.ip, **per_layer[Layer.IP]) if Layer.IP in per_layer else p.ip,
        udp=replace(p.udp, **per_layer[Layer.UDP]) if Layer.UDP in per_layer else p.udp,
        rtp=replace(p.rtp, **per_layer[Layer.RTP]) if Layer.RTP in per_layer else p.rtp,
    )


def extract_control_bits(p: VoicePacket, cmap: CarrierMap = DEFAULT_CARRIER_MAP) -> ControlHeader:
    value = 0
    for i, slot in enumerate(cmap.slots):
        field_value = getattr(_layer_header(p, slot.layer), slot.field)
        value |= ((field_value >> slot.bit_index) & 1) << i
    return unpack_header(value)


def scrub_carriers(p: VoicePacket) -> VoicePacket:
    """Zero every allowed carrier bit, as a normalising middlebox would."""
    headers = {Layer.IP: p.ip, Layer.UDP: p.udp, Layer.RTP: p.rtp}
    fields: Dict[Tuple[Layer, str], int] = {}
    for (layer, name), (_, bits) in ALLOWED_CARRIERS.items():
        if (layer, name) in _DF_DEPENDENT and not p.ip.flags & FLAG_DF:
            continue
        mask = sum(1 << b for b in bits)
        fields[(layer, name)] = getattr(headers[layer], name) & ~mask
    return with_valid_checksum(_apply_fields(p, fields))
