"""Deterministic discrete-event simulation of a two-party protocol call.

Two endpoints, A and B, each send one voice packet per 20 ms slot. Every
packet carries one fragment of the sender's current parameter: the control
header in covert header bits and the value bits in the voice watermark.
Packets pass an optional attacker and a lossy channel before the peer
decodes them, verifies completed parameters and updates its Level of Trust.

All randomness comes from ``random.Random`` instances seeded from the
session seed, so a configuration fully determines the report.
"""
from __future__ import annotations

import enum
import heapq
import json
import random
from collections import OrderedDict, deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Deque, Dict, List, Optional, Sequence, Tuple

from . import kernels
from .covert_header import (
    DEFAULT_CARRIER_MAP,
    CarrierMap,
    ControlHeader,
    embed_control_bits,
    extract_control_bits,
    pack_header,
    scrub_carriers,
    validate_carrier_map,
)
from .lot import LoTConfig, LoTState, Status, lot_init, lot_on_parameter, lot_on_tick
from .metrics import (
    RECEIVER_CODES,
    SENDER_CODES,
    ReceptionStats,
    SenderStats,
    ntp_from_ms,
    on_sender_report,
    receiver_value,
    sender_value,
    update_on_packet,
)
from .packet_model import (
    StreamParams,
    VoicePacket,
    build_packet,
    pcap_write,
    serialize,
)
from .pdu import (
    CODE_BY_NAME,
    JITTER,
    NTP_TIMESTAMP,
    RECEIVER,
    SENDER,
    Fragment,
    Kind,
    Parameter,
    PushResult,
    PushStatus,
    Reassembler,
    fragment_parameter,
    parameter_of_code,
)
from .security import (
    BitSelectionPattern,
    ChainBuffer,
    VoiceAuthInput,
    chain_digest_value,
    compute_chain_auth_param,
    compute_voice_auth_param,
    raw_payload_features,
)
from .watermark_channel import ChannelModel, Scheme, WatermarkCodec, channel_degrade, embed_bits, extract_bits

SAMPLES_PER_MS = 8
HISTORY_PACKETS = 512

DEFAULT_SCHEDULE: Tuple[Tuple[int, int], ...] = (
    (JITTER, RECEIVER),
    (CODE_BY_NAME["fraction_lost"].code, RECEIVER),
    (CODE_BY_NAME["cumulative_lost"].code, RECEIVER),
    (CODE_BY_NAME["extended_highest_seq"].code, RECEIVER),
    (NTP_TIMESTAMP, SENDER),
    (CODE_BY_NAME["rtp_timestamp"].code, SENDER),
    (CODE_BY_NAME["sender_packet_count"].code, SENDER),
    (CODE_BY_NAME["lsr"].code, RECEIVER),
    (CODE_BY_NAME["dlsr"].code, RECEIVER),
)


class ConfigError(ValueError):
    pass


class AttackKind(enum.Enum):
    NONE = "none"
    HEADER_SCRUB = "header_scrub"
    PARAM_TAMPER = "param_tamper"
    PACKET_DROP = "packet_drop"
    REPLAY = "replay"


ATTACK_TARGETS = ("all", "security", "continuation")
DIRECTIONS = ("A>B", "B>A")


@dataclass(frozen=True)
class AttackerModel:
    kind: AttackKind = AttackKind.NONE
    rate: float = 1.0
    # which packets are eligible: all, those carrying security parameters,
    # or those carrying a continuation fragment
    targets: str = "all"
    direction: str = "both"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"attacker rate must lie in [0, 1], got {self.rate}")
        if self.targets not in ATTACK_TARGETS:
            raise ConfigError(f"attacker targets must be one of {ATTACK_TARGETS}")
        if self.direction not in ("both",) + DIRECTIONS:
            raise ConfigError("attacker direction must be 'both', 'A>B' or 'B>A'")

    def applies_to(self, direction: str) -> bool:
        return self.kind is not AttackKind.NONE and self.direction in ("both", direction)


@dataclass(frozen=True)
class SessionConfig:
    carrier_map: CarrierMap = DEFAULT_CARRIER_MAP
    codec: WatermarkCodec = WatermarkCodec()
    channel: ChannelModel = ChannelModel()
    lot: LoTConfig = LoTConfig()
    # trust value both sides start from; None means lot.x
    lot_start: Optional[int] = None
    chain_n: int = 4
    voice_pattern: Optional[BitSelectionPattern] = None
    chain_pattern: Optional[BitSelectionPattern] = None
    schedule: Tuple[Tuple[int, int], ...] = DEFAULT_SCHEDULE
    # every m-th non-chain parameter is a voice-auth parameter; 0 disables
    voice_auth_every: int = 3
    voice_auth_window: int = 8
    duration: int = 500
    seed: int = 0
    warmup_packets: int = 0
    notify_only: bool = False
    frame_bytes: int = 20
    slot_ms: int = 20
    protocol_enabled: bool = True
    user_ids: Tuple[bytes, bytes] = (b"alice@example.org", b"bob@example.org")

    def validate(self) -> None:
        problems = validate_carrier_map(self.carrier_map)
        if self.duration < 1:
            problems.append("duration must be at least one packet")
        if self.chain_n == 1 or self.chain_n < 0:
            problems.append("chain_n must be 0 (disabled) or at least 2")
        if not self.schedule:
            problems.append("schedule is empty")
        for code, side in self.schedule:
            pc = parameter_of_code(code)
            if not pc.assigned or pc.kind is not Kind.INFORMATIONAL:
                problems.append(f"schedule entry {code:04b} is not an informational parameter")
            elif side == RECEIVER and code not in RECEIVER_CODES or side == SENDER and code not in SENDER_CODES:
                problems.append(f"{pc.name} cannot be reported by side {side}")
        if self.voice_auth_every < 0 or self.voice_auth_window < 1:
            problems.append("voice_auth_every must be >= 0 and voice_auth_window >= 1")
        if self.voice_auth_window > HISTORY_PACKETS // 2:
            problems.append(f"voice_auth_window must not exceed {HISTORY_PACKETS // 2}")
        if self.codec.scheme is Scheme.LSB_REFERENCE and self.codec.capacity_bits_per_packet > self.frame_bytes:
            problems.append("watermark capacity exceeds the voice frame size")
        if not 1 <= self.frame_bytes <= 1400:
            problems.append("frame_bytes must lie in 1..1400")
        if self.slot_ms < 1:
            problems.append("slot_ms must be positive")
        if self.lot_start is not None and self.lot_start <= self.lot.a:
            problems.append("lot_start must exceed the critical level")
        if self.warmup_packets < 0:
            problems.append("warmup_packets must be non-negative")
        if problems:
            raise ConfigError("; ".join(problems))

    def patterns(self) -> Tuple[BitSelectionPattern, BitSelectionPattern]:
        """Session bit-selection patterns; unset ones are drawn from the seed."""
        rng = random.Random(f"{self.seed}:patterns")
        voice = BitSelectionPattern.random(rng)
        chain = BitSelectionPattern.random(rng)
        return self.voice_pattern or voice, self.chain_pattern or chain


def _rng(*parts) -> random.Random:
    return random.Random(":".join(str(p) for p in parts))


@dataclass(frozen=True)
class SentPacket:
    """A packet on its way out, with sender-side bookkeeping the attacker may peek at."""

    packet: VoicePacket
    slot: int
    kind: Optional[Kind] = None
    continuation: bool = False


class Attacker:
    def __init__(self, model: AttackerModel, rng: random.Random, codec: WatermarkCodec):
        self.model = model
        self.rng = rng
        self.codec = codec

    def _targeted(self, sp: SentPacket) -> bool:
        t = self.model.targets
        if t == "security":
            return sp.kind in (Kind.SECURITY_VOICE, Kind.SECURITY_CHAIN)
        if t == "continuation":
            return sp.continuation
        return True

    def apply(self, sp: SentPacket) -> List[VoicePacket]:
        return attacker_apply(self.model, sp, self.rng, self.codec, self._targeted(sp))


def attacker_apply(
    model: AttackerModel,
    sp: Optional[SentPacket],
    rng: random.Random,
    codec: WatermarkCodec = WatermarkCodec(),
    targeted: bool = True,
) -> List[VoicePacket]:
    """Packets the attacker lets through in place of ``sp`` (empty when dropped)."""
    if sp is None:
        return []
    p = sp.packet
    if model.kind is AttackKind.NONE or not targeted:
        return [p]
    hit = rng.random() < model.rate
    if not hit:
        return [p]
    if model.kind is AttackKind.PACKET_DROP:
        return []
    if model.kind is AttackKind.HEADER_SCRUB:
        return [scrub_carriers(p)]
    if model.kind is AttackKind.PARAM_TAMPER:
        n = min(codec.capacity_bits_per_packet, len(p.payload))
        flipped = bytes(b ^ 1 for b in p.payload[:n]) + p.payload[n:]
        return [replace(p, payload=flipped)]
    if model.kind is AttackKind.REPLAY:
        return [p, p]
    raise AssertionError(model.kind)


@dataclass
class Decoded:
    ext: Optional[int]
    header: Optional[ControlHeader] = None
    result: Optional[PushResult] = None
    gap_aborted: List[int] = field(default_factory=list)
    start_seq: Optional[int] = None
    duplicate: bool = False
    late: bool = False


class StreamDecoder:
    """Informed receiver for one incoming stream: statistics plus reassembly.

    Used by the simulated endpoints and by the pcap inspector, so both see
    identical parameter streams for identical packets.
    """

    def __init__(self, carrier_map: CarrierMap, codec: WatermarkCodec, protocol: bool = True):
        self.carrier_map = carrier_map
        self.codec = codec
        self.protocol = protocol
        self.stats = ReceptionStats()
        self.reassembler = Reassembler(exclusive=True)
        self.last_ext: Optional[int] = None
        self.history: "OrderedDict[int, bytes]" = OrderedDict()
        self.start_seq: Dict[int, Optional[int]] = {SENDER: None, RECEIVER: None}

    def feed(self, pkt: VoicePacket, arrival_ts: int) -> Decoded:
        seq = pkt.rtp.sequence_number
        ext = update_on_packet(self.stats, seq, pkt.rtp.timestamp, arrival_ts)
        if ext is None:
            return Decoded(None, duplicate=True)
        self.history[seq] = pkt.payload
        self.history.move_to_end(seq)
        while len(self.history) > HISTORY_PACKETS:
            self.history.popitem(last=False)
        if not self.protocol:
            return Decoded(ext)
        if self.last_ext is not None and ext <= self.last_ext:
            return Decoded(ext, late=True)
        gap = []
        if self.last_ext is not None and ext != self.last_ext + 1:
            gap = self.reassembler.reset()
        self.last_ext = ext
        h = extract_control_bits(pkt, self.carrier_map)
        count = min(self.reassembler.expected_bits(h, self.codec.effective_capacity), len(pkt.payload))
        bits = extract_bits(pkt.payload, count, self.codec)
        if h.c == 1:
            self.start_seq[h.s] = seq
        result = self.reassembler.push(h, bits)
        return Decoded(ext, h, result, gap, self.start_seq[h.s])

    def window_frames(self, start_seq: int, window: int) -> Optional[List[bytes]]:
        frames = []
        for i in range(window, 0, -1):
            frame = self.history.get((start_seq - i) & 0xFFFF)
            if frame is None:
                return None
            frames.append(frame)
        return frames

    def in_progress(self) -> List[int]:
        return [b.current.code for b in self.reassembler.buffers.values() if b.current is not None]


def _param_record(param: Parameter) -> dict:
    return {"code": param.code.code, "name": param.code.name, "side": param.side, "value": param.value}


class ParameterSchedule:
    """Round-robin informational parameters, voice-auth every m-th, chain-auth every n-th."""

    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self.issued = 0
        self.non_chain = 0
        self.info_index = 0

    def next(self, slot: int):
        cfg = self.cfg
        self.issued += 1
        if cfg.chain_n >= 2 and self.issued % cfg.chain_n == 0:
            return "chain"
        self.non_chain += 1
        every = cfg.voice_auth_every
        if every and self.non_chain % every == 0 and slot >= cfg.voice_auth_window:
            return "voice"
        entry = cfg.schedule[self.info_index % len(cfg.schedule)]
        self.info_index += 1
        return entry


class Endpoint:
    def __init__(self, name: str, peer: str, cfg: SessionConfig, stream: StreamParams, user_id: bytes, peer_id: bytes):
        self.name = name
        self.peer = peer
        self.cfg = cfg
        self.stream = stream
        self.user_id = user_id
        self.peer_id = peer_id
        self.voice_pattern, self.chain_pattern = cfg.patterns()
        init = _rng(cfg.seed, "init", name)
        self.initial_seq = init.randrange(1 << 16)
        self.initial_ts = init.randrange(1 << 32)
        self.voice_rng = _rng(cfg.seed, "voice", name)
        self.sender = SenderStats(ssrc=stream.ssrc)
        self.schedule = ParameterSchedule(cfg)
        self.chain = ChainBuffer(cfg.chain_n) if cfg.chain_n >= 2 else None
        self.pending: Deque[Fragment] = deque()
        self.current: Optional[Parameter] = None
        self.sent_history: "OrderedDict[int, bytes]" = OrderedDict()
        self.decoder = StreamDecoder(cfg.carrier_map, cfg.codec, cfg.protocol_enabled)
        self.recv_chain: Deque[Parameter] = deque(maxlen=max(cfg.chain_n - 1, 1))
        self.lot: LoTState = lot_init(cfg.lot)
        if cfg.lot_start is not None:
            self.lot = replace(self.lot, lot=cfg.lot_start)
        self.lot_trace: List[dict] = []
        self.notified = False

    # -- sending -------------------------------------------------------------

    def _next_parameter(self, slot: int, seq: int, now_ms: int) -> Parameter:
        cfg = self.cfg
        what = self.schedule.next(slot)
        now_ntp = ntp_from_ms(now_ms)
        if what == "chain":
            return compute_chain_auth_param(self.chain, self.chain_pattern, SENDER)
        if what == "voice":
            frames = [self.sent_history[(seq - i) & 0xFFFF] for i in range(cfg.voice_auth_window, 0, -1)]
            inp = VoiceAuthInput(self.user_id, raw_payload_features(frames))
            param = compute_voice_auth_param(inp, self.voice_pattern, SENDER)
        else:
            code, side = what
            if side == RECEIVER:
                value = receiver_value(self.decoder.stats, code, now_ntp)
            else:
                value = sender_value(self.sender, code, now_ntp)
            param = Parameter.from_value(code, side, value)
        if self.chain is not None:
            self.chain.push(param)
        return param

    def next_packet(self, slot: int, records: List[dict]) -> Tuple[SentPacket, int]:
        """Build this slot's outgoing packet; also returns its length without the protocol."""
        cfg = self.cfg
        now_ms = slot * cfg.slot_ms
        seq = (self.initial_seq + slot) & 0xFFFF
        ts = (self.initial_ts + now_ms * SAMPLES_PER_MS) & 0xFFFFFFFF
        frame = self.voice_rng.randbytes(cfg.frame_bytes)
        pkt = build_packet(seq, ts, frame, self.stream)
        plain_len = len(serialize(pkt))
        self.sent_history[seq] = frame
        while len(self.sent_history) > HISTORY_PACKETS:
            self.sent_history.popitem(last=False)
        self.sender.on_send(ts, len(frame))
        if not cfg.protocol_enabled:
            return SentPacket(pkt, slot), plain_len
        if not self.pending:
            param = self._next_parameter(slot, seq, now_ms)
            self.current = param
            self.pending = deque(fragment_parameter(param, cfg.codec.capacity_bits_per_packet))
            records.append({"type": "param_sent", "dir": f"{self.name}>{self.peer}", "slot": slot,
                            "ssrc": self.stream.ssrc, **_param_record(param)})
        frag = self.pending.popleft()
        pkt = embed_control_bits(pkt, frag.header, cfg.carrier_map)
        pkt = replace(pkt, payload=embed_bits(pkt.payload, frag.bits, cfg.codec))
        return SentPacket(pkt, slot, self.current.kind, frag.header.c == 0), plain_len

    # -- receiving -----------------------------------------------------------

    def _lot_event(self, slot: int, kind: Kind, verified: bool, records: List[dict]) -> None:
        if not self.lot.active or slot < self.cfg.warmup_packets:
            return
        self.lot = lot_on_parameter(self.lot, kind, verified, self.cfg.lot)
        entry = {"slot": slot, "event": kind.value, "verified": verified,
                 "lot": self.lot.lot, "status": self.lot.status.value}
        self.lot_trace.append(entry)
        records.append({"type": "lot", "endpoint": self.name, **entry})

    def _verify(self, param: Parameter, start_seq: Optional[int]) -> bool:
        cfg = self.cfg
        if param.kind is Kind.SECURITY_VOICE:
            frames = None if start_seq is None else self.decoder.window_frames(start_seq, cfg.voice_auth_window)
            if frames is None:
                return False
            inp = VoiceAuthInput(self.peer_id, raw_payload_features(frames))
            return compute_voice_auth_param(inp, self.voice_pattern, param.side).value == param.value
        blocks = list(self.recv_chain)
        self.recv_chain.clear()
        if len(blocks) != cfg.chain_n - 1:
            return False
        return chain_digest_value(blocks, self.chain_pattern) == param.value

    def receive(self, pkt: VoicePacket, arrival_ms: int, slot: int, records: List[dict]) -> None:
        direction = f"{self.peer}>{self.name}"
        d = self.decoder.feed(pkt, arrival_ms * SAMPLES_PER_MS)
        if d.duplicate or d.late:
            records.append({"type": "ignored", "dir": direction, "seq": pkt.rtp.sequence_number,
                            "reason": "duplicate" if d.duplicate else "late"})
            return
        for code in d.gap_aborted:
            records.append({"type": "param_incomplete", "dir": direction, "slot": slot, "code": code,
                            "reason": "sequence gap"})
        res = d.result
        if res is None:
            return
        if res.aborted is not None:
            if res.status is PushStatus.PROTOCOL_ERROR:
                records.append({"type": "param_failed", "dir": direction, "slot": slot, "code": res.aborted,
                                "reason": res.error})
                self._lot_event(slot, parameter_of_code(res.aborted).kind, False, records)
            else:
                records.append({"type": "param_incomplete", "dir": direction, "slot": slot,
                                "code": res.aborted, "reason": "superseded"})
        elif res.status is PushStatus.PROTOCOL_ERROR:
            records.append({"type": "protocol_error", "dir": direction, "slot": slot,
                            "seq": pkt.rtp.sequence_number, "header": pack_header(d.header), "reason": res.error})
        if res.status is not PushStatus.COMPLETE:
            return
        param = res.parameter
        rec = {"type": "param", "dir": direction, "slot": slot, "ssrc": pkt.rtp.ssrc, **_param_record(param)}
        if param.kind is Kind.INFORMATIONAL:
            verified = True
            rec["outcome"] = "delivered"
            if param.code.code == NTP_TIMESTAMP and param.side == SENDER:
                on_sender_report(self.decoder.stats, param.value, ntp_from_ms(arrival_ms))
        else:
            verified = self._verify(param, d.start_seq)
            rec["outcome"] = "verified" if verified else "failed"
        if param.kind is not Kind.SECURITY_CHAIN:
            self.recv_chain.append(param)
        records.append(rec)
        self._lot_event(slot, param.kind, verified, records)

    def tick(self, slot: int, records: List[dict]) -> None:
        if not self.lot.active or slot < self.cfg.warmup_packets:
            return
        self.lot = lot_on_tick(self.lot, self.cfg.slot_ms, self.cfg.lot)
        if not self.lot.active:
            entry = {"slot": slot, "event": "tick", "verified": False,
                     "lot": self.lot.lot, "status": self.lot.status.value}
            self.lot_trace.append(entry)
            records.append({"type": "lot", "endpoint": self.name, "timer": self.lot.timer_elapsed, **entry})


@dataclass
class SessionReport:
    records: List[dict]
    status: str
    cause: Optional[str]
    endpoint_status: Dict[str, str]
    lot_trace: Dict[str, List[dict]]
    capture: List[Tuple[int, VoicePacket]] = field(repr=False, default_factory=list)

    def of_type(self, kind: str) -> List[dict]:
        return [r for r in self.records if r["type"] == kind]

    def sent_parameters(self, direction: str) -> List[Tuple[int, int, int]]:
        return [(r["code"], r["side"], r["value"]) for r in self.of_type("param_sent") if r["dir"] == direction]

    def delivered_parameters(self, direction: Optional[str] = None) -> List[Tuple[int, int, int, int]]:
        """Completed parameters as ``(ssrc, code, side, value)`` in completion order."""
        return [
            (r["ssrc"], r["code"], r["side"], r["value"])
            for r in self.of_type("param")
            if direction is None or r["dir"] == direction
        ]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records)

    def write(self, out_dir, stem: str = "session") -> Tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report_path = out / f"{stem}.jsonl"
        pcap_path = out / f"{stem}.pcap"
        report_path.write_text(self.to_jsonl())
        pcap_write([p for _, p in self.capture], pcap_path, [ts for ts, _ in self.capture])
        return report_path, pcap_path


class _Simulation:
    def __init__(self, cfg: SessionConfig, attacker: AttackerModel):
        self.cfg = cfg
        self.attacker_model = attacker
        ssrc_rng = _rng(cfg.seed, "ssrc")
        a_addr, b_addr = 0x0A000001, 0x0A000002
        a_stream = StreamParams(src=a_addr, dst=b_addr, src_port=16384, dst_port=16386,
                                ssrc=ssrc_rng.getrandbits(32))
        b_stream = StreamParams(src=b_addr, dst=a_addr, src_port=16386, dst_port=16384,
                                ssrc=ssrc_rng.getrandbits(32))
        id_a, id_b = cfg.user_ids
        self.endpoints = {
            "A": Endpoint("A", "B", cfg, a_stream, id_a, id_b),
            "B": Endpoint("B", "A", cfg, b_stream, id_b, id_a),
        }
        self.attackers = {
            d: Attacker(attacker, _rng(cfg.seed, "attacker", d, attacker.seed), cfg.codec)
            for d in DIRECTIONS
            if attacker.applies_to(d)
        }
        self.channel_rngs = {d: _rng(cfg.seed, "channel", d, cfg.channel.rng_seed) for d in DIRECTIONS}
        self.records: List[dict] = []
        self.in_flight: List[tuple] = []
        self.order = 0
        self.capture: List[Tuple[int, VoicePacket]] = []

    def _transmit(self, direction: str, sp: SentPacket, plain_len: int, slot: int) -> None:
        cfg, ch = self.cfg, self.cfg.channel
        rng = self.channel_rngs[direction]
        attacker = self.attackers.get(direction)
        outs = attacker.apply(sp) if attacker else [sp.packet]
        base = {"type": "packet", "dir": direction, "slot": slot, "seq": sp.packet.rtp.sequence_number,
                "wire_len": len(serialize(sp.packet)), "plain_len": plain_len}
        if cfg.protocol_enabled:
            base["header"] = pack_header(extract_control_bits(sp.packet, cfg.carrier_map))
        if not outs:
            self.records.append({**base, "fate": "dropped_attacker"})
            return
        for i, pkt in enumerate(outs):
            rec = {**base, "replay": i > 0}
            if rng.random() < ch.packet_loss_prob:
                self.records.append({**rec, "fate": "dropped_channel"})
                continue
            if ch.watermark_bitflip_prob and cfg.codec.scheme is Scheme.LSB_REFERENCE:
                n = min(cfg.codec.capacity_bits_per_packet, len(pkt.payload))
                noisy = channel_degrade(kernels.lsb_extract(pkt.payload, n), ch, rng)
                pkt = replace(pkt, payload=kernels.lsb_embed(pkt.payload, noisy))
            delay = ch.delay_ms
            if ch.delay_jitter_ms:
                delay += rng.randint(0, ch.delay_jitter_ms)
            if ch.reorder_window:
                delay += rng.randint(0, ch.reorder_window) * cfg.slot_ms
            arrival = slot * cfg.slot_ms + delay
            self.records.append({**rec, "fate": "delivered", "arrival_ms": arrival})
            heapq.heappush(self.in_flight, (arrival, self.order, direction, pkt))
            self.order += 1

    def _deliver_until(self, limit_ms: Optional[int], slot: int) -> None:
        while self.in_flight and (limit_ms is None or self.in_flight[0][0] < limit_ms):
            arrival, _, direction, pkt = heapq.heappop(self.in_flight)
            receiver = self.endpoints[direction[-1]]
            self.capture.append((arrival * 1000, pkt))
            receiver.receive(pkt, arrival, slot, self.records)

    def run(self) -> SessionReport:
        cfg = self.cfg
        eps = self.endpoints
        self.records.append({
            "type": "session", "seed": cfg.seed, "duration": cfg.duration,
            "capacity": cfg.codec.capacity_bits_per_packet, "scheme": cfg.codec.scheme.value,
            "chain_n": cfg.chain_n, "attacker": self.attacker_model.kind.value,
            "ssrc_a": eps["A"].stream.ssrc, "ssrc_b": eps["B"].stream.ssrc,
            "protocol": cfg.protocol_enabled,
        })
        stopped_at = None
        for slot in range(cfg.duration):
            for direction in DIRECTIONS:
                sender = eps[direction[0]]
                sp, plain_len = sender.next_packet(slot, self.records)
                self._transmit(direction, sp, plain_len, slot)
            self._deliver_until((slot + 1) * cfg.slot_ms, slot)
            if not cfg.protocol_enabled:
                continue
            for ep in eps.values():
                ep.tick(slot, self.records)
            dropped = [ep for ep in eps.values() if not ep.lot.active]
            if dropped:
                if not cfg.notify_only:
                    stopped_at = slot
                    break
                for ep in dropped:
                    if not ep.notified:
                        ep.notified = True
                        self.records.append({"type": "notify", "endpoint": ep.name, "slot": slot,
                                             "status": ep.lot.status.value})
        last_slot = stopped_at if stopped_at is not None else cfg.duration
        self._deliver_until(None, last_slot)
        for name, ep in eps.items():
            for code in ep.decoder.in_progress():
                self.records.append({"type": "param_incomplete", "dir": f"{ep.peer}>{name}", "slot": last_slot,
                                     "code": code, "reason": "session ended"})
        statuses = {name: ep.lot.status.value for name, ep in eps.items()}
        causes = sorted(
            (ep.lot_trace[-1]["slot"], name, ep.lot.status.value)
            for name, ep in eps.items()
            if not ep.lot.active
        )
        status = causes[0][2] if causes else Status.ACTIVE.value
        cause = f"endpoint {causes[0][1]}" if causes else None
        summary = {"type": "summary", "status": status, "cause": cause, "endpoints": statuses,
                   "stopped_at": stopped_at}
        for name, ep in eps.items():
            st = ep.decoder.stats
            summary[f"qos_{name}"] = {"expected": st.expected, "received": st.received_count,
                                      "cumulative_lost": st.cumulative_lost, "jitter": st.jitter,
                                      "duplicates": st.duplicates, "lot": ep.lot.lot}
        self.records.append(summary)
        return SessionReport(
            records=self.records,
            status=status,
            cause=cause,
            endpoint_status=statuses,
            lot_trace={name: ep.lot_trace for name, ep in eps.items()},
            capture=self.capture,
        )


def run_scenario(cfg: SessionConfig, attacker: AttackerModel = AttackerModel()) -> SessionReport:
    cfg.validate()
    return _Simulation(cfg, attacker).run()


def endpoint_step(endpoint: Endpoint, slot: int, incoming: Sequence[Tuple[VoicePacket, int]] = ()):
    """Advance one endpoint by one slot outside the full simulation loop.

    Delivers ``incoming`` ``(packet, arrival_ms)`` pairs, ticks the LoT timer
    and returns ``(outgoing SentPacket, event records)``.
    """
    records: List[dict] = []
    for pkt, arrival in incoming:
        endpoint.receive(pkt, arrival, slot, records)
    endpoint.tick(slot, records)
    sp, _ = endpoint.next_packet(slot, records)
    return sp, records
