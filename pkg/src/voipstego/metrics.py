"""RTCP-style reception and sender statistics carried as protocol parameters.

Arithmetic follows RTP's receiver-report rules: extended sequence numbers,
the integer interarrival-jitter estimator, 8-bit fixed-point fraction lost
and a 24-bit clamped cumulative loss.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Set

from .pdu import (
    CUMULATIVE_LOST,
    DLSR,
    EXT_HIGHEST_SEQ,
    FRACTION_LOST,
    JITTER,
    LSR,
    NTP_TIMESTAMP,
    RECEIVER,
    RTP_TIMESTAMP,
    SENDER_PACKET_COUNT,
    Parameter,
)

RTP_SEQ_MOD = 1 << 16
MAX_DROPOUT = 3000
MAX_MISORDER = 100
CUM_LOST_MAX = (1 << 23) - 1
CUM_LOST_MIN = -(1 << 23)
NTP_UNIX_OFFSET = 2_208_988_800


def ntp_from_ms(ms: int, epoch_s: int = NTP_UNIX_OFFSET) -> int:
    """64-bit NTP timestamp for a simulated clock reading in milliseconds."""
    sec, rem = divmod(ms, 1000)
    return ((epoch_s + sec) << 32) | ((rem << 32) // 1000)


def ntp_mid32(ntp: int) -> int:
    return (ntp >> 16) & 0xFFFFFFFF


@dataclass
class ReceptionStats:
    initialized: bool = False
    base_seq: int = 0
    max_seq: int = 0
    cycles: int = 0
    bad_seq: int = RTP_SEQ_MOD + 1
    received_count: int = 0
    expected_prior: int = 0
    received_prior: int = 0
    duplicates: int = 0
    jitter: int = 0
    transit: Optional[int] = None
    last_sr_ntp_mid32: int = 0
    last_sr_arrival: Optional[int] = None
    seen: Set[int] = field(default_factory=set, repr=False)

    @property
    def max_seq_ext(self) -> int:
        return self.cycles + self.max_seq

    @property
    def expected(self) -> int:
        return self.max_seq_ext - self.base_seq + 1 if self.initialized else 0

    @property
    def cumulative_lost(self) -> int:
        return self.expected - self.received_count


def _init_seq(st: ReceptionStats, seq: int) -> None:
    st.initialized = True
    st.base_seq = seq
    st.max_seq = seq
    st.cycles = 0
    st.bad_seq = RTP_SEQ_MOD + 1
    st.received_count = 0
    st.expected_prior = 0
    st.received_prior = 0
    st.seen = set()


def update_on_packet(st: ReceptionStats, seq: int, rtp_ts: int, arrival_ts: int) -> Optional[int]:
    """Account one arriving packet and return its extended sequence number.

    Duplicates and packets rejected after a large sequence jump return None.

    ``arrival_ts`` is in RTP timestamp units.
    """
    if not st.initialized:
        _init_seq(st, seq)
        ext = seq
    else:
        udelta = (seq - st.max_seq) % RTP_SEQ_MOD
        if udelta < MAX_DROPOUT:
            if seq < st.max_seq:
                st.cycles += RTP_SEQ_MOD
            st.max_seq = seq
            ext = st.cycles + seq
        elif udelta <= RTP_SEQ_MOD - MAX_MISORDER:
            if seq != st.bad_seq:
                st.bad_seq = (seq + 1) % RTP_SEQ_MOD
                return None
            # two sequential packets after a big jump: the source restarted
            _init_seq(st, seq)
            st.transit = None
            ext = seq
        else:
            # late or duplicate packet from before max_seq
            ext = st.cycles + seq if seq <= st.max_seq else st.cycles - RTP_SEQ_MOD + seq
    if ext in st.seen:
        st.duplicates += 1
        return None
    st.seen.add(ext)
    st.received_count += 1

    transit = arrival_ts - rtp_ts
    if st.transit is not None:
        d = abs(transit - st.transit)
        step = d - st.jitter
        # truncate toward zero
        st.jitter += step // 16 if step >= 0 else -((-step) // 16)
    st.transit = transit
    return ext


def on_sender_report(st: ReceptionStats, sr_ntp: int, arrival_ntp: int) -> None:
    st.last_sr_ntp_mid32 = ntp_mid32(sr_ntp)
    st.last_sr_arrival = arrival_ntp


def fraction_lost(st: ReceptionStats) -> int:
    """Loss fraction since the previous call, 8-bit fixed point; advances the interval."""
    expected = st.expected
    expected_interval = expected - st.expected_prior
    received_interval = st.received_count - st.received_prior
    st.expected_prior = expected
    st.received_prior = st.received_count
    lost_interval = expected_interval - received_interval
    if expected_interval <= 0 or lost_interval <= 0:
        return 0
    return min(255, (lost_interval << 8) // expected_interval)


def clamp_cumulative_lost(lost: int) -> int:
    """Clamp to the signed 24-bit range and return its two's-complement encoding."""
    lost = max(CUM_LOST_MIN, min(CUM_LOST_MAX, lost))
    return lost & 0xFFFFFF


@dataclass
class SenderStats:
    ssrc: int = 0
    packet_count: int = 0
    octet_count: int = 0
    last_rtp_ts: int = 0

    def on_send(self, rtp_ts: int, payload_len: int) -> None:
        self.packet_count += 1
        self.octet_count += payload_len
        self.last_rtp_ts = rtp_ts


def receiver_value(st: ReceptionStats, code: int, now_ntp: int) -> int:
    """One receiver-report value. Reading fraction lost closes the loss interval."""
    if code == FRACTION_LOST:
        return fraction_lost(st)
    if code == CUMULATIVE_LOST:
        return clamp_cumulative_lost(st.cumulative_lost)
    if code == EXT_HIGHEST_SEQ:
        return st.max_seq_ext & 0xFFFFFFFF
    if code == JITTER:
        return st.jitter & 0xFFFFFFFF
    if code in (LSR, DLSR):
        if st.last_sr_arrival is None:
            return 0
        if code == LSR:
            return st.last_sr_ntp_mid32
        return ((now_ntp - st.last_sr_arrival) >> 16) & 0xFFFFFFFF
    raise KeyError(f"code {code:04b} is not a receiver-report parameter")


def sender_value(st: SenderStats, code: int, now_ntp: int) -> int:
    if code == NTP_TIMESTAMP:
        return now_ntp & ((1 << 64) - 1)
    if code == RTP_TIMESTAMP:
        return st.last_rtp_ts & 0xFFFFFFFF
    if code == SENDER_PACKET_COUNT:
        return st.packet_count & 0xFFFFFFFF
    raise KeyError(f"code {code:04b} is not a sender-report parameter")


RECEIVER_CODES = (FRACTION_LOST, CUMULATIVE_LOST, EXT_HIGHEST_SEQ, JITTER, LSR, DLSR)
SENDER_CODES = (NTP_TIMESTAMP, RTP_TIMESTAMP, SENDER_PACKET_COUNT)


def snapshot_parameters(st, side: int, now_ntp: int) -> List[Parameter]:
    """Receiver-side (``side=0``, ``st`` a ReceptionStats) or sender-side
    (``side=1``, ``st`` a SenderStats) parameters for transmission."""
    if side == RECEIVER:
        return [Parameter.from_value(c, side, receiver_value(st, c, now_ntp)) for c in RECEIVER_CODES]
    return [Parameter.from_value(c, side, sender_value(st, c, now_ntp)) for c in SENDER_CODES]
