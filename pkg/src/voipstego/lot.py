"""Level-of-Trust session policy.

Each side keeps a trust counter that rises on verified parameters and falls
on failed ones, plus a timer reset only by verified parameters. The session
is dropped when trust reaches the critical level or the timer runs past its
limit.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Dict

from .pdu import Kind

DEFAULT_WEIGHTS = {Kind.INFORMATIONAL: 1, Kind.SECURITY_VOICE: 2, Kind.SECURITY_CHAIN: 5}


class Status(enum.Enum):
    ACTIVE = "ACTIVE"
    DROPPED_THRESHOLD = "DROPPED_THRESHOLD"
    DROPPED_TIMEOUT = "DROPPED_TIMEOUT"


class TerminalStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class LoTConfig:
    a: int = 2
    x: int = 10
    k: int = 3000
    weights: Dict[Kind, int] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    # "at_least" resets once trust reaches a*x or more; "exact" only on equality
    saturation_rule: str = "at_least"

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("critical level a must be >= 1")
        if self.x <= self.a:
            raise ValueError("initial LoT x must exceed the critical level a")
        if self.k <= 0:
            raise ValueError("timer limit k must be positive")
        if any(w < 1 for w in self.weights.values()) or set(self.weights) != set(Kind):
            raise ValueError("weights need a positive value for every parameter kind")
        if self.saturation_rule not in ("at_least", "exact"):
            raise ValueError("saturation_rule must be 'at_least' or 'exact'")

    @property
    def saturation(self) -> int:
        return self.a * self.x


@dataclass(frozen=True)
class LoTState:
    lot: int
    timer_elapsed: int = 0
    status: Status = Status.ACTIVE

    @property
    def active(self) -> bool:
        return self.status is Status.ACTIVE


def lot_init(cfg: LoTConfig) -> LoTState:
    return LoTState(lot=cfg.x)


def _require_active(st: LoTState) -> None:
    if not st.active:
        raise TerminalStateError(f"LoT state is terminal ({st.status.value})")


def lot_on_parameter(st: LoTState, kind: Kind, verified: bool, cfg: LoTConfig) -> LoTState:
    _require_active(st)
    w = cfg.weights[kind]
    if verified:
        st = replace(st, lot=st.lot + w, timer_elapsed=0)
    else:
        st = replace(st, lot=st.lot - w)
    if st.lot <= cfg.a:
        return replace(st, status=Status.DROPPED_THRESHOLD)
    # with weights above 1 trust can step over a*x, so "exact" may never reset
    if st.lot >= cfg.saturation if cfg.saturation_rule == "at_least" else st.lot == cfg.saturation:
        st = replace(st, lot=cfg.x)
    return st


def lot_on_tick(st: LoTState, dt: int, cfg: LoTConfig) -> LoTState:
    _require_active(st)
    st = replace(st, timer_elapsed=st.timer_elapsed + dt)
    if st.timer_elapsed > cfg.k:
        st = replace(st, status=Status.DROPPED_TIMEOUT)
    return st


def max_safe_spoofs(cfg: LoTConfig) -> int:
    """Consecutive weight-1 failures survivable starting from ``a*x - 1``."""
    return cfg.a * cfg.x - 1 - (cfg.a + 1)
