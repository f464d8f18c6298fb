"""Scenario configuration files (TOML).

See ``configs/clean.toml`` for an annotated example of every section.
"""
from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path
from typing import Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .covert_header import DEFAULT_CARRIER_MAP, CarrierMap
from .lot import DEFAULT_WEIGHTS, LoTConfig
from .pdu import CODE_BY_NAME, Kind
from .security import BitSelectionPattern
from .sim_harness import DEFAULT_SCHEDULE, AttackerModel, AttackKind, ConfigError, SessionConfig
from .watermark_channel import ChannelModel, Scheme, WatermarkCodec


class ConfigNotFound(ConfigError):
    pass


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _known(sec: dict, name: str, allowed) -> None:
    unknown = set(sec) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")


def _schedule(entries) -> tuple:
    out = []
    for entry in entries:
        try:
            name, side = entry
            out.append((CODE_BY_NAME[name].code, int(side)))
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"bad schedule entry {entry!r}; expected [parameter_name, side]") from None
    return tuple(out)


def parse_config(doc: dict) -> Tuple[SessionConfig, AttackerModel]:
    _known(doc, "top level", ("session", "carrier", "watermark", "channel", "lot", "attacker"))
    try:
        s = _section(doc, "session")
        _known(s, "session", (
            "seed", "duration", "chain_n", "voice_auth_every", "voice_auth_window", "warmup_packets",
            "notify_only", "frame_bytes", "slot_ms", "protocol_enabled", "schedule", "voice_pattern",
            "chain_pattern", "user_ids",
        ))
        c = _section(doc, "carrier")
        _known(c, "carrier", ("map",))
        carrier_map = CarrierMap.from_config(c["map"]) if "map" in c else DEFAULT_CARRIER_MAP

        w = _section(doc, "watermark")
        _known(w, "watermark", ("scheme", "capacity_bits_per_packet", "bits_per_second"))
        scheme = Scheme(w.get("scheme", "lsb_reference"))
        if "bits_per_second" in w:
            codec = WatermarkCodec.from_rate(float(w["bits_per_second"]), scheme)
        else:
            codec = WatermarkCodec(int(w.get("capacity_bits_per_packet", 10)), scheme)

        ch = _section(doc, "channel")
        channel = ChannelModel(**ch)

        lt = _section(doc, "lot")
        _known(lt, "lot", ("a", "x", "k", "weights", "start", "saturation_rule"))
        weights = dict(DEFAULT_WEIGHTS)
        for kind_name, v in lt.get("weights", {}).items():
            weights[Kind(kind_name)] = int(v)
        lot = LoTConfig(a=int(lt.get("a", 2)), x=int(lt.get("x", 10)), k=int(lt.get("k", 3000)), weights=weights,
                        saturation_rule=lt.get("saturation_rule", "at_least"))

        at = _section(doc, "attacker")
        _known(at, "attacker", ("kind", "rate", "targets", "direction", "seed"))
        attacker = AttackerModel(
            kind=AttackKind(at.get("kind", "none")),
            rate=float(at.get("rate", 1.0)),
            targets=at.get("targets", "all"),
            direction=at.get("direction", "both"),
            seed=int(at.get("seed", 0)),
        )

        cfg = SessionConfig(
            carrier_map=carrier_map,
            codec=codec,
            channel=channel,
            lot=lot,
            lot_start=lt.get("start"),
            chain_n=int(s.get("chain_n", 4)),
            voice_pattern=BitSelectionPattern(s["voice_pattern"]) if "voice_pattern" in s else None,
            chain_pattern=BitSelectionPattern(s["chain_pattern"]) if "chain_pattern" in s else None,
            schedule=_schedule(s["schedule"]) if "schedule" in s else DEFAULT_SCHEDULE,
            voice_auth_every=int(s.get("voice_auth_every", 3)),
            voice_auth_window=int(s.get("voice_auth_window", 8)),
            duration=int(s.get("duration", 500)),
            seed=int(s.get("seed", 0)),
            warmup_packets=int(s.get("warmup_packets", 0)),
            notify_only=bool(s.get("notify_only", False)),
            frame_bytes=int(s.get("frame_bytes", 20)),
            slot_ms=int(s.get("slot_ms", 20)),
            protocol_enabled=bool(s.get("protocol_enabled", True)),
            user_ids=tuple(u.encode() for u in s["user_ids"]) if "user_ids" in s else SessionConfig.user_ids,
        )
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg, attacker


def load_config(path) -> Tuple[SessionConfig, AttackerModel]:
    p = Path(path)
    if not p.is_file():
        raise ConfigNotFound(f"config not found: {path}")
    try:
        doc = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc)


def with_overrides(cfg: SessionConfig, attacker: AttackerModel, seed=None, duration=None, attack_kind=None):
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if duration is not None:
        cfg = replace(cfg, duration=duration)
    if attack_kind is not None:
        attacker = replace(attacker, kind=AttackKind(attack_kind))
    cfg.validate()
    return cfg, attacker
