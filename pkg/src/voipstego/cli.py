"""``voipstego`` command line: run scenarios and inspect captured traces."""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, load_config, with_overrides
from .packet_model import PcapError, pcap_read_records
from .pdu import parameter_of_code
from .sim_harness import AttackKind, StreamDecoder, run_scenario

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _simulate_one(job):
    path, out_dir, seed, duration, attack = job
    cfg, attacker = load_config(path)
    cfg, attacker = with_overrides(cfg, attacker, seed, duration, attack)
    report = run_scenario(cfg, attacker)
    report_path, pcap_path = report.write(out_dir, Path(path).stem)
    return str(report_path), str(pcap_path), report.status


def cmd_simulate(args) -> int:
    jobs = [(c, args.out, args.seed, args.duration, args.attacker) for c in args.config]
    try:
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_simulate_one, jobs))
        else:
            results = [_simulate_one(j) for j in jobs]
    except ConfigError as exc:
        print(f"voipstego: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"voipstego: {exc}", file=sys.stderr)
        return EXIT_IO
    for report_path, pcap_path, status in results:
        print(f"{status}\t{report_path}\t{pcap_path}")
    return EXIT_OK


def inspect_records(records, carrier_map, codec):
    """Decode captured packets per SSRC; yields one dict per packet and per completed parameter."""
    decoders = {}
    for ts_us, pkt in records:
        ssrc = pkt.rtp.ssrc
        dec = decoders.get(ssrc)
        if dec is None:
            dec = decoders[ssrc] = StreamDecoder(carrier_map, codec)
        d = dec.feed(pkt, ts_us // 1000 * 8)
        line = {"type": "packet", "ssrc": ssrc, "seq": pkt.rtp.sequence_number}
        if d.header is not None:
            pc = parameter_of_code(d.header.p)
            line.update(p=d.header.p, s=d.header.s, c=d.header.c, name=pc.name)
        elif d.duplicate or d.late:
            line["ignored"] = "duplicate" if d.duplicate else "late"
        yield line
        if d.result is not None and d.result.parameter is not None:
            param = d.result.parameter
            yield {"type": "param", "ssrc": ssrc, "code": param.code.code, "name": param.code.name,
                   "side": param.side, "value": param.value}


def cmd_inspect(args) -> int:
    try:
        cfg, _ = load_config(args.map)
    except ConfigError as exc:
        print(f"voipstego: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        records = pcap_read_records(args.pcap)
    except PcapError as exc:
        print(f"voipstego: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        for line in inspect_records(records, cfg.carrier_map, cfg.codec):
            print(json.dumps(line, sort_keys=True, separators=(",", ":")))
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="voipstego", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run scenario config(s), write report and pcap")
    sim.add_argument("config", nargs="+", help="scenario TOML file(s)")
    sim.add_argument("--seed", type=int, help="override [session] seed")
    sim.add_argument("--duration", type=int, help="override [session] duration in packets")
    sim.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    sim.add_argument("--attacker", choices=[k.value for k in AttackKind], help="override [attacker] kind")
    sim.add_argument("--jobs", type=int, default=1, help="run several configs in parallel")
    sim.set_defaults(func=cmd_simulate)

    ins = sub.add_parser("inspect", help="decode covert headers and parameters from a pcap")
    ins.add_argument("pcap")
    ins.add_argument("--map", required=True, help="scenario TOML holding the carrier map and codec")
    ins.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
