import json
import shutil
from dataclasses import replace
from pathlib import Path

import pytest

from voipstego.cli import main
from voipstego.config import load_config
from voipstego.packet_model import pcap_write
from voipstego.sim_harness import run_scenario

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def clean(tmp_path):
    dst = tmp_path / "clean.toml"
    shutil.copy(CONFIGS / "clean.toml", dst)
    return dst


def simulate(capsys, *argv):
    code = main(["simulate", *map(str, argv)])
    out = capsys.readouterr().out.strip().splitlines()
    return code, [line.split("\t") for line in out]


def test_simulate_clean(tmp_path, clean, capsys):
    code, lines = simulate(capsys, clean, "--duration", 300, "--out", tmp_path / "out")
    assert code == 0
    status, report, pcap = lines[0]
    assert status == "ACTIVE"
    recs = [json.loads(l) for l in Path(report).read_text().splitlines()]
    assert recs[0]["type"] == "session" and recs[-1]["type"] == "summary"
    assert Path(pcap).stat().st_size > 24


def test_missing_config(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "nope.toml")]) == 2
    assert "config not found" in capsys.readouterr().err


def test_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[lot]\na = 3\nx = 2\n")
    assert main(["simulate", str(bad)]) == 2
    bad.write_text("not = [toml")
    assert main(["simulate", str(bad)]) == 2


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_seed_override_changes_output(tmp_path, clean, capsys):
    _, a = simulate(capsys, clean, "--duration", 100, "--seed", 1, "--out", tmp_path / "a")
    _, b = simulate(capsys, clean, "--duration", 100, "--seed", 2, "--out", tmp_path / "b")
    assert Path(a[0][1]).read_bytes() != Path(b[0][1]).read_bytes()


def test_attacker_override(tmp_path, clean, capsys):
    code, lines = simulate(capsys, clean, "--duration", 1000, "--attacker", "header_scrub", "--out", tmp_path)
    assert code == 0 and lines[0][0] == "DROPPED_TIMEOUT"


def test_parallel_jobs(tmp_path, capsys):
    cfgs = []
    for name in ("clean", "tamper"):
        shutil.copy(CONFIGS / f"{name}.toml", tmp_path / f"{name}.toml")
        cfgs.append(tmp_path / f"{name}.toml")
    code, lines = simulate(capsys, *cfgs, "--duration", 200, "--jobs", 2, "--out", tmp_path / "o")
    assert code == 0 and [Path(l[1]).stem for l in lines] == ["clean", "tamper"]


def test_inspect_matches_report(tmp_path, clean, capsys):
    cfg, attacker = load_config(clean)
    code, lines = simulate(capsys, clean, "--duration", 400, "--out", tmp_path)
    pcap = lines[0][2]
    assert main(["inspect", pcap, "--map", str(clean)]) == 0
    out = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    decoded = [(r["ssrc"], r["code"], r["side"], r["value"]) for r in out if r["type"] == "param"]
    rep = run_scenario(replace(cfg, duration=400), attacker)
    assert sorted(decoded) == sorted(rep.delivered_parameters())
    assert sum(r["type"] == "packet" for r in out) == len(rep.capture)


def test_inspect_with_wrong_map(tmp_path, clean, capsys):
    code, lines = simulate(capsys, clean, "--duration", 200, "--out", tmp_path)
    wrong = tmp_path / "wrong.toml"
    wrong.write_text('[carrier]\nmap = [["ip", "tos", 0], ["ip", "tos", 1], ["ip", "tos", 2], '
                     '["ip", "tos", 3], ["ip", "tos", 4], ["ip", "tos", 5]]\n')
    assert main(["inspect", lines[0][2], "--map", str(wrong)]) == 0
    out = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert not [r for r in out if r["type"] == "param"]
    assert {r.get("name") for r in out if r["type"] == "packet"} <= {"unassigned", None}


def test_inspect_empty_pcap(tmp_path, clean, capsys):
    empty = tmp_path / "empty.pcap"
    pcap_write([], empty)
    assert main(["inspect", str(empty), "--map", str(clean)]) == 0
    assert capsys.readouterr().out == ""


def test_inspect_bad_pcap(tmp_path, clean, capsys):
    bad = tmp_path / "bad.pcap"
    bad.write_bytes(b"garbage")
    assert main(["inspect", str(bad), "--map", str(clean)]) == 3
    assert main(["inspect", str(tmp_path / "missing.pcap"), "--map", str(clean)]) == 3
