import csv
import json

import pytest

from fkperc import experiments as xp
from fkperc.cli import main
from fkperc.config import ConfigError, build_config, parse_text
from fkperc.runner import CSV_HEADER, fmt, run


def test_parse_text():
    raw = parse_text("experiment = event  # comment\np=0.6\n\nq = 1\nn = 4, 6 8\n")
    cfg = build_config(raw)
    assert cfg.experiment == "event" and cfg.p == 0.6 and cfg.n == [4, 6, 8]


@pytest.mark.parametrize("text,key", [
    ("experiment = event\np = 0.6\nq = 1\nn = 4\nfoo = 1", "foo"),
    ("experiment = event\np = 0.6\np = 0.7", "p"),
])
def test_parse_errors(text, key):
    with pytest.raises(ConfigError) as exc:
        build_config(parse_text(text))
    assert exc.value.key == key


@pytest.mark.parametrize("raw,key", [
    ({"p": "0.5", "q": "1", "n": "4"}, "experiment"),
    ({"experiment": "event", "q": "1", "n": "4"}, "p"),
    ({"experiment": "event", "p": "0.5", "q": "1"}, "n"),
    ({"experiment": "event", "p": "1.5", "q": "1", "n": "4"}, "p"),
    ({"experiment": "event", "p": "0.5", "q": "0.5", "n": "4"}, "q"),
    ({"experiment": "event", "p": "x", "q": "1", "n": "4"}, "p"),
    ({"experiment": "event", "p": "0.5", "q": "1", "n": "0"}, "n"),
    ({"experiment": "event", "p": "0.5", "q": "1", "n": "4", "event": "W"}, "event"),
    ({"experiment": "event", "p": "0.5", "q": "1", "n": "4", "delta": "1.5"}, "delta"),
    ({"experiment": "event", "p": "0.5", "q": "1", "n": "4", "seed": "-1"}, "seed"),
    ({"experiment": "event", "p": "0.5", "q": "1", "n": "4", "replicas": "0"}, "replicas"),
    ({"experiment": "event", "p": "0.5", "q": "1", "n": "4", "theta_ref": "2"}, "theta_ref"),
    ({"experiment": "renorm", "p": "0.5", "q": "1"}, "N"),
    ({"experiment": "renorm", "p": "0.5", "q": "1", "N": "20"}, "N"),
    ({"experiment": "renorm", "p": "0.5", "q": "1", "N": "24", "n": "60"}, "n"),
    ({"experiment": "event", "event": "Zc", "p": "0.5", "q": "1", "N": "24", "n": "60"}, "n"),
    ({"experiment": "fly", "p": "0.5"}, "experiment"),
])
def test_validation_names_key(raw, key):
    with pytest.raises(ConfigError) as exc:
        build_config(raw)
    assert exc.value.key == key
    assert exc.value.record()["key"] == key


def test_fmt_round_trip():
    for v in (0.1, 1 / 3, 1e-300, 2.5e17, 0.0):
        assert float(fmt(v)) == v and fmt(v) == repr(v)
    assert fmt(None) == "" and fmt(7) == "7"


def _run(tmp_path, name, **extra):
    raw = {"experiment": "event", "p": "0.6", "q": "1.5", "n": "3, 4", "replicas": "40",
           "seed": "11", "out": str(tmp_path / name)}
    raw.update(extra)
    cfg = build_config(raw)
    run(cfg)
    return tmp_path / name


def test_outputs_deterministic(tmp_path):
    a = _run(tmp_path, "a")
    b = _run(tmp_path, "b")
    for f in ("event.csv",):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    ja, jb = json.loads((a / "event.json").read_text()), json.loads((b / "event.json").read_text())
    ja["config"].pop("out"), jb["config"].pop("out")
    assert ja == jb
    with open(a / "event.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_HEADER
    for r in rows[1:]:
        rec = dict(zip(CSV_HEADER, r))
        assert int(rec["successes"]) / int(rec["trials"]) == float(rec["estimate"])
        assert rec["seed"] == "11" and rec["p"] == "0.6"


def test_rerun_same_directory_is_byte_identical(tmp_path):
    a = _run(tmp_path, "same")
    first = {f.name: f.read_bytes() for f in a.iterdir()}
    _run(tmp_path, "same")
    assert {f.name: f.read_bytes() for f in a.iterdir()} == first


def test_theta_provenance_recorded(tmp_path):
    out = _run(tmp_path, "v", event="Vc", q="1")
    summary = json.loads((out / "event.json").read_text())
    th = summary["theta_ref"]
    assert th["source"] == "estimate" and th["n"] == 4 and th["trials"] == 40
    assert "winner" in summary["verdicts"]


def test_cli_success_and_error(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("p = 0.55\nq = 1\nn = 1, 2, 3\nreplicas = 50\n")
    assert main(["lower-bound", "--config", str(cfg), "--seed", "3", "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "lower-bound.json").read_text())
    assert summary["config"]["seed"] == 3
    cfg.write_text("p = 0.55\nq = 1\nn = 3\nbogus = 2\n")
    assert main(["lower-bound", "--config", str(cfg)]) == 2
    rec = json.loads(capsys.readouterr().err.strip())
    assert rec == {"error": "invalid-config", "key": "bogus", "message": "unknown key 'bogus'"}
    assert main(["theta", "--set", "p=0.5", "--set", "n=4", "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err.strip())["key"] == "q"


def test_cli_experiments_smoke(tmp_path, monkeypatch):
    from conftest import rect
    monkeypatch.setattr(xp, "small_boxes", lambda: [rect(2, 2), rect(1, 3)])
    out = str(tmp_path / "s")
    common = ["--out", out, "--set", "p=0.6", "--set", "q=2", "--set", "replicas=20"]
    assert main(["duality-verify", "--out", out]) == 0
    assert main(["exact"] + common + ["--set", "n=1,2,3"]) == 0
    assert main(["sample"] + common + ["--set", "n=3"]) == 0
    assert main(["theta"] + common + ["--set", "n=3,5"]) == 0
    assert main(["decay"] + common + ["--set", "n=5"]) == 0
    assert main(["renorm"] + common + ["--set", "N=24"]) == 0
    assert main(["exact"] + common + ["--set", "n=4"]) == 2
    summary = json.loads((tmp_path / "s" / "duality-verify.json").read_text())
    assert summary["max_discrepancy"] < 1e-10
    decay = json.loads((tmp_path / "s" / "decay.json").read_text())
    assert decay["config"]["boundary"] == "wired"
