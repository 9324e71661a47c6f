import json
import subprocess
import sys

import pytest

from radoncone import cli
from radoncone.config import parse_config
from radoncone.errors import ConfigError
from radoncone.measures import read_measures

GAMMA_LAW = {"nu": {"tag": "gamma", "theta": 1.0}, "sigma": {"box": [[0, 1]]}, "tol": 1e-3}


def write_config(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


# configuration ---------------------------------------------------------------


@pytest.mark.parametrize("doc,field", [
    ({"replicates": 0}, "replicates"),
    ({"suite": "nope"}, "suite"),
    ({"seed": -1}, "seed"),
    ({"colour": "red"}, "colour"),
    ({"format": "xml"}, "format"),
    ({"max_atoms": 13}, "max_atoms"),
    ({"estimate": {"kind": "variance"}}, "estimate.kind"),
    ({"law": {"nu": {"tag": "gamma"}, "sigma": {"box": [[0, 1]]}}}, "law.tol"),
    ({"law": {"nu": {"tag": "levy"}, "sigma": {"box": [[0, 1]]}}}, "law.nu.tag"),
    ({"law": {"nu": {"tag": "gamma"}, "sigma": {"box": [[1, 0]]}, "tol": 1e-3}}, "law.sigma.box[0]"),
    ({"law": {"nu": {"tag": "gamma"}, "sigma": {"box": [[0, 1]]},
              "window": {"lambda": [[0, 1]], "a": 2.0, "b": 2.0}}}, "law.window.b"),
    ({"law": {"nu": {"tag": "gamma"}, "sigma": {"box": [[0, 1]]},
              "window": {"lambda": [[0, 1]], "a": 0.0, "b": 2.0}}}, "law.window.a"),
])
def test_config_errors_name_the_field(doc, field):
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert info.value.path == field


def test_beta_law_needs_a_window():
    cfg = parse_config({"law": {"nu": {"tag": "finite-beta", "alpha": 2, "beta": 3}, "sigma": {"box": [[0, 1]]}}})
    with pytest.raises(ConfigError):
        cfg.law.sampler()


def test_uniform_law_samples_its_support():
    cfg = parse_config({"law": {"nu": {"tag": "truncated-uniform", "lo": 1, "hi": 2}, "sigma": {"box": [[0, 1]]}}})
    assert cfg.law.sampler().nu_range == (1.0, 2.0)


def test_defaults():
    cfg = parse_config({})
    assert (cfg.command, cfg.suite, cfg.seed, cfg.replicates, cfg.format) == ("check", "all", 0, 100_000, "json")


# sample ---------------------------------------------------------------------


def test_sample_is_deterministic(tmp_path, capsys):
    cfg = write_config(tmp_path, {"law": GAMMA_LAW})
    outs = []
    for k in range(2):
        out = str(tmp_path / f"draws{k}.jsonl")
        assert cli.main(["sample", "--config", cfg, "--seed", "42", "--replicates", "100", "--out", out]) == 0
        outs.append(open(out).read())
    assert outs[0] == outs[1]
    header, draws = read_measures(str(tmp_path / "draws0.jsonl"))
    assert len(draws) == 100
    assert header["eps"] == pytest.approx(1e-3)
    assert header["config"]["seed"] == 42


def test_sample_csv(tmp_path):
    out = str(tmp_path / "draws.csv")
    assert cli.main(["sample", "--seed", "1", "--replicates", "20", "--format", "csv", "--out", out]) == 0
    lines = open(out).read().splitlines()
    assert lines[0].startswith("# ") and lines[1] == "draw,s,x0"
    assert all(0 <= int(row.split(",")[0]) < 20 for row in lines[2:])


@pytest.mark.parametrize("argv", [
    ["sample", "--replicates", "0"],
    ["check", "no-such-suite"],
    ["check", "--config", "/nonexistent/config.json"],
])
def test_config_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_window_exits_2(tmp_path, capsys):
    law = dict(GAMMA_LAW, window={"lambda": [[0, 1]], "a": 3.0, "b": 1.0})
    assert cli.main(["sample", "--config", write_config(tmp_path, {"law": law})]) == 2
    assert "law.window.b" in capsys.readouterr().err


def test_invalid_json_exits_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{seed: 1")
    assert cli.main(["check", "--config", str(p)]) == 2


# check / estimate -----------------------------------------------------------------


def test_check_polynomials_is_reproducible(tmp_path, capsys):
    outs = [str(tmp_path / f"r{k}.json") for k in range(2)]
    for out in outs:
        assert cli.main(["check", "polynomials", "--seed", "7", "--instances", "20", "--out", out]) == 0
    a, b = (open(o, "rb").read() for o in outs)
    assert a == b
    rep = json.loads(a)
    assert rep["pass"] is True and "metadata" not in rep
    assert "seconds" in json.loads(open(outs[0] + ".meta.json").read())
    assert "PASS" in capsys.readouterr().err


def test_check_csv_report(tmp_path):
    out = str(tmp_path / "r.csv")
    assert cli.main(["check", "polynomials", "--instances", "5", "--format", "csv", "--out", out]) == 0
    assert open(out).readline().startswith("name,kind,lhs")


def test_estimate_laplace(capsys):
    assert cli.main(["estimate", "laplace", "--seed", "3", "--replicates", "20000"]) == 0
    rep = json.loads(capsys.readouterr().out)
    closed = [c for c in rep["checks"] if "closed form" in c["name"]]
    assert closed and closed[0]["rhs"] == pytest.approx(0.5)


def test_estimate_moment(capsys):
    assert cli.main(["estimate", "moment", "--order", "2", "--replicates", "20000"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert any(c["rhs"] == pytest.approx(2.0, rel=1e-8) for c in rep["checks"])


def test_estimate_correlation_singleton(tmp_path, capsys):
    law = dict(GAMMA_LAW, window={"lambda": [[0, 1]], "a": 0.5, "b": 2.0})
    cfg = write_config(tmp_path, {"law": law})
    assert cli.main(["estimate", "correlation", "--config", cfg, "--replicates", "20000"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["checks"][0]["rhs"] == pytest.approx(0.51087308406809969, rel=1e-9)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "radoncone.cli", "check", "no-such-suite"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


def _fake_report(passed):
    from radoncone.report import CheckResult, Report
    return Report("fake", [CheckResult("c", "exact", 1.0, 1.0 if passed else 2.0, passed=passed)])


@pytest.mark.parametrize("passed,code", [(True, 0), (False, 1)])
def test_exit_status_follows_the_pass_vector(monkeypatch, capsys, passed, code):
    monkeypatch.setattr(cli, "run_suite", lambda name, opts: _fake_report(passed))
    assert cli.main(["check", "ktransform"]) == code


def test_runtime_error_exits_3(monkeypatch, capsys):
    def boom(name, opts):
        raise ArithmeticError("broken")
    monkeypatch.setattr(cli, "run_suite", boom)
    assert cli.main(["check", "ktransform"]) == 3
    assert "ArithmeticError" in capsys.readouterr().err
