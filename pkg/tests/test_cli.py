import json

import pytest

import vce.genus1 as genus1
from vce import cli
from vce.genus1 import CharacterValue
from vce.qseries import Q, TruncSeries


def run(capsys, *argv, env=None, monkeypatch=None):
    if env is not None:
        for k, v in env.items():
            monkeypatch.setenv(k, v)
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def body_coeffs(value: dict) -> list:
    return TruncSeries.from_json(value["body"]).coeffs


def test_character_of_vacuum(capsys):
    code, out, err = run(capsys, "character", "--state", "[]", "--q-order", "4")
    assert code == 0
    data = json.loads(out)
    assert [int(c) for c in body_coeffs(data["value"])] == [1, 1, 2, 3, 5]
    assert data["value"]["prefactor_exp"] == "-1/24"
    assert "Z([])" in err


def test_character_of_heisenberg_field_is_zero(capsys):
    code, out, _ = run(capsys, "character", "--state", "[1]", "--q-order", "4")
    assert code == 0
    assert all(c == 0 for c in body_coeffs(json.loads(out)["value"]))


def test_invalid_state_is_a_usage_error(capsys):
    code, out, err = run(capsys, "character", "--state", "[0]")
    assert code == 2 and out == ""
    assert "invalid partition part" in err


@pytest.mark.parametrize("states", [["[1]", "[1]"], ["[2]"], ["[1]@a", "[1,1]@b"]])
def test_npoint_both_methods_agree(capsys, states):
    argv = ["npoint", "--method", "both", "--cutoff", "4", "--z-order", "2"]
    for s in states:
        argv += ["--state", s]
    code, out, err = run(capsys, *argv)
    assert code == 0 and "recursion == direct" in err
    data = json.loads(out)
    assert data["agree"]
    assert CharacterValue.from_json(data["recursion"]) == CharacterValue.from_json(data["direct"])


def test_npoint_reports_first_mismatch_when_a_cached_trace_is_corrupted(capsys, monkeypatch):
    real = genus1.one_point_series

    def corrupted(vec, q_order):
        s = real(vec, q_order)
        coeffs = list(s.coeffs)
        coeffs[-1] += Q(1)
        return TruncSeries(s.var, s.lowest, coeffs, s.order)

    monkeypatch.setattr(genus1, "one_point_series", corrupted)
    code, out, err = run(capsys, "npoint", "--state", "[1]", "--state", "[1]", "--cutoff", "3", "--z-order", "2")
    assert code == 1
    data = json.loads(out)
    assert not data["agree"] and data["mismatch"]
    assert "first mismatch at" in err


def test_sew_vacuum(capsys):
    code, out, _ = run(capsys, "sew", "--eps-order", "2", "--cutoff", "4")
    assert code == 0
    coeffs = dict((m, TruncSeries.from_json(s)) for m, s in json.loads(out)["coefficients"])
    assert coeffs[1].is_zero() and not coeffs[0].is_zero() and not coeffs[2].is_zero()


def test_foliate_passes(capsys):
    code, out, _ = run(capsys, "foliate", "--n", "2", "--p", "2", "--cutoff", "4", "--z-order", "2")
    assert code == 0
    assert json.loads(out)["report"]["passed"]


def test_config_file_and_flag_precedence(capsys, tmp_path, monkeypatch):
    conf = tmp_path / "job.conf"
    conf.write_text("# vacuum character\ncutoff = 6\nq-order = 3\nstate = [1,1]\n")
    code, out, _ = run(capsys, "character", "--config", str(conf))
    data = json.loads(out)
    assert code == 0 and data["state"] == "[1,1]" and len(body_coeffs(data["value"])) == 4
    code, out, _ = run(capsys, "character", "--config", str(conf), "--q-order", "5")
    assert len(body_coeffs(json.loads(out)["value"])) == 6
    # the environment is weaker than the config file
    code, out, _ = run(capsys, "character", "--config", str(conf), env={"VCE_CUTOFF": "2"}, monkeypatch=monkeypatch)
    assert code == 0


def test_environment_cutoff(capsys, monkeypatch):
    code, _, err = run(capsys, "character", "--q-order", "5", env={"VCE_CUTOFF": "4"}, monkeypatch=monkeypatch)
    assert code == 2 and "exceeds cutoff" in err
    monkeypatch.setenv("VCE_CUTOFF", "nope")
    assert cli.main(["character"]) == 2


def test_output_file_is_deterministic(capsys, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert cli.main(["sew", "--left", "[1]", "--right", "[1]", "--cutoff", "3", "--z-order", "1",
                         "-o", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert "eps^0" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["character", "--cutoff", "x"],
    ["character", "--voa", "lattice"],
    ["character", "--eps-order", "9", "--cutoff", "4"],
    ["npoint"],
    ["npoint", "--state", "[1]", "--state", "[1]@p", "--state", "[2]@p"],
    ["foliate", "--n", "2", "--p", "3"],
    ["verify", "--check", "nothing"],
    ["character", "--config", "/nonexistent/vce.conf"],
])
def test_usage_errors_exit_two(capsys, argv):
    assert cli.main(argv) == 2
    capsys.readouterr()


def test_bad_config_line(capsys, tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("cutoff 6\n")
    assert cli.main(["character", "--config", str(conf)]) == 2
    assert "expected key = value" in capsys.readouterr().err


def test_verify_single_check(capsys):
    code, out, err = run(capsys, "verify", "--check", "character", "--check", "weierstrass", "--cutoff", "6")
    assert code == 0
    data = json.loads(out)
    assert [r["check"] for r in data["results"]] == ["character", "weierstrass"]
    assert "PASS character" in err
