import json

import pytest

from heins_lab.cli import main

QUARTER = '{"family": "power", "a": 1, "p": 0.25}'


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", "--rotation", QUARTER)
    assert code == 0 and json.loads(out)["verdict"] == "constructible"


def test_rotation_from_file(tmp_path, capsys):
    p = tmp_path / "rot.json"
    p.write_text('{"family": "sqrt_log", "a": 1}')
    code, out, _ = run(capsys, "classify", "--rotation", str(p))
    assert json.loads(out)["verdict"] == "constant_only_sqrtlog"


def test_disk_demo(capsys):
    code, out, _ = run(capsys, "hm", "--disk-demo", "--walks", "100000", "--seed", "7")
    res = json.loads(out)
    assert code == 0 and res["pass"] and abs(res["omega"] - 0.5) < 0.01 and res["seed"] == 7


def test_hm_fields(capsys):
    code, out, _ = run(capsys, "hm", "--rotation", '{"family": "sqrt_log", "a": 1}', "--t", "4",
                       "--z0", "1.5,2.5", "--walks", "2000", "--seed", "1")
    res = json.loads(out)
    assert {"omega", "stderr", "censored", "dist", "lambda", "bound", "pass"} <= set(res)
    assert code == 0


def test_scan_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["scan", "--n", "128", "--tau-max", "1", "--out", str(p), "--svg", str(tmp_path / "s.svg")]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[1] == "tau,m_u,m_v,eta_u,eta_v,lhs,rhs,two_arcs_pass,B_measure"
    assert (tmp_path / "s.svg").read_text().startswith("<svg")


def test_stripmap_check(capsys):
    code, out, _ = run(capsys, "stripmap-check", "--profile", "straight", "--windows", "2:20")
    row = out.splitlines()[2].split(",")
    assert code == 0 and float(row[2]) == pytest.approx(18.0, abs=1e-6) and row[-3:] == ["1", "1", "1"]


def test_construct_eval_and_probe(tmp_path, capsys):
    code, out, _ = run(capsys, "construct", "eval", "--rotation", QUARTER, "--z", "20,5")
    assert code == 0 and "log_abs_f" in json.loads(out)
    code, _, _ = run(capsys, "construct", "probe", "--rotation", QUARTER, "--samples", "10",
                     "--out", str(tmp_path / "p.csv"), "--svg", str(tmp_path / "p.svg"))
    assert code == 0 and len((tmp_path / "p.csv").read_text().splitlines()) == 2 + 10 + 24


def test_exit_codes(capsys):
    assert run(capsys, "classify", "--rotation", '{"a": 1}')[0] == 64
    assert run(capsys, "classify", "--rotation", "{not json")[0] == 64
    assert run(capsys, "hm", "--rotation", QUARTER, "--t", "5", "--z0", "1.5,9")[0] == 4
    assert run(capsys, "construct", "--rotation", '{"family": "power", "a": 1, "p": 0.5}')[0] == 4
    with pytest.raises(SystemExit) as e:
        main(["nope"])
    assert e.value.code == 64


def test_report_subset(tmp_path, capsys):
    code, _, err = run(capsys, "report", "--out-dir", str(tmp_path), "--only", "lemma3_constant,classification_table")
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert code == 0 and man["all_passed"] and len(man["criteria"]) == 2
    assert "PASS lemma3_constant" in err
