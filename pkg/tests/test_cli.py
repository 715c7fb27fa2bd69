import json
import subprocess
import sys

import pytest

from cmlift.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_theta_example(capsys):
    code, out, _ = call(capsys, "theta", "--form", "1,1,1,0,0,0", "--limit", "2")
    assert code == 0 and out == "0,1\n1,6\n2,12\n"


def test_exceptions_example(capsys):
    code, out, _ = call(capsys, "exceptions", "--p", "11", "--type", "II", "--N", "1000000", "--M", "100000")
    assert code == 0 and json.loads(out)["exceptions"] == [3, 67, 235, 427]


def test_gross_example(capsys):
    code, out, _ = call(capsys, "gross", "--p", "19", "--type", "I")
    d = json.loads(out)
    assert code == 0 and d["determinant"] == 1444 and d["parity"] is True


def test_output_is_byte_identical_across_runs_and_workers(capsys):
    args = ["exceptions", "--p", "19", "--type", "II", "--N", "200000", "--M", "10000"]
    outs = {call(capsys, *args, "--workers", w)[1] for w in ("1", "1", "4")}
    assert len(outs) == 1
    args = ["theta", "--p", "23", "--limit", "3000"]
    assert call(capsys, *args)[1] == call(capsys, *args, "--workers", "3")[1]


def test_usage_errors_exit_1(capsys):
    for argv in (
        ["bogus"],
        ["exceptions", "--p", "11", "--N", "10", "--M", "100"],
        ["theta", "--form", "1,2", "--limit", "3"],
        ["theta", "--form", "1,1,-1,0,0,0", "--limit", "3"],
        ["lvalue", "--p", "11", "--D", "-3", "--m", "3", "--epsilon", "0"],
        ["lvalue", "--p", "13", "--D", "-3", "--m", "3"],
        ["exceptions", "--p", "11", "--N", str(1 << 64), "--M", "10"],
        ["theta", "--limit", "3"],
        ["shimura", "--p", "11", "--t", "3", "--n-max", "2", "--series", "/nonexistent.csv"],
    ):
        code, out, err = call(capsys, *argv)
        assert code == 1, argv
        assert json.loads(err)["error"] == "usage"


def test_computation_errors_exit_2(capsys):
    code, _, err = call(capsys, "lvalue", "--p", "11", "--D", "-3", "--m", "3", "--n-max", "10")
    payload = json.loads(err)
    assert code == 2 and payload["error"] == "computation" and payload["required_n_max"] > 10
    code, _, err = call(capsys, "gross", "--p", "13", "--type", "II")
    assert code == 2 and json.loads(err)["type"] in ("NoSolution", "ValueError")
    code, _, err = call(capsys, "ep", "--p", "11", "--N", "1000", "--M", "100", "--reports")
    assert code == 0  # no reports given means the forms are computed


def test_gross_json_feeds_theta(capsys, tmp_path):
    path = tmp_path / "g.json"
    assert run(["gross", "--p", "11", "--type", "I", "--out", str(path)]) == 0
    a = call(capsys, "theta", "--gross-json", str(path), "--limit", "500")[1]
    b = call(capsys, "theta", "--form", "3,15,15,-2,2,14", "--limit", "500")[1]
    assert a == b


def test_exception_reports_feed_ep(capsys, tmp_path):
    files = []
    for t in ("I", "II"):
        f = tmp_path / f"{t}.json"
        assert run(["exceptions", "--p", "11", "--type", t, "--N", "100000", "--M", "10000", "--out", str(f)]) == 0
        files.append(str(f))
    code, out, _ = call(capsys, "ep", "--p", "11", "--reports", *files)
    direct = call(capsys, "ep", "--p", "11", "--N", "100000", "--M", "10000")[1]
    assert code == 0 and json.loads(out)["Ep"] == json.loads(direct)["Ep"]
    assert json.loads(out)["count"] == 25
    code, _, err = call(capsys, "ep", "--p", "11", "--reports", files[0])
    assert code == 2 and json.loads(err)["type"] == "MissingForms"
    code, out, _ = call(capsys, "ep", "--p", "11", "--reports", files[1], "--declare-missing", "3,15,15,-2,2,14")
    assert code == 0 and json.loads(out)["Ep"] == [3, 67, 235, 427]


def test_cusp_csv_feeds_shimura(capsys, tmp_path):
    path = tmp_path / "g.csv"
    assert run(["cusp", "--p", "11", "--type", "I", "--C", "1200", "--out", str(path)]) == 0
    a = call(capsys, "shimura", "--p", "11", "--t", "3", "--n-max", "20", "--series", str(path), "--normalize")[1]
    b = call(capsys, "shimura", "--p", "11", "--type", "I", "--C", "1200", "--t", "3", "--n-max", "20", "--normalize")[1]
    assert a == b
    assert a.split("\n")[1:6] == ["1,1,1", "2,-2,1", "3,-1,1", "4,2,1", "5,1,1"]


def test_section_cache(capsys, tmp_path, monkeypatch):
    args = ["exceptions", "--p", "11", "--type", "I", "--N", "100000", "--M", "10000"]
    plain = call(capsys, *args)[1]
    monkeypatch.setenv("CMLK_CACHE_DIR", str(tmp_path))
    first = call(capsys, *args)[1]
    assert list(tmp_path.glob("*.bin"))
    second = call(capsys, *args)[1]
    assert plain == first == second


def test_other_subcommands(capsys, tmp_path):
    code, out, _ = call(capsys, "eisenstein", "--p", "11", "--d", "-3")
    assert json.loads(out)["coefficient"] == "4/5"
    code, out, _ = call(capsys, "eisenstein", "--p", "11", "--limit", "4")
    assert out == "0,1,1\n1,0,1\n2,0,1\n3,4,5\n4,6,5\n"
    code, out, _ = call(capsys, "units", "--p", "11")
    d = json.loads(out)
    assert sorted(c["units"] for c in d["curves"]) == [4, 6] and d["mass"] == "5/12"
    code, out, _ = call(capsys, "lvalue", "--p", "11", "--D", "-4", "--m", "4")
    assert code == 0 and json.loads(out)["value"] > 0
    coeffs = tmp_path / "a.txt"
    coeffs.write_text("\n".join(str(v) for v in (1, -2, -1, 2, 1, 2, -2, 0, -2, -2)) + "\n")
    code, out, _ = call(capsys, "lvalue", "--p", "11", "--D", "-3", "--m", "3", "--coeffs", str(coeffs), "--epsilon", "1")
    assert code == 0
    code, out, _ = call(capsys, "c-const", "--p", "11", "--type", "II", "--C", "200", "--D", "-3", "-4")
    d = json.loads(out)
    assert d["m"] == 3 and d["g_m"] == "-4/5" and d["m_fundamental"] is True
    kz = d["kohnen_zagier"]
    assert kz["-3"]["value"] == pytest.approx(kz["-4"]["value"], rel=1e-8)
    code, out, _ = call(capsys, "tables", "--p", "23")
    d = json.loads(out)
    assert len(d["forms"]) >= 3 and d["exceptions"][0]["max"] == 3523
    code, out, _ = call(capsys, "tables")
    assert json.loads(out)["ep_sets"]["11"]["count"] == 25


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cmlift.cli", "gross", "--p", "11", "--type", "II"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["determinant"] == 484
