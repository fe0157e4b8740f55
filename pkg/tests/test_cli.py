import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from orthoclone.cli import CSV_COLUMNS, main, parse_angle


def cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def proc(*argv, env=None):
    return subprocess.run(
        [sys.executable, "-m", "orthoclone.cli", *argv], capture_output=True, env=env, check=False
    )


class TestAngles:
    @pytest.mark.parametrize("text,value", [
        ("pi/6", np.pi / 6), ("3*pi/8", 3 * np.pi / 8), ("pi", np.pi), ("2pi/3", 2 * np.pi / 3),
        ("0.7854", np.pi / 4), ("0.5236", np.pi / 6), ("0", 0.0), ("0.3", 0.3),
    ])
    def test_parse(self, text, value):
        assert parse_angle(text) == pytest.approx(value, abs=1e-15)

    def test_no_snap(self):
        assert parse_angle("0.7854", snap=False) == 0.7854

    def test_garbage(self):
        assert cli("simulate", "--protocol", "ki", "--alpha", "quarter")[0] == 2


class TestClassify:
    def test_bundled(self):
        code, out = cli("classify", "ki_pi6")
        d = json.loads(out)
        assert code == 0 and d["verdict"] == "NOT_CLONABLE" and d["broadcastable_first_subsystem"] is True
        assert d["pairwise_overlap_subsystem_1"]["0|1"] == pytest.approx(0.375)
        assert len(d["reduced_states"]["1"]) == 2

    def test_locator(self):
        d = json.loads(cli("classify", "two_product")[1])
        assert d["locator"] == 1

    def test_minimal_mixed(self):
        d = json.loads(cli("classify", "minimal_mixed")[1])
        assert d["verdict"] == "CLONABLE" and d["mechanism"] == "MEASURE_BOTH"

    def test_not_orthogonal(self, tmp_path):
        f = tmp_path / "s.json"
        f.write_text(json.dumps({"dims": [2, 2], "states": [
            {"label": "a", "kind": "pure", "amplitudes_re": [1, 0, 0, 0]},
            {"label": "b", "kind": "pure", "amplitudes_re": [0.6, 0.8, 0, 0]},
        ]}))
        assert cli("classify", str(f))[0] == 3

    def test_bad_file(self, tmp_path):
        f = tmp_path / "s.json"
        f.write_text('{"dims": [2, 2], "states": [{"label": "a", "kind": "pure", "amplitudes_re": [1, 0]}]}')
        assert cli("classify", str(f))[0] == 2
        assert cli("classify", str(tmp_path / "missing.json"))[0] == 2

    def test_three_factor_unsupported(self, tmp_path):
        f = tmp_path / "s.json"
        f.write_text(json.dumps({"dims": [2, 2, 2], "states": [
            {"label": "a", "kind": "pure", "amplitudes_re": [1] + [0] * 7},
            {"label": "b", "kind": "pure", "amplitudes_re": [0] * 7 + [1]},
        ]}))
        assert cli("classify", str(f))[0] == 2


class TestSimulate:
    def test_json(self):
        code, out = cli("simulate", "--protocol", "bb84", "--attack", "intercept", "--basis-angle", "pi/8")
        d = json.loads(out)
        assert code == 0 and d["qber"] == pytest.approx(0.25) and d["eve_guess"] == pytest.approx(0.853553390593)

    def test_csv(self):
        code, out = cli("simulate", "--protocol", "ki", "--alpha", "pi/6", "--attack", "intercept", "--output", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and list(rows[0]) == CSV_COLUMNS
        assert [r["label"] for r in rows] == ["0", "1", "*"]
        assert rows[-1]["qber"] == "0.375" and rows[-1]["eve_guess"] == "0.75"
        assert rows[0]["protocol_params"] == "alpha=0.523598775598"

    def test_dummy_swap_decimal_alpha(self):
        code, out = cli("simulate", "--protocol", "ki", "--alpha", "0.7854", "--attack", "dummy-swap")
        d = json.loads(out)
        assert code == 0 and d["eve_guess"] == 1 and d["disturbance"] == 0

    @pytest.mark.parametrize("argv", [
        ("--protocol", "ki", "--alpha", "pi/6", "--attack", "dummy-swap"),
        ("--protocol", "minimal-pure", "--attack", "broadcast"),
        ("--protocol", "gv", "--attack", "measure-both"),
    ])
    def test_incompatible(self, argv):
        assert cli("simulate", *argv)[0] == 4

    @pytest.mark.parametrize("argv", [
        ("--protocol", "ki"),
        ("--protocol", "ki", "--alpha", "2.5"),
        ("--protocol", "gv", "--check-fraction", "2"),
        ("--protocol", "gv", "--shots", "0"),
    ])
    def test_bad_input(self, argv):
        assert cli("simulate", *argv)[0] == 2

    def test_argparse_errors_exit_2(self):
        for argv in (["simulate", "--protocol", "e91"], ["simulate", "--protocol", "gv", "--attack", "teleport"], []):
            with pytest.raises(SystemExit) as info:
                cli(*argv)
            assert info.value.code == 2

    def test_sampled(self):
        code, out = cli("simulate", "--protocol", "bb84", "--attack", "intercept", "--basis-angle", "pi/8",
                        "--shots", "2000", "--seed", "5")
        d = json.loads(out)
        assert code == 0 and [r["label"] for r in d["runs"]] == ["0", "1"]
        assert sum(d["runs"][0]["counts"].values()) == 2000
        code, out = cli("simulate", "--protocol", "gv", "--shots", "100", "--seed", "5", "--output", "csv")
        assert code == 0 and out.count("\n") == 4


class TestSweep:
    def test_intercept(self):
        code, out = cli("sweep", "--attack", "intercept")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 9
        alphas = np.linspace(0, np.pi / 2, 9)
        for a, r in zip(alphas, rows):
            assert float(r["eve_guess"]) == pytest.approx(0.5 + 0.5 * abs(np.cos(2 * a)), abs=1e-9)

    def test_only_ki(self):
        assert cli("sweep", "--protocol", "gv")[0] == 2

    def test_threads_env(self, monkeypatch):
        base = cli("sweep", "--attack", "broadcast", "--steps", "5")[1]
        monkeypatch.setenv("ORTHOCLONE_THREADS", "3")
        assert cli("sweep", "--attack", "broadcast", "--steps", "5")[1] == base
        monkeypatch.setenv("ORTHOCLONE_THREADS", "many")
        assert cli("sweep", "--attack", "broadcast")[0] == 2


def test_export_round_trips_through_classify(tmp_path):
    code, out = cli("export", "--protocol", "ki", "--alpha", "pi/4")
    f = tmp_path / "ki.json"
    f.write_text(out)
    d = json.loads(cli("classify", str(f))[1])
    assert code == 0 and d["mechanism"] == "DUMMY_SWAP"


def test_list():
    d = json.loads(cli("list")[1])
    assert "minimal-mixed" in d["protocols"] and "measure-both" in d["attacks"] and "gv" in d["examples"]


class TestProcess:
    def test_exit_codes(self):
        assert proc("classify", "gv").returncode == 0
        assert proc("simulate", "--protocol", "ki", "--alpha", "pi/6", "--attack", "dummy-swap").returncode == 4
        r = proc("simulate", "--protocol", "nope")
        assert r.returncode == 2 and b"invalid choice" in r.stderr

    def test_byte_determinism(self):
        argv = ("simulate", "--protocol", "bb84", "--attack", "intercept", "--basis-angle", "pi/8",
                "--shots", "5000", "--seed", "9", "--output", "csv")
        a, b = proc(*argv), proc(*argv)
        assert a.returncode == 0 and a.stdout == b.stdout and a.stdout

    def test_utf8_output(self):
        r = proc("list")
        r.stdout.decode("utf-8")
