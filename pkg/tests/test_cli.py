import json
import math

import pytest

from magnifier_qw.cli import main
from magnifier_qw.limitlaw import konno_density

GROVER_ARGS = ["--p", "0.5", "--q", "0.5", "--r", str(2 / 3)]
TRANSIENT_ARGS = ["--p", "0.7", "--q", "0.3", "--r", "0.5"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    assert code == 0, err
    return json.loads(out)


def test_spectrum_metadata(capsys):
    doc = run_json(capsys, "spectrum", *GROVER_ARGS, "--kgrid", "16")
    meta = doc["meta"]
    assert meta["kappa"] == pytest.approx(math.sqrt(2 / 3) / 2)
    assert meta["recurrent"] is True
    assert meta["calibration_constant"] == pytest.approx(1 / (2 * math.pi))
    assert len(doc["rows"]) == 16
    assert max(r["map_deviation"] for r in doc["rows"]) < 1e-10


def test_missing_parameter_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--p", "0.5", "--q", "0.5"])
    assert exc.value.code == 1


def test_out_of_range_parameter_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--p", "1.5", "--q", "0.5", "--r", "0.5"])
    assert exc.value.code == 1


def test_simulate_zero_steps(capsys):
    doc = run_json(capsys, "simulate", *GROVER_ARGS, "--steps", "0")
    assert len(doc["rows"]) == 1
    assert doc["rows"][0]["mass"] == pytest.approx(1.0)


def test_simulate_grover_mass_and_velocity(capsys):
    doc = run_json(capsys, "simulate", *GROVER_ARGS, "--steps", "1000", "--checkpoint", "10")
    assert sum(r["mass"] for r in doc["rows"]) == pytest.approx(1.0, abs=1e-10)
    assert doc["meta"]["pseudo_velocity_empirical"] == pytest.approx(math.sqrt(2 / 3) / 2, abs=0.02)
    assert sum(r["mass_n10"] for r in doc["rows"]) == pytest.approx(1.0, abs=1e-10)


def test_localization_totals(capsys):
    doc = run_json(capsys, "localization", *GROVER_ARGS, "--steps", "200")
    meta = doc["meta"]
    for key in ("localized_mass_even", "localized_mass_odd", "localized_mass_average"):
        assert meta[key] == pytest.approx(1 / 3, abs=1e-10)
    assert len(doc["rows"]) == 41


def test_localization_needs_two_steps(capsys):
    code, _, err = run(capsys, "localization", *GROVER_ARGS, "--steps", "1")
    assert code == 1 and "steps" in err


def test_limit_grover_matches_konno(capsys):
    doc = run_json(capsys, "limit", *GROVER_ARGS, "--steps", "400", "--quad", "64")
    kappa = math.sqrt(2 / 3)
    for row in doc["rows"]:
        want = (2 / 3) * 2 * konno_density(2 * row["x"], kappa)
        assert row["density"] == pytest.approx(want, rel=1e-8)
        assert abs(row["wave_minus"]) < 1e-12
    assert doc["meta"]["ks_distance"] < 0.05


def test_limit_transient_has_backward_wave(capsys):
    doc = run_json(capsys, "limit", *TRANSIENT_ARGS, "--steps", "400", "--quad", "64")
    assert max(r["wave_minus"] for r in doc["rows"]) > 1e-3
    assert doc["meta"]["recurrent"] is False
    assert doc["meta"]["ks_distance"] < 0.05


def test_limit_refuses_r_near_one(capsys):
    code, _, err = run(capsys, "limit", "--p", "0.5", "--q", "0.5", "--r", "0.9999999999", "--steps", "0")
    assert code == 1 and "r" in err


def test_window_overflow_exits_3(capsys):
    code, _, err = run(capsys, "simulate", *GROVER_ARGS, "--steps", "50", "--window", "10")
    assert code == 3 and "--window" in err


def test_csv_is_deterministic(capsys):
    argv = ["limit", *TRANSIENT_ARGS, "--steps", "50", "--quad", "32"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    lines = first.splitlines()
    assert lines[0].startswith("# command: limit")
    header = next(l for l in lines if not l.startswith("#"))
    assert header.split(",")[0] == "x"


def test_out_file(tmp_path, capsys):
    path = tmp_path / "spectrum.csv"
    code, out, _ = run(capsys, "spectrum", *GROVER_ARGS, "--kgrid", "16", "--out", str(path))
    assert code == 0 and out == ""
    assert "map_deviation" in path.read_text()


def test_sweep_produces_one_run_per_value(capsys):
    doc = run_json(capsys, "spectrum", *GROVER_ARGS, "--kgrid", "16", "--sweep", "r=0.2:0.8:4")
    runs = doc["runs"]
    assert [r["meta"]["r"] for r in runs] == pytest.approx([0.2, 0.4, 0.6, 0.8])


def test_bad_sweep_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", *GROVER_ARGS, "--sweep", "s=0:1:3"])
    assert exc.value.code == 1


def test_verify_passes_and_negative_control_fails(capsys):
    code, _, err = run(capsys, "verify", "--steps", "100", "--quad", "1024")
    assert code == 0, err
    code, _, err = run(capsys, "verify", "--steps", "100", "--quad", "1024", "--corrupt-coin", "1e-3")
    assert code == 2
    assert "FAIL" in err and "unitarity" in err
