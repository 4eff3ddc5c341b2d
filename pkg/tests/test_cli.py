import csv
import io
import json
import subprocess
import sys

import pytest

from soninlab import __version__, cli, soliton
from soninlab.errors import BlowUpError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse(text):
    header, _, body = text.partition("\n")
    assert header.startswith("# ")
    meta = json.loads(header[2:])
    rows = list(csv.reader(io.StringIO(body)))
    return meta, rows[0], rows[1:]


def test_hermite_zeros(capsys):
    code, out, _ = run(capsys, "hermite", "--n", "4", "--zeros")
    assert code == 0
    meta, columns, rows = parse(out)
    assert columns == ["k_or_index", "value"]
    assert len(rows) == 4
    assert float(rows[1][1]) == pytest.approx(-0.7419637843027259, abs=1e-10)
    assert meta["command"] == "hermite" and meta["passed"] is True
    assert meta["version"] == __version__


def test_hermite_value(capsys):
    code, out, _ = run(capsys, "hermite", "--n", "0", "--x", "1.7")
    assert code == 0
    assert parse(out)[2] == [["0", "1.0"]]


@pytest.mark.parametrize(
    "argv",
    [
        ["hermite", "--n", "-1", "--zeros"],
        ["hermite", "--n", "3", "--zeros", "--x", "1"],
        ["hermite", "--n", "3"],
        ["density", "--n", "0", "--max"],
        ["density", "--n", "4", "--center"],
        ["sample", "--n", "2", "--beta", "3", "--runs", "10"],
        ["dbm", "--n", "2", "--beta", "2", "--const", "0", "--dt", "0", "--runs", "10"],
        ["dbm", "--n", "2", "--beta", "2", "--init", "0,0", "--const", "1", "--runs", "10"],
        ["soliton", "--d", "3"],
        ["envelope", "--preset", "bessel-log", "--step", "0.5"],
        ["nonsense"],
        [],
    ],
)
def test_usage_errors(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 2
    assert out == ""


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0
    assert __version__ in out


def test_density_max(capsys):
    code, out, _ = run(capsys, "density", "--n", "2", "--max")
    assert code == 0
    meta, _, rows = parse(out)
    assert [float(r[0]) for r in rows] == pytest.approx([-1.0, 1.0], abs=1e-9)
    assert float(rows[0][1]) == pytest.approx(0.48394, abs=5e-6)
    assert all(meta["assertions"].values())


def test_density_center(capsys):
    code, out, _ = run(capsys, "density", "--n", "3", "--center")
    assert code == 0
    values = {r[0]: float(r[1]) for r in parse(out)[2]}
    assert values["exact"] == pytest.approx(0.59841, abs=5e-6)
    assert values["asymptotic"] == pytest.approx(0.59924, abs=5e-6)


def test_density_grid(capsys):
    code, out, _ = run(capsys, "density", "--n", "2", "--grid", "-1", "1", "0.5")
    assert code == 0
    meta, columns, rows = parse(out)
    assert columns == ["x", "R"]
    assert [float(r[0]) for r in rows] == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert meta["assertions"]["forms_agree"]


def test_envelope_presets(capsys):
    code, out, _ = run(capsys, "envelope", "--preset", "bessel-log")
    assert code == 0
    meta, columns, _ = parse(out)
    assert columns == ["kind", "location", "value"]
    assert meta["summary"]["verdict"] == "nonincreasing"
    code, out, _ = run(capsys, "envelope", "--preset", "bessel-sqrt")
    assert code == 0
    assert parse(out)[0]["summary"]["verdict"] == "nondecreasing"
    code, out, _ = run(capsys, "envelope", "--preset", "hermite-weighted", "--n", "6")
    assert code == 0
    assert parse(out)[0]["assertions"]["slopes_at_zeros_decreasing"]


def test_envelope_phi_file(capsys, tmp_path):
    good = tmp_path / "phi.txt"
    good.write_text("0 1\n10 4\n")
    code, out, _ = run(capsys, "envelope", "--phi-file", str(good), "--y0", "1", "--dy0", "0")
    assert code == 0
    assert parse(out)[0]["summary"]["verdict"] == "nonincreasing"
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\nx y\n")
    code, out, err = run(capsys, "envelope", "--phi-file", str(bad))
    assert code == 2
    assert "not a number" in err


def test_soliton_sech(capsys):
    code, out, _ = run(capsys, "soliton", "--preset", "sech")
    assert code == 0
    meta, columns, rows = parse(out)
    assert columns == ["r", "y", "dy", "f"]
    assert meta["assertions"]["sech_closed_form"]
    assert meta["summary"]["sech_error"] <= 1e-6


def test_soliton_random(capsys):
    code, out, _ = run(capsys, "soliton", "--preset", "random", "--count", "10", "--seed", "4")
    assert code == 0
    meta, _, rows = parse(out)
    assert len(rows) == 10
    assert meta["assertions"]["all_configs_pass"]


def test_soliton_not_applicable(capsys):
    code, out, _ = run(capsys, "soliton", "--potential", "harmonic:0.5", "--y0", "0.3", "--rmax", "8")
    assert code == 0
    meta = parse(out)[0]
    assert meta["summary"]["verdict"] == "not applicable"
    assert "envelope_nonincreasing" not in meta["assertions"]


def test_soliton_shooting(capsys):
    code, out, _ = run(capsys, "soliton", "--shoot", "1.2", "1.6", "--rmax", "20")
    assert code == 0
    assert parse(out)[0]["summary"]["y0"] == pytest.approx(2**0.5, abs=1e-6)


def test_sample_histogram(capsys):
    code, out, _ = run(capsys, "sample", "--n", "2", "--beta", "2", "--runs", "20000", "--eps", "0.05",
                       "--bins", "-1", "1", "0.5", "--seed", "3")
    assert code == 0
    meta, columns, rows = parse(out)
    assert columns[:3] == ["left", "right", "count"]
    assert len(rows) == 4
    assert meta["seed"] == 3
    assert "near_singular_law" in meta["assertions"]


def test_dbm_scan(capsys):
    code, out, _ = run(capsys, "dbm", "--n", "2", "--beta", "0", "--const", "0", "--runs", "2000",
                       "--scan", "0", "1", "0.5", "--eps", "0.5")
    assert code == 0
    meta, columns, rows = parse(out)
    assert columns == ["x", "estimate", "stderr", "runs"]
    assert meta["summary"]["argmax"] == 0.0


def test_dbm_histogram(capsys):
    code, out, _ = run(capsys, "dbm", "--n", "2", "--beta", "2", "--init=-0.5,0.5", "--runs", "500",
                       "--bins", "-3", "3", "1")
    assert code == 0
    meta, _, rows = parse(out)
    assert len(rows) == 6
    assert meta["params"]["initial"] == [-0.5, 0.5]


def test_reruns_are_byte_identical(capsys, tmp_path):
    argv = ["sample", "--n", "3", "--beta", "1", "--runs", "5000", "--bins", "-3", "3", "0.5", "--seed", "8"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv, "--workers", "3")[1]
    assert first == second
    target = tmp_path / "out.csv"
    assert cli.main(argv + ["--out", str(target)]) == 0
    assert target.read_text() == first
    assert capsys.readouterr().out == ""


def test_assertion_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(soliton, "lyapunov_residual", lambda profile: 1.0)
    code, out, err = run(capsys, "soliton", "--preset", "sech")
    assert code == 1
    assert parse(out)[0]["passed"] is False
    assert "lyapunov_identity" in err


def test_abort_exit_code(capsys, monkeypatch):
    def explode(*args, **kwargs):
        raise BlowUpError("|y| exceeded 1e6")

    monkeypatch.setattr(soliton, "integrate_radial", explode)
    code, out, err = run(capsys, "soliton", "--y0", "1.0")
    assert code == 3
    assert "numerical abort" in err


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "soninlab", "hermite", "--n", "2", "--zeros"],
                          capture_output=True, text=True, check=False)
    assert done.returncode == 0
    lines = done.stdout.splitlines()
    assert lines[1] == "k_or_index,value"
    assert [float(v.split(",")[1]) for v in lines[2:]] == pytest.approx([-1.0, 1.0], abs=1e-10)
