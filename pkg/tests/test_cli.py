import csv
import json

import numpy as np
import pytest

from prescribed_curvature import cli

ROUND_YAML = """\
metric:
  terms: []
curvature:
  constant: 1.0
schedule:
  s_steps: 5
  t_steps: 3
seeds:
  N: 64
  axes: [[0, 0, 1]]
"""

SINGLE_STATE_YAML = """\
metric:
  terms: []
curvature:
  constant: 1.0
schedule:
  path: [[0, 1]]
seeds:
  N: 128
  axes: [[0, 0, 1]]
output:
  formats: [curve-table]
"""

NONCONVEX_YAML = "metric:\n  terms: [{l: 2, m: 0, coeff: 3.0}]\n"

COLLAPSE_YAML = """\
metric:
  terms: []
curvature:
  constant: 1.0
schedule:
  path: [[0, 0], [0, 3]]
  max_step: 3.0
  min_step: 3.0
seeds:
  N: 64
  axes: [[0, 0, 1]]
output:
  formats: []
"""


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def only_run(base):
    runs = [p for p in base.iterdir() if p.is_dir()]
    assert len(runs) == 1
    return runs[0]


@pytest.fixture(scope="module")
def round_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("round")
    code = cli.main(["solve", str(write(tmp, ROUND_YAML)), "--out", str(tmp / "runs")])
    return code, only_run(tmp / "runs")


def test_success_exit_and_layout(round_run):
    code, run_dir = round_run
    assert code == 0
    assert (run_dir / "config.yaml").exists() and (run_dir / "result.json").exists()
    for fmt in ("curve-table", "diagnostics-table", "plot-bundle"):
        assert any((run_dir / "exports" / fmt).iterdir())


def test_diagnostics_table(round_run):
    _, run_dir = round_run
    with open(run_dir / "exports" / "diagnostics-table" / "diagnostics.tsv") as fh:
        rows = list(csv.DictReader(fh, delimiter="\t"))
    last = rows[-1]
    assert float(last["t"]) == 1.0 and float(last["s"]) == 1.0
    assert float(last["length"]) == pytest.approx(np.pi * np.sqrt(2), abs=1e-5)
    assert all(r["embedded"] == "true" for r in rows)


def test_export_is_byte_identical(round_run, tmp_path):
    _, run_dir = round_run
    for fmt in ("curve-table", "diagnostics-table", "plot-bundle"):
        a = cli.export(run_dir, fmt, tmp_path / "a" / fmt)
        b = cli.export(run_dir, fmt, tmp_path / "b" / fmt)
        for fa in sorted(a.iterdir()):
            assert fa.read_bytes() == (b / fa.name).read_bytes()


def test_plot_bundle_is_closed(round_run):
    _, run_dir = round_run
    with open(run_dir / "exports" / "plot-bundle" / "branch-0.polyline.csv") as fh:
        rows = [r for r in csv.DictReader(fh) if r["state"] == "0"]
    assert len(rows) == 65
    assert [rows[0][k] for k in "xyz"] == [rows[-1][k] for k in "xyz"]


def test_curve_table_rows(tmp_path):
    assert cli.main(["solve", str(write(tmp_path, SINGLE_STATE_YAML)), "--out", str(tmp_path / "runs")]) == 0
    run_dir = only_run(tmp_path / "runs")
    lines = (run_dir / "exports" / "curve-table" / "branch-0.curves.txt").read_text().splitlines()
    assert lines[0].startswith("# state 0 t 0.0 s 1.0 N 128")
    assert len(lines) == 129
    result = json.loads((run_dir / "result.json").read_text())
    nodes = np.array(result["branches"][0]["states"][0]["nodes"])
    table = np.array([[float(x) for x in ln.split()[1:]] for ln in lines[1:]])
    assert np.array_equal(nodes, table)  # shortest round-trip text is lossless


def test_convexity_gate_exit(tmp_path, capsys):
    code = cli.main(["solve", str(write(tmp_path, NONCONVEX_YAML)), "--out", str(tmp_path / "runs")])
    assert code == 1
    assert "convexity gate" in capsys.readouterr().err
    assert not (tmp_path / "runs").exists()


def test_config_error_exit(tmp_path, capsys):
    code = cli.main(["solve", str(write(tmp_path, "metric: {}\nsolver: {tol: x}\n")), "--out", str(tmp_path)])
    assert code == 1
    assert "line 2" in capsys.readouterr().err


def test_step_collapse_exit(tmp_path, capsys):
    code = cli.main(["solve", str(write(tmp_path, COLLAPSE_YAML)), "--out", str(tmp_path / "runs")])
    assert code == 2
    assert "step-collapse" in capsys.readouterr().err
    result = json.loads((only_run(tmp_path / "runs") / "result.json").read_text())
    br = result["branches"][0]
    assert br["status"] == "step-collapse"
    assert br["forensics"]["last_accepted"] == [0.0, 0.0]


def test_env_var_sets_output(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "from-env"))
    assert cli.main(["solve", str(write(tmp_path, SINGLE_STATE_YAML))]) == 0
    only_run(tmp_path / "from-env")


def test_runs_are_append_only(tmp_path):
    cfg = write(tmp_path, SINGLE_STATE_YAML)
    for _ in range(2):
        assert cli.main(["solve", str(cfg), "--out", str(tmp_path / "runs")]) == 0
    assert len(list((tmp_path / "runs").iterdir())) == 2


def test_export_errors(tmp_path, capsys):
    assert cli.main(["export", str(tmp_path / "nothing"), "--format", "curve-table"]) == 1
    with pytest.raises(SystemExit):
        cli.main(["export", str(tmp_path), "--format", "pdf"])
    with pytest.raises(SystemExit):
        cli.main([])
    assert cli.main(["solve", "x.yaml", "--threads", "0"]) == 1
