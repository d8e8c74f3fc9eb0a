import csv
import io

import numpy as np
import pytest

from sgnlame import cli
from sgnlame.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, RUN_COLUMNS, RunConfig, main


def run(tmp_path, *args):
    return main([*args, "--out-dir", str(tmp_path)])


def read_rows(text):
    return list(csv.reader(io.StringIO("".join(l + "\n" for l in text.splitlines() if not l.startswith("#")))))


def test_usage_errors(tmp_path, capsys):
    assert main(["frobnicate"]) == EXIT_USAGE
    assert run(tmp_path, "solve", "--p", "100") == EXIT_USAGE
    assert run(tmp_path, "solve", "--theta", "7") == EXIT_USAGE
    assert run(tmp_path, "solve", "--set", "nonsense=1") == EXIT_USAGE
    assert run(tmp_path, "solve", "--shape", "hexagon") == EXIT_USAGE
    assert run(tmp_path, "spectrum", "--config", str(tmp_path / "missing.txt")) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_dense_cap_is_a_numerical_failure(tmp_path):
    assert run(tmp_path, "solve", "--shape", "circle", "--max-dofs", "100") == EXIT_NUMERIC


def test_config_echo_written(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--theta", "3pi/2", "--lambda", "1.5") == EXIT_OK
    echo = (tmp_path / "config.txt").read_text()
    assert f"theta={3 * np.pi / 2!r}" in echo and "lam=1.5" in echo and "c1_shift" in echo
    assert "# config" in capsys.readouterr().err


def test_config_file_with_comments_and_alias(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# experiment\nshape = triangle   # equilateral\n\nlambda=3\neps_list=1e-4, 1e-6\n"
                    "sources = 4,0; 0,4\n")
    cfg = cli.load_config(path)
    assert cfg.shape == "triangle" and cfg.lam == 3.0 and cfg.eps_list == (1e-4, 1e-6)
    assert cfg.sources == ((4.0, 0.0), (0.0, 4.0))
    with pytest.raises(cli.UsageError):
        cli.parse_assignments(["no_equals_sign"])
    with pytest.raises(cli.UsageError):
        cli.parse_assignments(["p=abc"])


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("p=8\n")
    cfg = cli.resolve_config(["solve", "--config", str(path), "--p", "12"])
    assert cfg.p == 12


def test_spectrum_extremes(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--theta", "pi") == EXIT_OK
    rows = read_rows(capsys.readouterr().out)
    assert rows[1][1] == "0"
    assert run(tmp_path, "spectrum", "--theta", "0.01") == EXIT_OK
    rows = read_rows(capsys.readouterr().out)
    assert int(rows[1][1]) > 0


def test_compare_on_circle(tmp_path, capsys):
    assert run(tmp_path, "compare", "--shape", "circle") == EXIT_OK
    rows = read_rows(capsys.readouterr().out)
    assert tuple(rows[0]) == RUN_COLUMNS
    assert [r[3] for r in rows[1:]] == ["UM", "SGN"]
    assert all(float(r[9]) <= 1e-12 for r in rows[1:])
    assert (tmp_path / "compare.csv").exists()


def test_single_point_sweep(tmp_path, capsys):
    assert run(tmp_path, "sweep", "--theta", "pi/2", "--eps-list", "1e-5") == EXIT_OK
    text = capsys.readouterr().out
    rows = read_rows(text)
    assert len(rows) == 2 and "# slope" not in text
    assert float(rows[1][5]) == 1e-5


def test_panelize_writes_mesh(tmp_path, capsys):
    assert run(tmp_path, "panelize", "--eps-pan", "1e-4") == EXIT_OK
    assert capsys.readouterr().out.startswith("arc_id,t0,t1,depth,owner_corner,flagged")
    assert (tmp_path / "shape.json").exists()


def test_plateau_slope():
    eps = [1e-2, 1e-3, 1e-4, 1e-5]
    slope, n = cli.plateau_slope(eps, [1e-1, 1e-2, 1e-3, 1e-4])
    assert slope == pytest.approx(1.0) and n == 2
    slope, n = cli.plateau_slope(eps, [1e-2, 1e-3, 1e-4, 1e-8])
    assert slope == pytest.approx(1.0) and n == 3
    assert np.isnan(cli.plateau_slope(eps, [1e-14] * 4)[0])


def test_run_config_validation():
    assert RunConfig().validate().params.c1 == pytest.approx(0.2)
    mismatched = dict(sources=((3.0, 0.0),), strengths=((1.0, 0.0), (0.0, 1.0)))
    for bad in (dict(mu=0.0), dict(eps_pan=0.0), dict(workers=0), mismatched):
        with pytest.raises(cli.UsageError):
            RunConfig(**bad).validate()


def test_verify_battery(tmp_path, capsys):
    assert run(tmp_path, "verify") == EXIT_OK
    text = capsys.readouterr().out
    rows = read_rows(text)
    from sgnlame.oracle import battery_manifest
    assert len(rows) - 1 == len(battery_manifest())
    assert all(r[-1] == "1" for r in rows[1:])
    assert (tmp_path / "battery.csv").read_text() == text


def test_verify_fails_with_perturbed_constant(tmp_path, monkeypatch):
    from sgnlame import oracle
    shifted = oracle.battery_manifest
    monkeypatch.setattr(oracle, "battery_manifest", lambda params=None, seed=oracle.BATTERY_SEED: [
        it for it in shifted(params, seed) if it[0].startswith("forward")])
    assert run(tmp_path, "verify", "--set", "c1_shift=1e-3") == EXIT_VERIFY
