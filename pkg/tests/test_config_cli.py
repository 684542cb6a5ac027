import json

import pytest

from impulsive_fg import cli
from impulsive_fg.config import ConfigError, ExperimentConfig, load_config

SMALL = """
[solver]
n_max = 128
dt = 0.002
[experiment]
dims = 4, 8, 16
n_ref = 64
solve_n = 16
oracle_grid_points = 300
oracle_dt = 0.0005
oracle_tolerance = 0.01
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def test_load_config_values(small_cfg):
    cfg = load_config(small_cfg)
    assert cfg.dims == (4, 8, 16) and cfg.n_ref == 64 and cfg.dt == 0.002
    assert cfg.rho == (0.3, 0.6)


def test_defaults_validate():
    cfg = ExperimentConfig()
    assert cfg.problem().partition.q == 2


@pytest.mark.parametrize("text,match", [
    ("[partition]\nrho = 0.5\nsigma = 0.4\n", "interleaving"),
    ("[experiment]\ndims = 8, 4\n", "strictly increasing"),
    ("[experiment]\ndims = 4, 8, 128\n", "at least 4"),
    ("[solver]\nalpha = 1.5\n", "alpha"),
    ("[nonlinearity]\nkind = cubic\n", "unknown nonlinearity"),
    ("[bogus]\nx = 1\n", "unknown config sections"),
    ("[solver]\ndt = fast\n", "dt"),
])
def test_config_validation_messages(tmp_path, text, match):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises(ConfigError, match=match):
        load_config(path)


def test_cli_validation_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[partition]\nrho = 0.5\nsigma = 0.4\n")
    assert cli.main(["solve", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    assert "interleaving" in capsys.readouterr().err


def test_cli_solve_writes_outputs(small_cfg, tmp_path):
    out = tmp_path / "solve"
    assert cli.main(["solve", "--config", str(small_cfg), "--out", str(out), "--modes", "7"]) == 0
    assert json.loads((out / "manifest.json").read_text())["modes"] == 8
    head = (out / "snapshots.csv").read_text().splitlines()[:2]
    assert head[0] == "t,xi,w"
    assert json.loads((out / "assumptions.json").read_text())["gate_D"] is True


def test_cli_converge_deterministic(small_cfg, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["converge", "--config", str(small_cfg), "--out", str(tmp_path / name)]) == 0
    for f in ("convergence.csv", "summary.txt", "assumptions.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_cli_dims_override(small_cfg, tmp_path):
    out = tmp_path / "d"
    assert cli.main(["converge", "--config", str(small_cfg), "--dims", "2,4,8", "--out", str(out)]) == 0
    rows = (out / "convergence.csv").read_text().splitlines()
    assert rows[1].startswith("64,2,")


def test_cli_gate_failure_exit_code(tmp_path):
    path = tmp_path / "hot.ini"
    path.write_text(SMALL + "[nonlinearity]\nlipschitz_scale = 100\n")
    assert cli.main(["converge", "--config", str(path), "--out", str(tmp_path / "hot")]) == 3


def test_cli_nonconvergence_exit_code(tmp_path):
    path = tmp_path / "tight.ini"
    path.write_text(SMALL.replace("dt = 0.002", "dt = 0.002\npicard_max_iter = 1"))
    assert cli.main(["solve", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_cli_verify_and_oracle_compare(small_cfg, tmp_path, capsys):
    assert cli.main(["verify", "--config", str(small_cfg), "--oracle", "--out", str(tmp_path / "v")]) == 0
    data = json.loads((tmp_path / "v" / "verify.json").read_text())
    assert data["passed"] and any(c["name"] == "fd_oracle_l2" for c in data["checks"])
    assert cli.main(["oracle-compare", "--config", str(small_cfg), "--out", str(tmp_path / "o")]) == 0
    spectral = (tmp_path / "o" / "spectral_snapshots.csv").read_text().splitlines()
    orac = (tmp_path / "o" / "oracle_snapshots.csv").read_text().splitlines()
    assert len(spectral) == len(orac) and spectral[0] == orac[0] == "t,xi,w"
    assert "PASS gate_D" in capsys.readouterr().out
