import pytest

from dielectric_limit.harness.cli import main

TINY = """
[grid]
n = 16
[sweep]
epsilons = [0.2, 0.1, 0.05, 0.02]
t_final = 0.05
cadence = 4
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY)
    return path


def test_run_writes_series(tiny_config, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--config", str(tiny_config), "--epsilon", "0.1", "--out", str(out)])
    assert code == 0
    assert (out / "series_0.1.csv").exists()
    assert "sup_norm_s0" in capsys.readouterr().out


def test_sweep_prints_slopes_and_checks(tiny_config, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["sweep", "--config", str(tiny_config), "--out", str(out), "--seed", "3"])
    text = capsys.readouterr().out
    assert "slope sup_norm_s0" in text
    assert "[PASS]" in text or "[FAIL]" in text
    assert code in (0, 1)
    assert (out / "sweep_report.csv").exists()


def test_unknown_key_is_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid]\nresolution = 3\n")
    assert main(["check", "--config", str(bad)]) == 2
    assert "resolution" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["check", "--config", str(tmp_path / "nope.toml")]) == 2


def test_run_requires_epsilon(tiny_config):
    with pytest.raises(SystemExit):
        main(["run", "--config", str(tiny_config)])


def test_failed_run_exits_nonzero(tmp_path, capsys):
    cfg = tmp_path / "hot.toml"
    cfg.write_text("[grid]\nn = 16\n[sweep]\nt_final = 0.05\n[ic]\nperturb_amp = 1e9\n")
    assert main(["run", "--config", str(cfg), "--epsilon", "0.1", "--out", str(tmp_path)]) == 1
    assert "aborted" in capsys.readouterr().err
