import pytest

from dielectric_limit.harness.config import ConfigError, ExperimentConfig, config_from_mapping, load_config


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.n == 64 and cfg.active_dims == 2
    assert cfg.epsilons == (1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3)
    assert cfg.t_final == 0.5 and cfg.cfl == 0.4 and cfg.cadence == 8
    assert cfg.amp == 0.1 and cfg.perturb_amp == 1.0
    assert cfg.grid.shape == (64, 64, 1)
    assert cfg.eos.gamma == pytest.approx(5 / 3)


def test_load_none_gives_defaults():
    assert load_config(None) == ExperimentConfig()


def test_toml_round_trip(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text(
        """
[grid]
n = 32
active_dims = 3
[eos]
gamma = 1.4
[sweep]
epsilons = [0.1, 0.01, 0.001]
t_final = 0.25
s_list = [0, 2, 4]
workers = 3
[ic]
amp = 0.2
seed = 7
[output]
dir = "results"
"""
    )
    cfg = load_config(path)
    assert (cfg.n, cfg.active_dims, cfg.gamma) == (32, 3, 1.4)
    assert cfg.epsilons == (0.1, 0.01, 0.001)
    assert cfg.s_list == (0, 2, 4)
    assert (cfg.workers, cfg.amp, cfg.seed, cfg.output_dir) == (3, 0.2, 7, "results")


@pytest.mark.parametrize(
    "data, match",
    [
        ({"solver": {"n": 1}}, "section"),
        ({"grid": {"resolution": 64}}, "resolution"),
        ({"grid": 3}, "table"),
        ({"grid": {"n": 7}}, "even"),
        ({"sweep": {"epsilons": [0.1, 0.2]}}, "decreasing"),
        ({"sweep": {"epsilons": [0.1, -0.2]}}, "positive"),
        ({"sweep": {"s_list": [0, 1]}}, "s_list"),
        ({"sweep": {"cfl": 1.5}}, "cfl"),
        ({"eos": {"gamma": 0.9}}, "gamma"),
        ({"ic": {"recipe": "vortex"}}, "recipe"),
        ({"ic": {"seed": -1}}, "seed"),
        ({"ic": {"perturb_amp": -1.0}}, "perturb_amp"),
    ],
)
def test_invalid_configs_rejected(data, match):
    with pytest.raises(ConfigError, match=match):
        config_from_mapping(data)


def test_hash_ignores_workers_and_output():
    a = ExperimentConfig()
    assert a.hash() == a.with_(workers=4, output_dir="elsewhere").hash()
    assert a.hash() != a.with_(seed=1).hash()
    assert a.hash() != a.with_(epsilons=(0.1, 0.01, 0.001)).hash()
    assert len(a.hash()) == 16


def test_hash_is_stable_across_processes():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c",
         "from dielectric_limit.harness.config import ExperimentConfig;print(ExperimentConfig().hash())"],
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == ExperimentConfig().hash()
