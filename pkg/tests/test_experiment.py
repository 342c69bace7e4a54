import math

import numpy as np
import pytest

from dielectric_limit.harness.config import ExperimentConfig
from dielectric_limit.harness.experiment import (
    EXPECTED_SLOPES,
    CheckResult,
    SweepReport,
    choose_time_step,
    compute_background,
    evaluate_rates,
    rate_checks,
    run_pair,
    sweep_epsilon,
)
from dielectric_limit.harness.initial import default_background_ic
from dielectric_limit.mhd import mhd_wave_speed

SMALL = ExperimentConfig(n=16, t_final=0.1, epsilons=(0.2, 0.1, 0.05, 0.02), cadence=4)


def test_time_step_respects_cfl_and_cadence():
    cfg = ExperimentConfig()
    bg = default_background_ic(cfg.grid, cfg.amp)
    dt, n = choose_time_step(cfg, bg)
    assert n % cfg.cadence == 0
    assert dt * n == pytest.approx(cfg.t_final)
    assert dt <= cfg.cfl * cfg.grid.dx / mhd_wave_speed(bg, cfg.eos)
    assert (n, dt) == (32, 0.015625)


def test_background_pins_step_times():
    bg = compute_background(SMALL)
    assert len(bg.states) == bg.n_steps + 1
    assert [s.t for s in bg.states] == [i * bg.dt for i in range(bg.n_steps + 1)]
    assert bg.t_final == pytest.approx(SMALL.t_final)


def test_large_eps_smoke_run():
    cfg = SMALL.with_(t_final=0.02)
    res = run_pair(cfg, 0.5)
    assert res.summary["t_reached"] == pytest.approx(0.02)
    assert all(math.isfinite(v) for v in res.summary.values())
    assert res.series[0]["t"] == 0.0
    assert res.series[-1]["t"] == pytest.approx(0.02)


def test_series_invariants():
    res = run_pair(SMALL, 0.05)
    damp = [r["damping_accum"] for r in res.series]
    assert all(b >= a for a, b in zip(damp, damp[1:]))
    for r in res.series:
        assert r["weighted_s2"] >= r["norm_s2"] >= 0
        assert r["weighted_s0"] ** 2 == pytest.approx(r["norm_s0"] ** 2 + 0.05 * r["f_norm_s0"] ** 2)
    assert res.summary["max_div_G"] < 1e-11


def test_unperturbed_data_error_shrinks_with_eps():
    cfg = SMALL.with_(perturb_amp=0.0)
    bg = compute_background(cfg)
    sups = [run_pair(cfg, e, bg).summary["sup_gamma_s0"] for e in (0.1, 0.05, 0.02)]
    assert sups[0] > sups[1] > sups[2] > 0


def test_evaluate_rates_on_synthetic_rows():
    eps = [0.1, 0.05, 0.02, 0.01]
    rows = [{k: 3.0 * e**p for k, p in EXPECTED_SLOPES.items()} | {"epsilon": e} for e in sorted(eps)]
    fits, flags, C, ratio = evaluate_rates(rows)
    assert flags == []
    for k, p in EXPECTED_SLOPES.items():
        assert fits[k].slope == pytest.approx(p, abs=1e-12)
    assert C == pytest.approx(3.0)
    assert ratio == pytest.approx(1.0)
    report = SweepReport(rows, fits, flags, "h", C, ratio)
    assert all(c.passed for c in rate_checks(report))


def test_rate_checks_fail_outside_band():
    eps = [0.1, 0.05, 0.02, 0.01]
    rows = [{k: e**2 for k in EXPECTED_SLOPES} | {"epsilon": e} for e in sorted(eps)]
    fits, flags, C, ratio = evaluate_rates(rows)
    checks = {c.name: c for c in rate_checks(SweepReport(rows, fits, flags, "h", C, ratio))}
    assert not checks["sup_norm_s0 slope"].passed
    assert checks["damping slope"].passed


def test_check_result_line():
    assert CheckResult("x", 0.5, "<= 1", True).line() == "[PASS] x: 0.5 (<= 1)"
    assert CheckResult("x", 2.0, "<= 1", False).line().startswith("[FAIL]")


def test_sweep_writes_outputs(tmp_path):
    report = sweep_epsilon(SMALL, out_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == sorted(
        ["sweep_report.csv"] + [f"series_{e:g}.csv" for e in SMALL.epsilons]
    )
    assert [r["epsilon"] for r in report.rows] == sorted(SMALL.epsilons)
    assert report.config_hash == SMALL.hash()
    assert np.isfinite(report.fits["sup_norm_s0"].slope)
