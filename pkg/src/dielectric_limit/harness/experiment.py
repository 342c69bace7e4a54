"""Paired Euler-Maxwell / MHD runs and the epsilon sweep."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..em import EmRunConfig, em_step
from ..error_analysis import energy_report, error_residual, error_state
from ..mhd import MhdRunConfig, MhdState, mhd_step, mhd_wave_speed
from ..monitors import PositivityError
from ..spectral import sobolev_norm
from .config import ExperimentConfig
from .fitting import FitError, fit_rate
from .initial import default_background_ic, well_prepared_init
from . import io

log = logging.getLogger(__name__)

__all__ = [
    "Background",
    "CheckResult",
    "PairResult",
    "RunError",
    "SweepReport",
    "choose_time_step",
    "compute_background",
    "evaluate_rates",
    "residual_study",
    "run_pair",
    "sweep_epsilon",
]

# index used for the single ``gamma`` column of the series files
GAMMA_COLUMN_S = 2

# rate metrics and the exponent the limit theory predicts for each
EXPECTED_SLOPES = {
    "sup_norm_s0": 1.0,
    "sup_norm_s2": 1.0,
    "sup_norm_s4": 1.0,
    "sup_sqrt_eps_F_s0": 1.0,
    "sup_sqrt_eps_F_s2": 1.0,
    "sup_F_s0": 0.5,
    "sup_F_s2": 0.5,
    "damping": 2.0,
    "sup_gamma_s0": 2.0,
    "sup_gamma_s2": 2.0,
}


class RunError(RuntimeError):
    """A solver abort, annotated with the run it came from."""


@dataclass
class Background:
    """MHD trajectory stored at every step; shared read-only by all runs."""

    dt: float
    n_steps: int
    states: list

    def state(self, i: int) -> MhdState:
        return self.states[i]

    @property
    def t_final(self) -> float:
        return self.states[-1].t


def choose_time_step(cfg: ExperimentConfig, bg0: MhdState) -> tuple[float, int]:
    """Step size from the fast-magnetosonic CFL bound, rounded so that the
    step count is a multiple of the snapshot cadence."""
    g = cfg.grid
    dt_cfl = cfg.cfl * g.dx / mhd_wave_speed(bg0, cfg.eos)
    n = math.ceil(cfg.t_final / dt_cfl)
    n = cfg.cadence * math.ceil(n / cfg.cadence)
    return cfg.t_final / n, n


def compute_background(cfg: ExperimentConfig, n_steps: int | None = None) -> Background:
    g, eos = cfg.grid, cfg.eos
    state = default_background_ic(g, cfg.amp)
    dt, n = choose_time_step(cfg, state)
    if n_steps is not None:
        n, dt = n_steps, cfg.t_final / n_steps
    mcfg = MhdRunConfig(dt, cfg.t_final, g, eos, cfg.cfl)
    states = [state]
    for i in range(n):
        try:
            state = mhd_step(state, mcfg)
        except PositivityError as exc:
            raise RunError(f"MHD background aborted at t={exc.t:.4g}: {exc}") from exc
        # pin the clock to the grid of step boundaries
        state = MhdState(state.p, state.u, state.S, state.H, (i + 1) * dt)
        states.append(state)
    log.info("background: %d steps of dt=%.4g to T=%g", n, dt, cfg.t_final)
    return Background(dt, n, states)


@dataclass
class PairResult:
    epsilon: float
    series: list
    summary: dict


def run_pair(cfg: ExperimentConfig, epsilon: float, background: Background | None = None) -> PairResult:
    """Integrate the Euler-Maxwell system at ``epsilon`` alongside the background.

    Energies are evaluated at every step (the suprema and the damping
    integral use all of them); a series row is kept every ``cfg.cadence``
    steps.
    """
    if background is None:
        background = compute_background(cfg)
    g, eos = cfg.grid, cfg.eos
    s_top = max(cfg.s_list)
    dt, n = background.dt, background.n_steps
    bg0 = background.state(0)
    try:
        em = well_prepared_init(bg0, epsilon, cfg.perturb_amp, cfg.seed, s=s_top)
    except Exception as exc:
        raise RunError(f"eps={epsilon:g}: initial data rejected: {exc}") from exc
    ecfg = EmRunConfig(epsilon, dt, cfg.t_final, g, eos, cfg.cfl)

    sq = math.sqrt(epsilon)
    sup = {k: 0.0 for k in EXPECTED_SLOPES if k != "damping"}
    series = []
    damping = 0.0
    prev_f2 = None
    t_reached = 0.0
    max_div_H = max_div_G = 0.0

    for i in range(n + 1):
        if i > 0:
            try:
                em = em_step(em, ecfg)
            except PositivityError as exc:
                raise RunError(f"eps={epsilon:g}, t={exc.t:.4g}: {exc}") from exc
            em = type(em)(em.p, em.u, em.S, em.E, em.H, i * dt)
        W = error_state(em, background.state(i))
        f2 = sobolev_norm(W.F, 0) ** 2
        if prev_f2 is not None:
            damping += 0.5 * dt * (prev_f2 + f2)
        prev_f2 = f2
        rep = energy_report(W, epsilon, cfg.s_list, damping)
        div_H = em.div_H()
        div_G = W.div_G()
        max_div_H = max(max_div_H, div_H)
        max_div_G = max(max_div_G, div_G)
        for s in (0, 2):
            sup[f"sup_norm_s{s}"] = max(sup[f"sup_norm_s{s}"], rep.norm[s])
            sup[f"sup_sqrt_eps_F_s{s}"] = max(sup[f"sup_sqrt_eps_F_s{s}"], sq * rep.f_norm[s])
            sup[f"sup_F_s{s}"] = max(sup[f"sup_F_s{s}"], rep.f_norm[s])
            sup[f"sup_gamma_s{s}"] = max(sup[f"sup_gamma_s{s}"], rep.gamma[s])
        sup["sup_norm_s4"] = max(sup["sup_norm_s4"], rep.norm[4])
        t_reached = em.t
        if i % cfg.cadence == 0:
            series.append(
                {
                    "t": em.t,
                    "norm_s0": rep.norm[0],
                    "norm_s2": rep.norm[2],
                    "norm_s4": rep.norm[4],
                    "weighted_s0": rep.weighted[0],
                    "weighted_s2": rep.weighted[2],
                    "f_norm_s0": rep.f_norm[0],
                    "damping_accum": damping,
                    "gamma": rep.gamma[GAMMA_COLUMN_S],
                    "min_p": em.p.minimum(),
                    "min_S": em.S.minimum(),
                    "div_H": div_H,
                }
            )
    summary = {
        "epsilon": epsilon,
        **sup,
        "damping": damping,
        "max_div_H": max_div_H,
        "max_div_G": max_div_G,
        "t_reached": t_reached,
        "n_steps": n,
        "dt": dt,
    }
    log.info("eps=%g done: sup||W||_0=%.3e", epsilon, sup["sup_norm_s0"])
    return PairResult(epsilon, series, summary)


def _run_pair_worker(args):
    cfg, epsilon, background = args
    return run_pair(cfg, epsilon, background)


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: str
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.6g} ({self.threshold})"


@dataclass
class SweepReport:
    rows: list
    fits: dict
    flags: list = field(default_factory=list)
    config_hash: str = ""
    gamma_constant: float = float("nan")
    gamma_bound_ratio: float = float("nan")

    def metric(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])


def evaluate_rates(rows: list) -> tuple[dict, list, float, float]:
    """Fit every rate metric and run the monotonicity and Gamma-bound checks."""
    rows = sorted(rows, key=lambda r: r["epsilon"])
    fits, flags = {}, []
    eps = [r["epsilon"] for r in rows]
    for name in EXPECTED_SLOPES:
        vals = [r[name] for r in rows]
        if any(b < a for a, b in zip(vals, vals[1:])):
            flags.append(f"{name} is not monotone in epsilon")
        try:
            fits[name] = fit_rate(zip(eps, vals))
        except FitError as exc:
            flags.append(f"{name}: {exc}")
    largest = rows[-1]
    C = largest["sup_gamma_s0"] / largest["epsilon"] ** 2
    ratio = max(r["sup_gamma_s0"] / (C * r["epsilon"] ** 2) for r in rows) if C > 0 else float("nan")
    return fits, flags, C, ratio


def sweep_epsilon(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    workers: int | None = None,
) -> SweepReport:
    """Run every epsilon of ``cfg`` against one shared background and fit rates."""
    eps_list = cfg.epsilons
    if len(eps_list) < 4 or math.log10(max(eps_list) / min(eps_list)) < 1.5:
        log.warning("sweep has fewer than 4 points or spans under 1.5 decades")
    workers = workers or cfg.workers
    background = compute_background(cfg)
    jobs = [(cfg, e, background) for e in eps_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs), os.cpu_count() or 1)) as pool:
            results = list(pool.map(_run_pair_worker, jobs))
    else:
        results = [_run_pair_worker(j) for j in jobs]

    digest = cfg.hash()
    rows = sorted((r.summary for r in results), key=lambda r: r["epsilon"])
    fits, flags, C, ratio = evaluate_rates(rows)
    report = SweepReport(rows, fits, flags, digest, C, ratio)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            io.write_series(out / io.series_name(r.epsilon), r.series, digest)
        io.write_sweep_report(out / "sweep_report.csv", report)
    return report


def rate_checks(report: SweepReport) -> list[CheckResult]:
    """Acceptance bands for the sweep (main rate, F rates, damping, Gamma)."""
    f = report.fits
    out = []

    def band(name, lo, hi=None):
        fit = f.get(name)
        val = float("nan") if fit is None else fit.slope
        ok = fit is not None and val >= lo and (hi is None or val <= hi)
        thr = f"slope in [{lo}, {hi}]" if hi is not None else f"slope >= {lo}"
        out.append(CheckResult(f"{name} slope", val, thr, ok))

    band("sup_norm_s0", 0.85, 1.15)
    band("sup_norm_s2", 0.85, 1.15)
    band("sup_sqrt_eps_F_s0", 0.85)
    band("sup_F_s0", 0.4)
    band("damping", 1.7)
    band("sup_gamma_s0", 1.7)
    out.append(
        CheckResult(
            "sup Gamma / (C eps^2)",
            report.gamma_bound_ratio,
            "<= 10 with C from the largest eps",
            bool(report.gamma_bound_ratio <= 10.0),
        )
    )
    return out


@dataclass
class ResidualStudy:
    epsilon: float
    dts: list
    residuals: list
    """per dt, ``{equation: max residual}``"""
    orders: dict
    """equation -> fitted log-log slope of residual vs dt"""

    def min_order(self) -> float:
        return min(self.orders.values())


def residual_study(
    cfg: ExperimentConfig,
    epsilon: float = 5e-2,
    divisors=(64, 128, 256),
    layer_widths: float = 5.0,
) -> ResidualStudy:
    """Error-system residual of a well-prepared pair under ``dt`` halving.

    Snapshots are taken every step so the fourth-order time differences
    stay accurate at the coarsest ``dt``; times before
    ``layer_widths * epsilon`` are skipped because the electric field's
    start-up layer is not resolved by the snapshot spacing.
    """
    g, eos = cfg.grid, cfg.eos
    bg0 = default_background_ic(g, cfg.amp)
    em0 = well_prepared_init(bg0, epsilon, cfg.perturb_amp, cfg.seed, s=max(cfg.s_list))
    dts, residuals = [], []
    for d in divisors:
        dt = cfg.t_final / d
        mcfg = MhdRunConfig(dt, cfg.t_final, g, eos, cfg.cfl)
        ecfg = EmRunConfig(epsilon, dt, cfg.t_final, g, eos, cfg.cfl)
        ms, es = bg0, em0
        mt, et = [ms], [es]
        for i in range(d):
            ms = mhd_step(ms, mcfg)
            es = em_step(es, ecfg)
            ms = MhdState(ms.p, ms.u, ms.S, ms.H, (i + 1) * dt)
            es = type(es)(es.p, es.u, es.S, es.E, es.H, (i + 1) * dt)
            mt.append(ms)
            et.append(es)
        rep = error_residual(et, mt, epsilon, eos, t_min=layer_widths * epsilon)
        dts.append(dt)
        residuals.append(rep.max())
        log.info("residual study dt=%.3g: %s", dt, rep.max())
    orders = {
        k: fit_rate([(dt, r[k]) for dt, r in zip(dts, residuals)]).slope for k in residuals[0]
    }
    return ResidualStudy(epsilon, dts, residuals, orders)
