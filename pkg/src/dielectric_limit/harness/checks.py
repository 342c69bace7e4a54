"""Identity and invariant suite behind ``dielectric-limit check``."""

from __future__ import annotations

import logging
import math

import numpy as np

from ..eos import EosClosure
from ..error_analysis import cancellation_check, div_curl_bound_check, error_state, symmetric_form
from ..spectral import TorusField, TorusGrid, curl, curl_via_B
from .config import ExperimentConfig
from .experiment import CheckResult, compute_background, run_pair
from .initial import well_prepared_init

log = logging.getLogger(__name__)

__all__ = ["eos_checks", "random_field", "run_checks", "structural_checks"]


def random_field(grid: TorusGrid, rng: np.random.Generator, rank="vector", kmax=None, unit_max=True):
    """Band-limited random field, scaled to unit max-norm when ``unit_max``."""
    kmax = grid.n // 3 if kmax is None else kmax
    mask = np.ones(grid.spec_shape, dtype=bool)
    for k in grid.kabs:
        mask &= k <= kmax
    ncomp = 3 if rank == "vector" else 1
    shape = (ncomp,) + grid.spec_shape
    spec = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mask
    # decay keeps high modes from dominating
    spec = spec / (1.0 + grid.k2) ** 1.5
    phys = grid.ifft(spec)
    if unit_max:
        phys = phys / np.max(np.abs(phys))
    return TorusField(grid, phys if rank == "vector" else phys[0])


def structural_checks(grid: TorusGrid, seed: int, n_pairs: int = 100) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    cancel = max(
        cancellation_check(random_field(grid, rng), random_field(grid, rng)) for _ in range(n_pairs)
    )
    div_curl = curl_grad = via_B = 0.0
    for _ in range(10):
        w = random_field(grid, rng)
        f = random_field(grid, rng, "scalar")
        div_curl = max(div_curl, float(np.max(np.abs(grid.div(grid.curl(w.phys))))))
        curl_grad = max(curl_grad, float(np.max(np.abs(grid.curl(grid.grad(f.phys))))))
        via_B = max(via_B, float(np.max(np.abs(curl_via_B(w).phys - curl(w).phys))))
    return [
        CheckResult(f"cancellation over {n_pairs} pairs", cancel, "<= 1e-12", cancel <= 1e-12),
        CheckResult("div(curl w)", div_curl, "<= 1e-12", div_curl <= 1e-12),
        CheckResult("curl(grad f)", curl_grad, "<= 1e-12", curl_grad <= 1e-12),
        CheckResult("curl_via_B - curl", via_B, "<= 1e-13", via_B <= 1e-13),
    ]


def div_curl_constant(grid: TorusGrid, seed: int, samples: int = 1000, sigma: int = 2) -> float:
    """Largest observed div-curl ratio over random band-limited ``(P, U)``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        U = random_field(grid, rng, kmax=8)
        P = random_field(grid, rng, "scalar", kmax=8)
        worst = max(worst, div_curl_bound_check(U, sigma, P))
    return worst


def eos_checks(eos: EosClosure, seed: int, samples: int = 10_000) -> list[CheckResult]:
    """Derivative consistency of ``coeff_a`` and the order of the Gibbs residual."""
    rng = np.random.default_rng(seed)
    S = rng.uniform(eos.S_floor, 2.0, samples)
    p = rng.uniform(max(eos.p_floor, 1e-3), 10.0, samples)
    h = 1e-6 * p
    fd = (eos.density(S, p + h) - eos.density(S, p - h)) / (2 * h) / eos.density(S, p)
    rel = float(np.max(np.abs(fd - eos.coeff_a(S, p)) / eos.coeff_a(S, p)))

    hs = 1e-2
    r1 = eos.gibbs_residual(S, p, hs, hs * p)
    r2 = eos.gibbs_residual(S, p, hs / 2, hs * p / 2)
    order = np.log2(r1 / r2)
    lo, hi = float(np.min(order)), float(np.max(order))
    positive = all(
        np.all(f(S, p) > 0) for f in (eos.density, eos.temperature, eos.coeff_a, eos.coeff_b)
    )
    return [
        CheckResult("coeff_a vs finite difference (max rel)", rel, "<= 1e-6", rel <= 1e-6),
        CheckResult("gibbs residual order (min)", lo, ">= 1.8", lo >= 1.8),
        CheckResult("gibbs residual order (max)", hi, "<= 2.2", hi <= 2.2),
        CheckResult("closure positivity", float(positive), "== 1", positive),
    ]


def run_checks(cfg: ExperimentConfig, n_pairs: int = 100) -> list[CheckResult]:
    """Everything the ``check`` subcommand reports."""
    g = cfg.grid
    out = structural_checks(g, cfg.seed, n_pairs)

    K = div_curl_constant(g, cfg.seed, samples=200)
    out.append(CheckResult("empirical div-curl constant (sigma=2)", K, "finite", math.isfinite(K)))

    out.extend(eos_checks(cfg.eos, cfg.seed))

    background = compute_background(cfg)
    div_H = div_G = 0.0
    for eps in cfg.epsilons:
        row = run_pair(cfg, eps, background).summary
        div_H = max(div_H, row["max_div_H"])
        div_G = max(div_G, row["max_div_G"])
    out.append(CheckResult("max div H over default runs", div_H, "<= 1e-11", div_H <= 1e-11))
    out.append(CheckResult("max div G over default runs", div_G, "<= 1e-11", div_G <= 1e-11))

    # symmetric form on a genuine error state
    eps = cfg.epsilons[0]
    bg = background.state(0)
    em = well_prepared_init(bg, eps, cfg.perturb_amp, cfg.seed, s=max(cfg.s_list))
    W = error_state(em, bg)
    D, A = symmetric_form(W, bg, eps, cfg.eos)
    asym = float(np.max(np.abs(A - np.swapaxes(A, 1, 2))))
    diag = np.einsum("ii...->i...", D)
    off = D - np.einsum("ij,i...->ij...", np.eye(11), diag)
    d_min = float(np.min(diag))
    out.append(CheckResult("A_i - A_i^T", asym, "== 0", asym == 0.0))
    out.append(
        CheckResult("min diag D", d_min, "> 0 and D diagonal", d_min > 0 and not np.any(off))
    )
    return out
