"""Resistive compressible MHD: the zero-dielectric limit of the Euler-Maxwell system.

    a (p_t + u.grad p) + div u    = 0
    r (u_t + u.grad u) + grad p   = curl H x H
    b (S_t + u.grad S)            = |curl H|^2
    H_t - curl(u x H)             = -curl curl H,    div H = 0

The electric field is slaved to the flow, ``E = curl H - u x H``
(:func:`induced_E`).

:func:`mhd_step` uses the Euler-Maxwell IMEX scheme at ``eps = 0``, so a
discrete Euler-Maxwell trajectory converges to the discrete MHD trajectory
with the same ``dt``.  :func:`mhd_step_split` is a split reference
(exact diffusion, SSP-RK3 transport, exact diffusion).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .eos import EosClosure, EosDomainError
from .monitors import MetricsSink, NullSink, PositivityError, check_positivity
from .spectral import TorusField, TorusGrid

log = logging.getLogger(__name__)

__all__ = [
    "MhdRhs",
    "MhdRunConfig",
    "MhdState",
    "induced_E",
    "magnetic_diffusion_exact",
    "mhd_run",
    "mhd_step",
    "mhd_step_split",
    "mhd_time_derivative",
    "mhd_transport_rhs",
    "mhd_wave_speed",
]


@dataclass(frozen=True)
class MhdState:
    p: TorusField
    u: TorusField
    S: TorusField
    H: TorusField
    t: float = 0.0

    @property
    def grid(self) -> TorusGrid:
        return self.p.grid

    def arrays(self):
        return self.p.phys, self.u.phys, self.S.phys, self.H.phys

    @classmethod
    def from_arrays(cls, grid, p, u, S, H, t=0.0):
        return cls(
            TorusField(grid, p),
            TorusField(grid, u),
            TorusField(grid, S),
            TorusField(grid, H),
            float(t),
        )

    def div_H(self) -> float:
        g = self.grid
        return float(np.max(np.abs(g.ifft(g.div_hat(self.H.spec)))))


@dataclass(frozen=True)
class MhdRunConfig:
    dt: float
    t_final: float
    grid: TorusGrid
    eos: EosClosure = EosClosure()
    cfl: float = 0.4

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")


@dataclass(frozen=True)
class MhdRhs:
    dp: TorusField
    du: TorusField
    dS: TorusField
    dH_advective: TorusField


def induced_E(u: TorusField, H: TorusField) -> TorusField:
    """Limit electric field ``curl H - u x H`` (product dealiased)."""
    g = H.grid
    return TorusField(g, g.ifft(g.curl_hat(H.spec)) - K.advective_emf(g, u.phys, H.phys))


def mhd_transport_rhs(state: MhdState, eos: EosClosure) -> MhdRhs:
    """Fluid tendencies and the advective induction term ``curl(u x H)``."""
    g = state.grid
    p, u, S, H = state.arrays()
    check_positivity(p, S, state.t, eos, "mhd_transport_rhs")
    J = g.ifft(g.curl_hat(state.H.spec))
    dp, du, dS = K.fluid_rhs(g, eos, p, u, S, J, H)
    dH = TorusField(g, spec=g.curl_hat(g.fft(K.advective_emf(g, u, H))))
    return MhdRhs(TorusField(g, dp), TorusField(g, du), TorusField(g, dS), dH)


def mhd_time_derivative(state: MhdState, eos: EosClosure):
    """Full ``(p_t, u_t, S_t, H_t)`` including resistive diffusion, as arrays."""
    rhs = mhd_transport_rhs(state, eos)
    g = state.grid
    dH = rhs.dH_advective.spec - g.kd2 * state.H.spec
    return rhs.dp.phys, rhs.du.phys, rhs.dS.phys, g.ifft(g.project_hat(dH))


def magnetic_diffusion_exact(H: TorusField, dt: float) -> TorusField:
    """Exact solution of ``H_t = Laplace H`` over ``dt``: multiplier ``exp(-|k|^2 dt)``."""
    g = H.grid
    return TorusField(g, spec=H.spec * np.exp(-g.k2 * dt))


def mhd_wave_speed(state: MhdState, eos: EosClosure) -> float:
    """Max of ``|u|`` plus the fast magnetosonic speed ``sqrt(c_s^2 + |H|^2/rho)``."""
    p, u, S, H = state.arrays()
    rho = eos.density(S, p)
    cs2 = eos.gamma * p / rho
    cf = np.sqrt(cs2 + K.vdot(H, H) / rho)
    return float(np.max(np.sqrt(K.vdot(u, u)) + cf))


def _imex_advance(grid, eos, Y, X, t, h, forcing):
    def explicit(tt, Yc, Xc):
        p, u, S = Yc
        (H,) = Xc
        J = grid.curl(H)
        out = K.fluid_rhs(grid, eos, p, u, S, J, H)
        if forcing is not None:
            f = forcing(tt)
            out = tuple(o + f[k] if k in f else o for o, k in zip(out, ("p", "u", "S")))
        return out

    def implicit(tt, R, Yc, c):
        (R_H,) = R
        if forcing is not None:
            f = forcing(tt)
            if "H" in f:
                R_H = R_H + c * f["H"]
        _, H = K.implicit_em_solve(grid, None, R_H, Yc[1], c, 0.0)
        return (H,)

    return K.ars232_step(Y, X, t, h, explicit, implicit)


def mhd_step(state: MhdState, cfg: MhdRunConfig, forcing=None) -> MhdState:
    """Advance by ``cfg.dt``; substeps on CFL violation or solver failure."""
    g, eos = state.grid, cfg.eos
    check_positivity(state.p.phys, state.S.phys, state.t, eos, "mhd_step input")
    allowed = cfg.cfl * g.dx / mhd_wave_speed(state, eos)
    m = 1
    while cfg.dt / m > allowed:
        m *= 2
    if m > 1:
        warnings.warn(
            f"dt={cfg.dt:.3g} violates the CFL bound at t={state.t:.4g}; using {m} substeps",
            RuntimeWarning,
            stacklevel=2,
        )
    while True:
        try:
            return _mhd_substeps(state, cfg, forcing, m)
        except K.StepFailure as exc:
            if m >= 1024:
                raise
            m *= 2
            log.warning("%s; retrying with %d substeps", exc, m)


def _mhd_substeps(state, cfg, forcing, m):
    g, eos = state.grid, cfg.eos
    p, u, S, H = state.arrays()
    Y, X = (p, u, S), (H,)
    h = cfg.dt / m
    t = state.t
    for j in range(m):
        try:
            Y, X = _imex_advance(g, eos, Y, X, t, h, forcing)
        except EosDomainError as exc:
            raise PositivityError(t, exc.value, float(np.min(Y[2])), "mhd_step stage") from exc
        t = state.t + (j + 1) * h
    p, u, S = Y
    H = g.project(X[0])
    check_positivity(p, S, t, eos, "mhd_step")
    return MhdState.from_arrays(g, p, u, S, H, state.t + cfg.dt)


def mhd_step_split(state: MhdState, cfg: MhdRunConfig) -> MhdState:
    """Half exact diffusion, SSP-RK3 on the transport part, half exact diffusion."""
    g, eos = state.grid, cfg.eos
    H = magnetic_diffusion_exact(state.H, 0.5 * cfg.dt).phys

    def rhs(tt, W):
        p, u, S, Hc = W
        J = g.curl(Hc)
        dp, du, dS = K.fluid_rhs(g, eos, p, u, S, J, Hc)
        return dp, du, dS, g.curl(K.advective_emf(g, u, Hc))

    p, u, S, H = K.ssprk3_step((state.p.phys, state.u.phys, state.S.phys, H), state.t, cfg.dt, rhs)
    H = magnetic_diffusion_exact(TorusField(g, g.project(H)), 0.5 * cfg.dt).phys
    check_positivity(p, S, state.t + cfg.dt, eos, "mhd_step_split")
    return MhdState.from_arrays(g, p, u, S, H, state.t + cfg.dt)


def mhd_run(
    state: MhdState,
    cfg: MhdRunConfig,
    sink: MetricsSink | None = None,
    forcing=None,
) -> MhdState:
    sink = sink or NullSink()
    n_steps = int(round((cfg.t_final - state.t) / cfg.dt))
    for _ in range(n_steps):
        state = mhd_step(state, cfg, forcing)
        sink.record(
            state.t,
            min_p=state.p.minimum(),
            min_S=state.S.minimum(),
            div_H=state.div_H(),
            wave_speed=mhd_wave_speed(state, cfg.eos),
        )
    return state
