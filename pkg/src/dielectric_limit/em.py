"""Non-isentropic compressible Euler-Maxwell system on the torus.

Unknowns ``(p, u, S, E, H)`` obey (with unit conductivity and permeability)

    a (p_t + u.grad p) + div u           = 0
    r (u_t + u.grad u) + grad p          = (E + u x H) x H
    b (S_t + u.grad S)                   = |E + u x H|^2
    eps E_t - curl H + E + u x H         = 0
    H_t + curl E                         = 0,    div H = 0

with ``r = rho(S, p)``, ``a = 1/(gamma p)``, ``b = p/(gamma - 1)``.

The default integrator (:func:`em_step`) is the IMEX scheme of
:mod:`dielectric_limit.kernels`: fluid explicit, electromagnetic block
implicit.  Its cost and stability do not depend on ``eps`` and it reduces to
the MHD integrator at ``eps = 0``.  Two reference integrators are provided
for cross-checks: a split scheme built on :func:`stiff_E_update`
(:func:`em_step_split`) and a fully explicit SSP-RK3 (:func:`em_step_explicit`)
that needs ``dt`` well below ``eps``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import kernels as K
from .eos import EosClosure, EosDomainError
from .monitors import MetricsSink, NullSink, PositivityError, check_positivity
from .spectral import TorusField, TorusGrid

log = logging.getLogger(__name__)

__all__ = [
    "EmRhs",
    "EmRunConfig",
    "EmState",
    "WaveSpeeds",
    "em_run",
    "em_step",
    "em_step_explicit",
    "em_step_split",
    "em_transport_rhs",
    "em_wave_speed",
    "stiff_E_update",
]

# forcing(t) -> {"p"|"u"|"S"|"E"|"H": ndarray}; used for manufactured solutions
Forcing = Callable[[float], dict]


@dataclass(frozen=True)
class EmState:
    p: TorusField
    u: TorusField
    S: TorusField
    E: TorusField
    H: TorusField
    t: float = 0.0

    @property
    def grid(self) -> TorusGrid:
        return self.p.grid

    def arrays(self):
        return self.p.phys, self.u.phys, self.S.phys, self.E.phys, self.H.phys

    @classmethod
    def from_arrays(cls, grid, p, u, S, E, H, t=0.0):
        return cls(
            TorusField(grid, p),
            TorusField(grid, u),
            TorusField(grid, S),
            TorusField(grid, E),
            TorusField(grid, H),
            float(t),
        )

    def div_H(self) -> float:
        g = self.grid
        return float(np.max(np.abs(g.ifft(g.div_hat(self.H.spec)))))


@dataclass(frozen=True)
class EmRunConfig:
    """Parameters of one Euler-Maxwell run."""

    epsilon: float
    dt: float
    t_final: float
    grid: TorusGrid
    eos: EosClosure = field(default_factory=EosClosure)
    cfl: float = 0.4

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.t_final < 0.0:
            raise ValueError("t_final must be non-negative")


@dataclass(frozen=True)
class EmRhs:
    dp: TorusField
    du: TorusField
    dS: TorusField
    dH: TorusField


@dataclass(frozen=True)
class WaveSpeeds:
    acoustic: float
    """max over the grid of ``|u| + c_s``"""
    maxwell: float
    """light speed ``1/sqrt(eps)``, diagnostic only"""


def em_transport_rhs(state: EmState, eos: EosClosure) -> EmRhs:
    """Tendencies of ``(p, u, S, H)`` for the current ``E``.

    Products are formed in physical space and dealiased.  ``dH = -curl E``
    is divergence-free by construction.
    """
    g = state.grid
    p, u, S, E, H = state.arrays()
    check_positivity(p, S, state.t, eos, "em_transport_rhs")
    Z = E + K.advective_emf(g, u, H)
    dp, du, dS = K.fluid_rhs(g, eos, p, u, S, Z, H)
    dH = TorusField(g, spec=-g.curl_hat(state.E.spec))
    return EmRhs(TorusField(g, dp), TorusField(g, du), TorusField(g, dS), dH)


def stiff_E_update(state: EmState, dt: float, epsilon: float) -> EmState:
    """Exact relaxation of ``eps E_t = curl H - u x H - E`` with ``u, H`` frozen.

    ``E <- E* + exp(-dt/eps) (E - E*)`` with ``E* = curl H - u x H``.
    """
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    g = state.grid
    E_star = g.ifft(g.curl_hat(state.H.spec)) - K.advective_emf(g, state.u.phys, state.H.phys)
    decay = math.exp(-dt / epsilon)
    E = E_star + decay * (state.E.phys - E_star)
    return replace(state, E=TorusField(g, E))


def em_wave_speed(state: EmState, epsilon: float, eos: EosClosure) -> WaveSpeeds:
    p, u, S = state.p.phys, state.u.phys, state.S.phys
    speed = np.sqrt(K.vdot(u, u)) + eos.sound_speed(S, p)
    return WaveSpeeds(float(np.max(speed)), 1.0 / math.sqrt(epsilon))


def _imex_advance(grid, eos, eps, Y, X, t, h, forcing: Optional[Forcing]):
    """One IMEX step of ``Y = (p, u, S)``, ``X = (E, H)``."""

    def explicit(tt, Yc, Xc):
        p, u, S = Yc
        E, H = Xc
        Z = E + K.advective_emf(grid, u, H)
        out = K.fluid_rhs(grid, eos, p, u, S, Z, H)
        if forcing is not None:
            f = forcing(tt)
            out = tuple(o + f[k] if k in f else o for o, k in zip(out, ("p", "u", "S")))
        return out

    def implicit(tt, R, Yc, c):
        R_E, R_H = R
        if forcing is not None:
            f = forcing(tt)
            if "E" in f:
                # eps E_t = ... + g_E, so E gains (c/eps) g_E
                R_E = R_E + (c / eps) * f["E"]
            if "H" in f:
                R_H = R_H + c * f["H"]
        return K.implicit_em_solve(grid, R_E, R_H, Yc[1], c, eps)

    return K.ars232_step(Y, X, t, h, explicit, implicit)


def _substep_count(dt: float, dt_allowed: float) -> int:
    if dt <= dt_allowed:
        return 1
    m = 1
    while dt / m > dt_allowed:
        m *= 2
    return m


def em_step(state: EmState, cfg: EmRunConfig, forcing: Optional[Forcing] = None) -> EmState:
    """Advance by ``cfg.dt`` with the IMEX scheme.

    If ``cfg.dt`` violates the acoustic CFL bound, or an implicit stage
    fails to converge, the step is split into ``2**m`` equal substeps so the
    caller's step boundaries are preserved.
    """
    g, eos = state.grid, cfg.eos
    check_positivity(state.p.phys, state.S.phys, state.t, eos, "em_step input")
    speeds = em_wave_speed(state, cfg.epsilon, eos)
    m = _substep_count(cfg.dt, cfg.cfl * g.dx / speeds.acoustic)
    if m > 1:
        warnings.warn(
            f"dt={cfg.dt:.3g} violates the CFL bound at t={state.t:.4g}; using {m} substeps",
            RuntimeWarning,
            stacklevel=2,
        )
    while True:
        try:
            return _em_substeps(state, cfg, forcing, m)
        except K.StepFailure as exc:
            if m >= 1024:
                raise
            m *= 2
            log.warning("%s; retrying with %d substeps", exc, m)


def _em_substeps(state, cfg, forcing, m):
    g, eos = state.grid, cfg.eos
    p, u, S, E, H = state.arrays()
    Y, X = (p, u, S), (E, H)
    h = cfg.dt / m
    t = state.t
    for j in range(m):
        try:
            Y, X = _imex_advance(g, eos, cfg.epsilon, Y, X, t, h, forcing)
        except EosDomainError as exc:
            raise PositivityError(t, exc.value, float(np.min(Y[2])), "em_step stage") from exc
        t = state.t + (j + 1) * h
    p, u, S = Y
    E, H = X
    H = g.project(H)
    check_positivity(p, S, t, eos, "em_step")
    return EmState.from_arrays(g, p, u, S, E, H, state.t + cfg.dt)


def em_step_split(state: EmState, cfg: EmRunConfig) -> EmState:
    """Reference splitting: half exact E relaxation, SSP-RK3 transport, half relaxation.

    Second order while ``dt`` resolves ``eps``; it loses accuracy and
    stability once ``dt/eps`` is large because the curl coupling between
    the substeps is explicit.
    """
    g, eos = state.grid, cfg.eos
    half = stiff_E_update(state, 0.5 * cfg.dt, cfg.epsilon)
    E_frozen = half.E.phys
    curlE = g.curl(E_frozen)

    def rhs(tt, W):
        p, u, S, H = W
        Z = E_frozen + K.advective_emf(g, u, H)
        dp, du, dS = K.fluid_rhs(g, eos, p, u, S, Z, H)
        return dp, du, dS, -curlE

    p, u, S, _, H = half.arrays()
    p, u, S, H = K.ssprk3_step((p, u, S, H), state.t, cfg.dt, rhs)
    mid = EmState.from_arrays(g, p, u, S, E_frozen, g.project(H), state.t + cfg.dt)
    out = stiff_E_update(mid, 0.5 * cfg.dt, cfg.epsilon)
    check_positivity(out.p.phys, out.S.phys, out.t, eos, "em_step_split")
    return out


def em_step_explicit(state: EmState, dt: float, epsilon: float, eos: EosClosure) -> EmState:
    """Fully explicit SSP-RK3 step of the whole system (reference only)."""
    g = state.grid

    def rhs(tt, W):
        p, u, S, E, H = W
        w = K.advective_emf(g, u, H)
        dp, du, dS = K.fluid_rhs(g, eos, p, u, S, E + w, H)
        dE = (g.curl(H) - E - w) / epsilon
        dH = -g.curl(E)
        return dp, du, dS, dE, dH

    W = K.ssprk3_step(state.arrays(), state.t, dt, rhs)
    p, u, S, E, H = W
    return EmState.from_arrays(g, p, u, S, E, g.project(H), state.t + dt)


def em_run(
    state: EmState,
    cfg: EmRunConfig,
    sink: MetricsSink | None = None,
    forcing: Optional[Forcing] = None,
) -> EmState:
    """Step from ``state.t`` to ``cfg.t_final`` with steps of ``cfg.dt``."""
    sink = sink or NullSink()
    n_steps = int(round((cfg.t_final - state.t) / cfg.dt))
    for _ in range(n_steps):
        state = em_step(state, cfg, forcing)
        sink.record(
            state.t,
            min_p=state.p.minimum(),
            min_S=state.S.minimum(),
            div_H=state.div_H(),
            wave_speed=em_wave_speed(state, cfg.epsilon, cfg.eos).acoustic,
        )
    return state
