"""Error fields between an Euler-Maxwell solution and its MHD limit.

With ``P = p^eps - p^0``, ``U = u^eps - u^0``, ``Phi = S^eps - S^0``,
``F = E^eps - E^0`` (``E^0 = curl H^0 - u^0 x H^0``) and ``G = H^eps - H^0``,
the two systems combine into

    a^eps (P_t + u^eps.grad P) + div U      = f1
    r^eps (U_t + u^eps.grad U) + grad P     = f2
    b^eps (Phi_t + u^eps.grad Phi)          = f3
    eps F_t - curl G                         = f4
    G_t + curl F                             = 0,    div G = 0

where ``a^eps = a(Phi + S^0, P + p^0)`` and so on.  This module evaluates
the sources, the residual of the system on computed trajectories, the
symmetric-hyperbolic matrix form, the error energies, and two structural
diagnostics (the curl cancellation and a div-curl estimate).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels as K
from .em import EmState
from .eos import EosClosure
from .mhd import MhdState, induced_E, mhd_time_derivative
from .spectral import B_MATRICES, FieldRankError, TorusField, TorusGrid, sobolev_norm

log = logging.getLogger(__name__)

__all__ = [
    "BackgroundDerivatives",
    "EnergyReport",
    "ErrorState",
    "ResidualReport",
    "SourceTerms",
    "background_derivatives",
    "cancellation_check",
    "div_curl_bound_check",
    "energy_report",
    "error_residual",
    "error_state",
    "source_terms",
    "symmetric_form",
]

TIME_TOL = 1e-9


@dataclass(frozen=True)
class ErrorState:
    P: TorusField
    U: TorusField
    Phi: TorusField
    F: TorusField
    G: TorusField
    t: float = 0.0

    @property
    def grid(self) -> TorusGrid:
        return self.P.grid

    def div_G(self) -> float:
        g = self.grid
        return float(np.max(np.abs(g.ifft(g.div_hat(self.G.spec)))))


def error_state(em: EmState, mhd: MhdState) -> ErrorState:
    """Differences ``W = (P, U, Phi, F, G)`` of two states at the same time."""
    if em.grid != mhd.grid:
        raise ValueError(f"grid mismatch: {em.grid} vs {mhd.grid}")
    if abs(em.t - mhd.t) > TIME_TOL * max(1.0, abs(em.t)):
        raise ValueError(f"time mismatch: em.t={em.t} vs mhd.t={mhd.t}")
    E0 = induced_E(mhd.u, mhd.H)
    return ErrorState(
        em.p - mhd.p,
        em.u - mhd.u,
        em.S - mhd.S,
        em.E - E0,
        em.H - mhd.H,
        em.t,
    )


@dataclass(frozen=True)
class BackgroundDerivatives:
    """Time derivatives of the MHD background, as arrays."""

    p_t: np.ndarray
    u_t: np.ndarray
    S_t: np.ndarray
    H_t: np.ndarray


def background_derivatives(bg: MhdState, eos: EosClosure) -> BackgroundDerivatives:
    """Evaluate ``(p_t, u_t, S_t, H_t)`` from the MHD right-hand side."""
    return BackgroundDerivatives(*mhd_time_derivative(bg, eos))


@dataclass(frozen=True)
class SourceTerms:
    f1: TorusField
    f2: TorusField
    f3: TorusField
    f4: TorusField


def _coefficients(eos, W_arrays, bg_arrays):
    P, U, Phi = W_arrays
    p0, u0, S0 = bg_arrays
    pe, Se = P + p0, Phi + S0
    return (
        (eos.coeff_a(Se, pe), eos.coeff_a(S0, p0)),
        (eos.density(Se, pe), eos.density(S0, p0)),
        (eos.coeff_b(Se, pe), eos.coeff_b(S0, p0)),
    )


def source_terms(
    W: ErrorState,
    bg: MhdState,
    derivs: BackgroundDerivatives,
    epsilon: float,
    eos: EosClosure,
) -> SourceTerms:
    """Right-hand sides ``f1 ... f4`` of the error system (dealiased)."""
    g = W.grid
    if bg.grid != g:
        raise ValueError("background lives on a different grid")
    P, U, Phi, F, G = (W.P.phys, W.U.phys, W.Phi.phys, W.F.phys, W.G.phys)
    p0, u0, S0, H0 = bg.arrays()
    cross, dot = K.vcross, K.vdot

    (a_e, a_0), (r_e, r_0), (b_e, b_0) = _coefficients(eos, (P, U, Phi), (p0, u0, S0))
    grad_p0 = g.grad(p0)
    grad_S0 = g.grad(S0)
    grad_u0 = g.gradient_tensor(u0)
    curl_H0 = g.curl(H0)

    Dp0 = derivs.p_t + dot(u0, grad_p0)
    Du0 = derivs.u_t + np.einsum("i...,ij...->j...", u0, grad_u0)
    DS0 = derivs.S_t + dot(u0, grad_S0)

    UxG = cross(U, G)
    lin = cross(u0, G) + cross(U, H0)  # u0 x G + U x H0
    Q = F + lin

    f1 = -(a_e - a_0) * Dp0 - a_e * dot(U, grad_p0)

    f2 = (
        -(r_e - r_0) * Du0
        - r_e * np.einsum("i...,ij...->j...", U, grad_u0)
        + cross(curl_H0, G)
        + cross(Q, H0)
        + cross(Q, G)
        + cross(UxG, G + H0)
    )

    FUG = F + UxG
    f3 = (
        -(b_e - b_0) * DS0
        - b_e * dot(U, grad_S0)
        + dot(FUG, FUG)
        + dot(lin, lin)
        + 2.0 * dot(FUG, curl_H0 + lin)
        + 2.0 * dot(curl_H0, lin)
    )

    dt_curl_H0 = g.curl(derivs.H_t)
    dt_uxH0 = cross(derivs.u_t, H0) + cross(u0, derivs.H_t)
    f4 = -Q - UxG - epsilon * dt_curl_H0 + epsilon * g.dealias(dt_uxH0)

    return SourceTerms(*(TorusField(g, g.dealias(f)) for f in (f1, f2, f3, f4)))


@dataclass(frozen=True)
class ResidualReport:
    """L2 norms of the error-system defects at interior snapshot times."""

    times: np.ndarray
    residuals: dict = field(default_factory=dict)

    def max(self) -> dict:
        return {k: float(np.max(v)) for k, v in self.residuals.items()}


RESIDUAL_KEYS = ("P", "U", "Phi", "F", "G")


def _fd4(seq, k, h):
    return (-seq[k + 2] + 8.0 * seq[k + 1] - 8.0 * seq[k - 1] + seq[k - 2]) / (12.0 * h)


def error_residual(
    em_traj: Sequence[EmState],
    mhd_traj: Sequence[MhdState],
    epsilon: float,
    eos: EosClosure,
    t_min: float = 0.0,
) -> ResidualReport:
    """Substitute computed error fields into the error system.

    Time derivatives of ``W`` use fourth-order central differences over the
    snapshots, which must be uniformly spaced; the two end snapshots on
    each side are skipped, as is any time before ``t_min``.
    """
    if len(em_traj) != len(mhd_traj):
        raise ValueError("trajectories have different lengths")
    if len(em_traj) < 5:
        raise ValueError(f"need at least 5 snapshots, got {len(em_traj)}")
    times = np.array([s.t for s in em_traj])
    h = times[1] - times[0]
    if not h > 0 or np.max(np.abs(np.diff(times) - h)) > 1e-9 * max(1.0, times[-1]):
        raise ValueError("snapshots must be uniformly spaced in time")

    Ws = [error_state(e, m) for e, m in zip(em_traj, mhd_traj)]
    seqs = {
        "P": [w.P.phys for w in Ws],
        "U": [w.U.phys for w in Ws],
        "Phi": [w.Phi.phys for w in Ws],
        "F": [w.F.phys for w in Ws],
        "G": [w.G.phys for w in Ws],
    }
    g = Ws[0].grid
    out = {k: [] for k in RESIDUAL_KEYS}
    used = []
    for k in range(2, len(Ws) - 2):
        if times[k] < t_min:
            continue
        W, bg, em = Ws[k], mhd_traj[k], em_traj[k]
        d = {name: _fd4(seq, k, h) for name, seq in seqs.items()}
        f = source_terms(W, bg, background_derivatives(bg, eos), epsilon, eos)
        p_e, u_e, S_e = em.p.phys, em.u.phys, em.S.phys
        P, U, Phi, F, G = (W.P.phys, W.U.phys, W.Phi.phys, W.F.phys, W.G.phys)
        a_e, r_e, b_e = eos.coeff_a(S_e, p_e), eos.density(S_e, p_e), eos.coeff_b(S_e, p_e)
        adv_U = np.einsum("i...,ij...->j...", u_e, g.gradient_tensor(U))
        res = {
            "P": a_e * (d["P"] + K.vdot(u_e, g.grad(P))) + g.div(U) - f.f1.phys,
            "U": r_e * (d["U"] + adv_U) + g.grad(P) - f.f2.phys,
            "Phi": b_e * (d["Phi"] + K.vdot(u_e, g.grad(Phi))) - f.f3.phys,
            "F": epsilon * d["F"] - g.curl(G) - f.f4.phys,
            "G": d["G"] + g.curl(F),
        }
        for name, r in res.items():
            out[name].append(sobolev_norm(TorusField(g, g.dealias(r)), 0.0))
        used.append(times[k])
    if not used:
        raise ValueError("no interior snapshots after t_min")
    return ResidualReport(np.array(used), {k: np.array(v) for k, v in out.items()})


# ----------------------------------------------------------------------
# symmetric form


def symmetric_form(W: ErrorState, bg: MhdState, epsilon: float, eos: EosClosure):
    """Pointwise coefficient matrices of ``D W_t + sum_i A_i W_{x_i} = s``.

    The unknown is ordered ``(P, U1..3, Phi, F1..3, G1..3)``.  Returns
    ``D`` with shape ``(11, 11) + grid.shape`` and ``A`` with shape
    ``(3, 11, 11) + grid.shape``.  The transport blocks carry the same
    coefficients as ``D`` so that ``D^-1 A_i`` reproduces the equations.
    """
    g = W.grid
    p0, u0, S0, _ = bg.arrays()
    p_e, S_e = W.P.phys + p0, W.Phi.phys + S0
    v = W.U.phys + u0
    a = eos.coeff_a(S_e, p_e)
    r = eos.density(S_e, p_e)
    b = eos.coeff_b(S_e, p_e)

    shape = g.shape
    D = np.zeros((11, 11) + shape)
    D[0, 0] = a
    for j in range(1, 4):
        D[j, j] = r
    D[4, 4] = b
    for j in range(5, 8):
        D[j, j] = epsilon
    for j in range(8, 11):
        D[j, j] = 1.0

    A = np.zeros((3, 11, 11) + shape)
    for i in range(3):
        Ai = A[i]
        Ai[0, 0] = a * v[i]
        Ai[0, 1 + i] = 1.0
        Ai[1 + i, 0] = 1.0
        for j in range(1, 4):
            Ai[j, j] = r * v[i]
        Ai[4, 4] = b * v[i]
        Bi = B_MATRICES[i]
        Ai[5:8, 8:11] = Bi[:, :, None, None, None]
        Ai[8:11, 5:8] = Bi.T[:, :, None, None, None]
    return D, A


def stack_error(W: ErrorState) -> np.ndarray:
    """``W`` as an ``(11,) + grid.shape`` array in symmetric-form order."""
    return np.concatenate(
        [W.P.phys[None], W.U.phys, W.Phi.phys[None], W.F.phys, W.G.phys], axis=0
    )


# ----------------------------------------------------------------------
# energies


@dataclass(frozen=True)
class EnergyReport:
    """Error energies at one time, keyed by Sobolev index.

    ``norm[s]`` is ``||(P, U, Phi, G)||_s`` (sum of component norms),
    ``weighted[s]`` is ``sqrt(norm[s]**2 + eps ||F||_s**2)``, ``gamma[s]``
    its square and ``f_norm[s]`` is ``||F||_s``.
    """

    t: float
    epsilon: float
    norm: dict
    weighted: dict
    gamma: dict
    f_norm: dict
    damping_accum: float = 0.0


def _check_finite(W: ErrorState):
    for name in ("P", "U", "Phi", "F", "G"):
        arr = getattr(W, name).phys
        if not np.all(np.isfinite(arr)):
            bad = int(np.sum(~np.isfinite(arr)))
            raise FloatingPointError(f"error field {name} has {bad} non-finite values at t={W.t}")


def energy_report(
    W: ErrorState, epsilon: float, s_list=(0, 1, 2, 4), damping_accum: float = 0.0
) -> EnergyReport:
    s_list = list(s_list)
    if not s_list:
        raise ValueError("s_list must be nonempty")
    _check_finite(W)
    norm, weighted, gamma, f_norm = {}, {}, {}, {}
    for s in s_list:
        n = sum(sobolev_norm(f, s) for f in (W.P, W.U, W.Phi, W.G))
        fn = sobolev_norm(W.F, s)
        gam = n * n + epsilon * fn * fn
        norm[s], f_norm[s], gamma[s], weighted[s] = n, fn, gam, float(np.sqrt(gam))
    return EnergyReport(W.t, epsilon, norm, weighted, gamma, f_norm, damping_accum)


# ----------------------------------------------------------------------
# structural diagnostics


def cancellation_check(F: TorusField, G: TorusField) -> float:
    """``|int (curl F . G - curl G . F) dx|``, i.e. ``|int div(F x G) dx|``."""
    if not (F.is_vector and G.is_vector):
        raise FieldRankError("cancellation_check expects two vector fields")
    g = F.grid
    cF = g.ifft(g.curl_hat(F.spec))
    cG = g.ifft(g.curl_hat(G.spec))
    return abs(g.integrate(K.vdot(cF, G.phys) - K.vdot(cG, F.phys)))


def div_curl_bound_check(U: TorusField, sigma: int, P: TorusField | None = None) -> float:
    """Ratio of ``||(P, U)||_sigma`` to the div-curl bound at order ``sigma - 1``.

    The bound is ``||(div U, grad P)||_{sigma-1} + ||curl U||_{sigma-1} +
    ||(P, U)||_{sigma-1}``.  Returns 0 for the zero field.
    """
    if sigma not in (1, 2, 3, 4):
        raise ValueError(f"sigma must be one of 1..4, got {sigma}")
    if not U.is_vector:
        raise FieldRankError("U must be a vector field")
    g = U.grid
    if P is None:
        P = TorusField(g, g.zeros())
    s1 = sigma - 1
    lhs = sobolev_norm(P, sigma) + sobolev_norm(U, sigma)
    Lu = sobolev_norm(TorusField(g, spec=g.div_hat(U.spec)), s1) + sobolev_norm(
        TorusField(g, spec=g.grad_hat(P.spec)), s1
    )
    cu = sobolev_norm(TorusField(g, spec=g.curl_hat(U.spec)), s1)
    low = sobolev_norm(P, s1) + sobolev_norm(U, s1)
    rhs = Lu + cu + low
    if rhs == 0.0:
        return 0.0
    return lhs / rhs
