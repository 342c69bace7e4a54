"""Array-level kernels shared by the Euler-Maxwell and MHD solvers.

Both solvers advance the fluid unknowns ``(p, u, S)`` explicitly and the
electromagnetic unknowns implicitly with the same IMEX Runge-Kutta scheme
(ARS(2,3,2): L-stable, stiffly accurate implicit part, explicit part with the
linear stability region of SSP-RK3).  The implicit stage problem for the
Euler-Maxwell system,

    E = R_E + (c/eps) (curl H - E - u x H),     H = R_H - c curl E,

reduces at ``eps = 0`` to the implicit stage problem of the MHD induction
equation, so the discrete Euler-Maxwell solution tends to the discrete MHD
solution as ``eps -> 0`` with no splitting error in between.
"""

from __future__ import annotations

import numpy as np

from .eos import EosClosure
from .spectral import TorusGrid

# ARS(2,3,2) coefficients
ARS_GAMMA = 1.0 - 1.0 / np.sqrt(2.0)
ARS_DELTA = -2.0 * np.sqrt(2.0) / 3.0


class StepFailure(RuntimeError):
    """An implicit stage solve did not converge (time step too large)."""


def vdot(a, b):
    return np.einsum("i...,i...->...", a, b)


def vcross(a, b):
    return np.cross(a, b, axis=0)


def fluid_rhs(grid: TorusGrid, eos: EosClosure, p, u, S, Z, H):
    """Explicit fluid tendencies for a given current density ``Z``.

    ``Z`` is ``E + u x H`` for the Euler-Maxwell system and ``curl H`` for
    MHD.  Returns dealiased ``(dp, du, dS)``.
    """
    uh = grid.fft(u)
    gp = grid.ifft(grid.grad_hat(grid.fft(p)))
    gS = grid.ifft(grid.grad_hat(grid.fft(S)))
    divu = grid.ifft(grid.div_hat(uh))
    gu = grid.ifft(np.stack([1j * k * uh for k in grid.k]))

    rho = eos.density(S, p)
    a = eos.coeff_a(S, p)
    b = eos.coeff_b(S, p)

    dp = -vdot(u, gp) - divu / a
    du = -np.einsum("i...,ij...->j...", u, gu) + (vcross(Z, H) - gp) / rho
    dS = -vdot(u, gS) + vdot(Z, Z) / b
    return grid.dealias(dp), grid.dealias(du), grid.dealias(dS)


def advective_emf(grid: TorusGrid, u, H):
    """Dealiased ``u x H``."""
    return grid.dealias(vcross(u, H))


def implicit_em_solve(grid: TorusGrid, R_E, R_H, u, c, eps, *, tol=1e-14, maxiter=80):
    """Solve one implicit stage of the electromagnetic block.

    Finds ``(E, H)`` with ``E = R_E + (c/eps)(curl H - E - u x H)`` and
    ``H = R_H - c curl E`` for frozen ``u``.  ``eps = 0`` gives the MHD stage
    ``H = R_H + c (curl(u x H) - curl curl H)`` with ``E = curl H - u x H``
    and ``R_E`` ignored.

    The ``u x H`` coupling is resolved by fixed-point iteration around the
    exact Fourier inverse of ``1 + c beta |k|^2``; the contraction factor is
    roughly ``|u| sqrt(c) / 2``.
    """
    alpha = eps / (eps + c)
    beta = c / (eps + c)
    rhs0 = grid.fft(R_H)
    if alpha > 0.0 and R_E is not None:
        rhs0 = rhs0 - c * alpha * grid.curl_hat(grid.fft(R_E))
    rhs0 = grid.project_hat(rhs0)
    denom = 1.0 + c * beta * grid.kd2
    Hh = rhs0 / denom
    scale = max(np.max(np.abs(rhs0)), 1e-300)
    for _ in range(maxiter):
        wh = grid.filter_hat(grid.fft(vcross(u, grid.ifft(Hh))))
        new = grid.project_hat(rhs0 + c * beta * grid.curl_hat(wh)) / denom
        change = np.max(np.abs(new - Hh))
        Hh = new
        if change <= tol * scale:
            break
    else:
        raise StepFailure(
            f"implicit stage did not converge (last change {change / scale:.3e}); reduce dt"
        )
    H = grid.ifft(Hh)
    w = advective_emf(grid, u, H)
    curlH = grid.ifft(grid.curl_hat(Hh))
    if alpha > 0.0 and R_E is not None:
        E = alpha * R_E + beta * (curlH - w)
    else:
        E = beta * (curlH - w)
    return E, H


def _axpy(base, *terms):
    """``base + sum(coef * vec)`` over tuples of arrays."""
    out = [b.copy() for b in base]
    for coef, vec in terms:
        if coef == 0.0:
            continue
        for o, v in zip(out, vec):
            o += coef * v
    return tuple(out)


def ars232_step(Y, X, t, h, explicit, implicit):
    """One ARS(2,3,2) step.

    Parameters
    ----------
    Y, X : tuple of ndarray
        Explicitly and implicitly treated unknowns.
    explicit : callable ``(t, Y, X) -> dY``
    implicit : callable ``(t, R, Y, c) -> X``
        Returns the solution of ``X = R + c * S(t, X; Y)``.
    """
    g, d = ARS_GAMMA, ARS_DELTA
    N1 = explicit(t, Y, X)
    Y2 = _axpy(Y, (h * g, N1))
    X2 = implicit(t + g * h, X, Y2, h * g)
    S2 = tuple((x2 - x) / (h * g) for x2, x in zip(X2, X))
    N2 = explicit(t + g * h, Y2, X2)
    Y3 = _axpy(Y, (h * d, N1), (h * (1.0 - d), N2))
    R3 = _axpy(X, (h * (1.0 - g), S2))
    X3 = implicit(t + h, R3, Y3, h * g)
    N3 = explicit(t + h, Y3, X3)
    Ynew = _axpy(Y, (h * (1.0 - g), N2), (h * g, N3))
    return Ynew, X3


def ssprk3_step(W, t, h, rhs):
    """Shu-Osher SSP-RK3 on a tuple of arrays."""
    k1 = rhs(t, W)
    W1 = _axpy(W, (h, k1))
    k2 = rhs(t + h, W1)
    W2 = tuple(0.75 * w + 0.25 * (w1 + h * q) for w, w1, q in zip(W, W1, k2))
    k3 = rhs(t + 0.5 * h, W2)
    return tuple(w / 3.0 + 2.0 / 3.0 * (w2 + h * q) for w, w2, q in zip(W, W2, k3))
