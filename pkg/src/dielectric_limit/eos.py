"""Ideal-gas closure in (entropy, pressure) variables.

Density and temperature are written as functions of ``S`` and ``p``::

    rho   = r(S, p)     = p**(1/gamma) * exp(-S/gamma)
    theta = Theta(S, p) = p / ((gamma - 1) * rho)

with unit specific heat, so the internal energy is ``e = theta``.  The
two coefficients entering the pressure and entropy equations are

    a = (1/r) dr/dp = 1 / (gamma p)
    b = r Theta     = p / (gamma - 1)

All functions accept scalars or numpy arrays and are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EosClosure", "EosDomainError"]


class EosDomainError(ValueError):
    """Raised when the closure is evaluated outside ``p > p_floor``."""

    def __init__(self, value: float, index=None, floor: float = 0.0):
        self.value = float(value)
        self.index = index
        self.floor = floor
        where = "" if index is None else f" at index {index}"
        super().__init__(
            f"pressure {self.value:.6g}{where} is not above the floor {floor:.3g}"
        )


@dataclass(frozen=True)
class EosClosure:
    """Ideal-gas equation of state with positivity floors.

    Parameters
    ----------
    gamma : float
        Adiabatic exponent, must exceed one.
    p_floor, S_floor : float
        Smallest admissible pressure and entropy.  The closure itself is only
        singular at ``p <= 0``; the floors are used by the runtime monitors.
    """

    gamma: float = 5.0 / 3.0
    p_floor: float = 1e-8
    S_floor: float = 1e-8

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")
        if self.p_floor < 0.0:
            raise ValueError("p_floor must be non-negative")

    def _check(self, p):
        p = np.asarray(p, dtype=float)
        if p.ndim == 0:
            if not p > self.p_floor:
                raise EosDomainError(p, floor=self.p_floor)
            return p
        imin = int(np.argmin(p))
        if not p.flat[imin] > self.p_floor:
            raise EosDomainError(p.flat[imin], np.unravel_index(imin, p.shape), self.p_floor)
        return p

    def density(self, S, p):
        p = self._check(p)
        g = self.gamma
        return p ** (1.0 / g) * np.exp(-np.asarray(S, dtype=float) / g)

    def temperature(self, S, p):
        p = self._check(p)
        return p / ((self.gamma - 1.0) * self.density(S, p))

    def internal_energy(self, S, p):
        # c_v = 1
        return self.temperature(S, p)

    def coeff_a(self, S, p):
        """``(1/r) dr/dp``, which is ``1/(gamma p)`` for this closure."""
        p = self._check(p)
        return 1.0 / (self.gamma * p) + 0.0 * np.asarray(S, dtype=float)

    def coeff_b(self, S, p):
        """``r * Theta``, i.e. ``p/(gamma - 1)``."""
        p = self._check(p)
        return p / (self.gamma - 1.0) + 0.0 * np.asarray(S, dtype=float)

    def sound_speed(self, S, p):
        """Acoustic speed ``1/sqrt(a r) = sqrt(gamma p / rho)``."""
        return 1.0 / np.sqrt(self.coeff_a(S, p) * self.density(S, p))

    def gibbs_defect(self, S, p, dS, dp):
        """Undivided defect ``|theta dS - de - p d(1/rho)|`` for a central step.

        The differences are taken between ``(S +- dS, p +- dp)``; ``theta``
        and ``p`` are evaluated at the centre.  A zero displacement gives
        exactly zero.
        """
        S = np.asarray(S, dtype=float)
        p = self._check(p)
        Sp, Sm = S + dS, S - dS
        pp, pm = p + dp, p - dp
        de = self.internal_energy(Sp, pp) - self.internal_energy(Sm, pm)
        dv = 1.0 / self.density(Sp, pp) - 1.0 / self.density(Sm, pm)
        theta = self.temperature(S, p)
        return np.abs(theta * (2.0 * np.asarray(dS)) - de - p * dv)

    def gibbs_residual(self, S, p, h, h_p=None):
        """Central-difference residual of the Gibbs relation.

        Sums the difference-quotient defects along the entropy direction
        (step ``h``) and the pressure direction (step ``h_p``, default
        ``h``).  For a closure satisfying the Gibbs relation the result is
        ``O(h**2)``.
        """
        if h_p is None:
            h_p = h
        if not (np.all(np.asarray(h) > 0) and np.all(np.asarray(h_p) > 0)):
            raise ValueError("difference steps must be positive")
        along_S = self.gibbs_defect(S, p, h, 0.0) / (2.0 * np.asarray(h))
        along_p = self.gibbs_defect(S, p, 0.0, h_p) / (2.0 * np.asarray(h_p))
        return along_S + along_p
