"""Initial data: the smooth MHD background and well-prepared Euler-Maxwell data."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..em import EmState
from ..mhd import MhdState, induced_E
from ..spectral import TorusField, TorusGrid, sobolev_norm

log = logging.getLogger(__name__)

__all__ = ["PreparationError", "Perturbation", "default_background_ic", "well_prepared_init"]

# perturbation shapes use modes with |k_i| <= PERTURB_KMAX
PERTURB_KMAX = 4


class PreparationError(RuntimeError):
    """Well-prepared data failed its size check."""


def default_background_ic(grid: TorusGrid, amp: float = 0.1) -> MhdState:
    """Smooth positive MHD data with a unit guide field along ``x3``."""
    if not 0.0 <= amp < 0.5:
        raise ValueError(f"amp must lie in [0, 0.5), got {amp}")
    x1, x2, _ = grid.coords()
    one = np.ones(grid.shape)
    p = one + amp * np.sin(x1) * np.cos(x2)
    S = one + amp * np.cos(x1) * one
    u = amp * np.stack([np.sin(x2) * one, np.sin(x1) * one, 0.0 * one])
    H = grid.project(amp * np.stack([np.cos(x2) * one, np.cos(x1) * one, np.sin(x1 + x2) * one]))
    H[2] += 1.0
    return MhdState.from_arrays(grid, p, u, S, H, 0.0)


def _band_limited(grid: TorusGrid, rng: np.random.Generator, rank: str) -> np.ndarray:
    """Random real field with modes ``0 < max|k_i| <= PERTURB_KMAX``."""
    mask = np.ones(grid.spec_shape, dtype=bool)
    for k in grid.kabs:
        mask &= k <= PERTURB_KMAX
    mask &= grid.k2 > 0
    ncomp = 3 if rank == "vector" else 1
    shape = (ncomp,) + grid.spec_shape
    spec = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mask
    out = grid.ifft(spec)
    return out if rank == "vector" else out[0]


@dataclass(frozen=True)
class Perturbation:
    """Unit-size (in ``H^s``) perturbation shapes, independent of ``eps``."""

    p: np.ndarray
    u: np.ndarray
    S: np.ndarray
    H: np.ndarray
    E: np.ndarray
    s: float

    @classmethod
    def draw(cls, grid: TorusGrid, seed: int, s: float) -> "Perturbation":
        rng = np.random.default_rng(seed)
        fields = {}
        for name, rank in (("p", "scalar"), ("u", "vector"), ("S", "scalar"), ("H", "vector"), ("E", "vector")):
            f = _band_limited(grid, rng, rank)
            if name == "H":
                f = grid.project(f)
            f = f / sobolev_norm(TorusField(grid, f), s)
            fields[name] = f
        return cls(s=s, **fields)


def well_prepared_init(
    mhd_ic: MhdState,
    epsilon: float,
    perturb_amp: float,
    seed: int,
    s: float = 4,
) -> EmState:
    """Euler-Maxwell data within ``O(eps)`` of the MHD data.

    Each of the perturbations of ``p, u, S, H`` and ``E`` has ``H^s`` norm
    ``perturb_amp * eps / 5``, so

        ||(P, U, Phi, G)(0)||_s + sqrt(eps) ||F(0)||_s <= perturb_amp * eps,

    which is checked on the constructed fields before returning.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if perturb_amp < 0:
        raise ValueError("perturb_amp must be non-negative")
    g = mhd_ic.grid
    E0 = induced_E(mhd_ic.u, mhd_ic.H).phys
    p, u, S, H = (a.copy() for a in mhd_ic.arrays())
    E = E0.copy()
    if perturb_amp > 0:
        d = Perturbation.draw(g, seed, s)
        size = perturb_amp * epsilon / 5.0
        p = p + size * d.p
        u = u + size * d.u
        S = S + size * d.S
        H = H + size * d.H
        E = E + size * d.E
    state = EmState.from_arrays(g, p, u, S, E, H, mhd_ic.t)

    measured = initial_error_size(state, mhd_ic, epsilon, s)
    bound = perturb_amp * epsilon
    if measured > bound * (1.0 + 1e-10) + 1e-300:
        raise PreparationError(
            f"initial data not well prepared: measured {measured:.6e} > bound {bound:.6e}"
        )
    log.debug("well-prepared data at eps=%g: size %.3e (bound %.3e)", epsilon, measured, bound)
    return state


def initial_error_size(em: EmState, mhd: MhdState, epsilon: float, s: float) -> float:
    """``||(P, U, Phi, G)||_s + sqrt(eps) ||F||_s`` for the pair."""
    E0 = induced_E(mhd.u, mhd.H)
    parts = (em.p - mhd.p, em.u - mhd.u, em.S - mhd.S, em.H - mhd.H)
    return sum(sobolev_norm(f, s) for f in parts) + math.sqrt(epsilon) * sobolev_norm(em.E - E0, s)
