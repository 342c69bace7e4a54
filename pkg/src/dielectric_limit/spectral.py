"""Fourier pseudospectral calculus on the periodic box (R / 2 pi Z)^3.

Fields live on a uniform ``n``-point grid along each *active* axis; inactive
axes carry a single point, so a two-dimensional run is a z-invariant
three-dimensional one.  Scalars have physical shape ``grid.shape`` and vector
fields ``(3,) + grid.shape``.  Vector fields always have three components.

Spectral coefficients are normalised so that the zero mode is the mean of
the field.  Only the non-negative half of the last active axis is stored
(real-to-complex transforms).

Integrals are taken over the full torus of volume ``(2 pi)**3`` without any
normalisation, so ``||1||_0 = (2 pi)**1.5``.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.fft as sfft

__all__ = [
    "B_MATRICES",
    "FieldRankError",
    "TorusField",
    "TorusGrid",
    "cross",
    "curl",
    "curl_via_B",
    "dealias",
    "div",
    "dot",
    "grad",
    "inner",
    "leray_project",
    "sobolev_norm",
]

TWO_PI = 2.0 * np.pi

# Maxwell coupling blocks of the symmetric error system; B_i^T d_i summed over
# i is the curl.
B_MATRICES = np.array(
    [
        [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]],
        [[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    ]
)


class FieldRankError(TypeError):
    """An operator received a scalar where a vector was expected or vice versa."""


def _fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("DLL_THREADS", "1")))
    except ValueError:
        return 1


class TorusGrid:
    """Uniform grid on the torus with ``active_dims`` non-constant axes.

    Parameters
    ----------
    n : int
        Points per active axis; an even number of at least 8.
    active_dims : int
        1, 2 or 3.  Axes beyond ``active_dims`` hold a single constant mode.
    """

    def __init__(self, n: int, active_dims: int = 3):
        n = int(n)
        if n < 8 or n % 2:
            raise ValueError(f"n must be even and >= 8, got {n}")
        if active_dims not in (1, 2, 3):
            raise ValueError(f"active_dims must be 1, 2 or 3, got {active_dims}")
        self.n = n
        self.active_dims = active_dims
        self.shape = (n,) * active_dims + (1,) * (3 - active_dims)
        self.npoints = n**active_dims
        self.volume = TWO_PI**3
        self.cell_volume = self.volume / self.npoints
        self.dx = TWO_PI / n
        # transform axes counted from the end so leading component axes pass through
        self._axes = tuple(range(-3, -3 + active_dims))
        self._sizes = (n,) * active_dims
        self._build_wavenumbers()

    def __repr__(self):
        return f"TorusGrid(n={self.n}, active_dims={self.active_dims})"

    def __eq__(self, other):
        return (
            isinstance(other, TorusGrid)
            and other.n == self.n
            and other.active_dims == self.active_dims
        )

    def __hash__(self):
        return hash((self.n, self.active_dims))

    def __reduce__(self):
        return (TorusGrid, (self.n, self.active_dims))

    def _build_wavenumbers(self):
        n, d = self.n, self.active_dims
        full, deriv = [], []
        for axis in range(3):
            shape = [1, 1, 1]
            if axis >= d:
                k = np.zeros(1)
            elif axis == d - 1:
                k = np.fft.rfftfreq(n, 1.0 / n)
            else:
                k = np.fft.fftfreq(n, 1.0 / n)
            shape[axis] = k.size
            kf = np.abs(k).reshape(shape)
            kd = k.copy()
            kd[np.abs(kd) == n // 2] = 0.0
            full.append(kf)
            deriv.append(kd.reshape(shape))
        self.spec_shape = tuple(max(a.shape[i] for a in full) for i in range(3))
        # |k_i| with the Nyquist mode at n/2: used by norms and the filter
        self.kabs = tuple(full)
        # derivative wavenumbers, Nyquist set to zero
        self.k = tuple(deriv)
        self.k2 = full[0] ** 2 + full[1] ** 2 + full[2] ** 2
        self.kd2 = deriv[0] ** 2 + deriv[1] ** 2 + deriv[2] ** 2
        cut = n / 3.0
        self.dealias_mask = (full[0] <= cut) & (full[1] <= cut) & (full[2] <= cut)
        last = d - 1
        w = np.full(self.spec_shape[last], 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        wshape = [1, 1, 1]
        wshape[last] = w.size
        # multiplicity of each stored mode in the full (two-sided) spectrum
        self.hermitian_weight = w.reshape(wshape)

    # ------------------------------------------------------------------
    # transforms
    def fft(self, a):
        """Forward transform over the active axes, normalised by ``1/N``."""
        a = np.asarray(a, dtype=float)
        return sfft.rfftn(a, axes=self._axes, norm="forward", workers=_fft_workers())

    def ifft(self, ah):
        ah = np.asarray(ah)
        return sfft.irfftn(
            ah, s=self._sizes, axes=self._axes, norm="forward", workers=_fft_workers()
        )

    def coords(self):
        """Physical coordinates ``(x1, x2, x3)``, broadcastable to ``shape``."""
        out = []
        for axis in range(3):
            shape = [1, 1, 1]
            if axis < self.active_dims:
                x = TWO_PI * np.arange(self.n) / self.n
            else:
                x = np.zeros(1)
            shape[axis] = x.size
            out.append(x.reshape(shape))
        return tuple(out)

    def zeros(self, rank: str = "scalar"):
        if rank == "scalar":
            return np.zeros(self.shape)
        return np.zeros((3,) + self.shape)

    # ------------------------------------------------------------------
    # spectral-space kernels (arrays in, arrays out)
    def grad_hat(self, fh):
        return np.stack([1j * k * fh for k in self.k])

    def div_hat(self, vh):
        k = self.k
        return 1j * (k[0] * vh[0] + k[1] * vh[1] + k[2] * vh[2])

    def curl_hat(self, vh):
        k = self.k
        return 1j * np.stack(
            [
                k[1] * vh[2] - k[2] * vh[1],
                k[2] * vh[0] - k[0] * vh[2],
                k[0] * vh[1] - k[1] * vh[0],
            ]
        )

    def project_hat(self, vh):
        """Remove the gradient part of a vector spectrum."""
        k = self.k
        kv = k[0] * vh[0] + k[1] * vh[1] + k[2] * vh[2]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(self.kd2 > 0.0, kv / np.where(self.kd2 > 0, self.kd2, 1.0), 0.0)
        return np.stack([vh[i] - k[i] * ratio for i in range(3)])

    def filter_hat(self, ah):
        return ah * self.dealias_mask

    # physical-space conveniences
    def grad(self, f):
        return self.ifft(self.grad_hat(self.fft(f)))

    def div(self, v):
        return self.ifft(self.div_hat(self.fft(v)))

    def curl(self, v):
        return self.ifft(self.curl_hat(self.fft(v)))

    def dealias(self, a):
        return self.ifft(self.filter_hat(self.fft(a)))

    def project(self, v):
        return self.ifft(self.project_hat(self.fft(v)))

    def gradient_tensor(self, v):
        """``out[i, j] = d_i v_j`` for a vector field ``v``."""
        vh = self.fft(v)
        return self.ifft(np.stack([1j * k * vh for k in self.k]))

    # ------------------------------------------------------------------
    # integrals
    def integrate(self, a):
        """Trapezoidal quadrature over the torus (spectrally exact)."""
        return float(np.sum(a) * self.cell_volume)

    def sobolev_sq_hat(self, ah, s: float = 0.0):
        """Squared H^s norm from a (scalar or vector) spectrum."""
        w = self.hermitian_weight
        if s:
            w = w * (1.0 + self.k2) ** s
        mag = np.abs(ah) ** 2
        if mag.ndim == 4:
            mag = mag.sum(axis=0)
        return float(self.volume * np.sum(w * mag))


def _rank_of(grid: TorusGrid, a) -> str:
    if a.shape == grid.shape:
        return "scalar"
    if a.shape == (3,) + grid.shape:
        return "vector"
    raise FieldRankError(f"array of shape {a.shape} does not live on {grid}")


class TorusField:
    """A scalar or three-vector field held in physical and/or spectral form.

    Either representation may be supplied; the other is computed on first
    access and cached.  Fields are treated as immutable: build a new field
    rather than editing ``phys`` or ``spec`` in place.
    """

    __slots__ = ("grid", "rank", "_phys", "_spec")

    def __init__(self, grid: TorusGrid, phys=None, spec=None):
        if phys is None and spec is None:
            raise ValueError("a TorusField needs phys or spec data")
        self.grid = grid
        self._phys = None if phys is None else np.asarray(phys, dtype=float)
        self._spec = None if spec is None else np.asarray(spec, dtype=complex)
        if self._phys is not None:
            self.rank = _rank_of(grid, self._phys)
        else:
            if self._spec.shape == grid.spec_shape:
                self.rank = "scalar"
            elif self._spec.shape == (3,) + grid.spec_shape:
                self.rank = "vector"
            else:
                raise FieldRankError(f"spectrum of shape {self._spec.shape} does not fit {grid}")

    @classmethod
    def from_function(cls, grid: TorusGrid, fn):
        """Sample ``fn(x1, x2, x3)``; the result must broadcast to a field."""
        x = grid.coords()
        val = np.asarray(fn(*x), dtype=float)
        if val.ndim == 4:
            return cls(grid, np.broadcast_to(val, (3,) + grid.shape).copy())
        return cls(grid, np.broadcast_to(val, grid.shape).copy())

    @classmethod
    def constant(cls, grid: TorusGrid, value):
        value = np.asarray(value, dtype=float)
        if value.shape == (3,):
            return cls(grid, np.broadcast_to(value[:, None, None, None], (3,) + grid.shape).copy())
        return cls(grid, np.full(grid.shape, float(value)))

    @property
    def phys(self):
        if self._phys is None:
            self._phys = self.grid.ifft(self._spec)
        return self._phys

    @property
    def spec(self):
        if self._spec is None:
            self._spec = self.grid.fft(self._phys)
        return self._spec

    @property
    def is_vector(self) -> bool:
        return self.rank == "vector"

    def __repr__(self):
        return f"TorusField({self.rank}, {self.grid!r})"

    def _coerce(self, other):
        if isinstance(other, TorusField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.phys
        return other

    def __add__(self, other):
        return TorusField(self.grid, self.phys + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return TorusField(self.grid, self.phys - self._coerce(other))

    def __rsub__(self, other):
        return TorusField(self.grid, self._coerce(other) - self.phys)

    def __mul__(self, other):
        other = self._coerce(other)
        if np.ndim(other) == 0:
            return TorusField(self.grid, self.phys * other, None if self._spec is None else self._spec * other)
        return TorusField(self.grid, self.phys * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def component(self, i: int) -> "TorusField":
        _require(self, "vector", "component")
        return TorusField(self.grid, self.phys[i])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.phys)))

    def minimum(self) -> float:
        return float(np.min(self.phys))


def _require(f: TorusField, rank: str, op: str):
    if not isinstance(f, TorusField):
        raise FieldRankError(f"{op} expects a TorusField, got {type(f).__name__}")
    if f.rank != rank:
        raise FieldRankError(f"{op} expects a {rank} field, got a {f.rank} field")


def grad(f: TorusField) -> TorusField:
    """Spectral gradient of a scalar field."""
    _require(f, "scalar", "grad")
    return TorusField(f.grid, spec=f.grid.grad_hat(f.spec))


def div(v: TorusField) -> TorusField:
    _require(v, "vector", "div")
    return TorusField(v.grid, spec=v.grid.div_hat(v.spec))


def curl(v: TorusField) -> TorusField:
    _require(v, "vector", "curl")
    return TorusField(v.grid, spec=v.grid.curl_hat(v.spec))


def curl_via_B(v: TorusField) -> TorusField:
    """Curl assembled as ``sum_i B_i^T d_i v`` from the symmetric-system blocks."""
    _require(v, "vector", "curl_via_B")
    g = v.grid
    vh = v.spec
    out = np.zeros_like(vh)
    for i in range(3):
        dvh = 1j * g.k[i] * vh
        out += np.einsum("mj,m...->j...", B_MATRICES[i], dvh)
    return TorusField(g, spec=out)


def dealias(f: TorusField) -> TorusField:
    """Zero every mode with some ``|k_i| > n/3`` (two-thirds rule)."""
    return TorusField(f.grid, spec=f.grid.filter_hat(f.spec))


def leray_project(v: TorusField) -> TorusField:
    """Orthogonal projection onto divergence-free fields."""
    _require(v, "vector", "leray_project")
    return TorusField(v.grid, spec=v.grid.project_hat(v.spec))


def sobolev_norm(f: TorusField, s: float = 0.0) -> float:
    """H^s norm with multiplier ``(1 + |k|^2)^(s/2)``; ``s = 0`` is the L2 norm."""
    if not np.isfinite(s) or s < 0:
        raise ValueError(f"Sobolev index must be finite and non-negative, got {s}")
    return float(np.sqrt(f.grid.sobolev_sq_hat(f.spec, s)))


def inner(f: TorusField, g: TorusField) -> float:
    """L2 inner product ``int f . g dx`` by quadrature."""
    if f.rank != g.rank:
        raise FieldRankError("inner product of fields with different ranks")
    prod = f.phys * g.phys
    return f.grid.integrate(prod)


def dot(u: TorusField, v: TorusField) -> TorusField:
    _require(u, "vector", "dot")
    _require(v, "vector", "dot")
    return TorusField(u.grid, np.einsum("i...,i...->...", u.phys, v.phys))


def cross(u: TorusField, v: TorusField) -> TorusField:
    _require(u, "vector", "cross")
    _require(v, "vector", "cross")
    return TorusField(u.grid, np.cross(u.phys, v.phys, axis=0))
