"""Grids, complex fields, S^1 boundary data and winding numbers.

Two structured domains are supported:

* ``square``: the square [-L, L]^2 sampled by an n x n vertex lattice,
  ``values[i, j]`` lives at ``(x_i, y_j)``.
* ``annulus``: the annulus R1 <= |z| <= R2 sampled on a log-polar lattice,
  ``values[k, m]`` lives at ``r_k e^{i theta_m}`` with ``r_k`` geometric and
  ``theta_m = 2 pi m / n_theta`` (periodic in m).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np


class ConfigurationError(ValueError):
    """Raised when a grid or parameter set violates its invariants."""


class DegreeUndefinedError(ValueError):
    """Raised when a loop passes through a zero of the field."""


@dataclass(frozen=True)
class GridSpec:
    domain_kind: str = "square"
    L: float = 1.0
    n: int = 65
    R1: float = 1.0
    R2: float = np.e
    n_r: int = 32
    n_theta: int = 128

    def __post_init__(self):
        if self.domain_kind == "square":
            if not self.L > 0:
                raise ConfigurationError("L > 0 required")
            if self.n < 3:
                raise ConfigurationError("n >= 3 required")
        elif self.domain_kind == "annulus":
            if not (self.R1 > 0 and self.R2 > 0):
                raise ConfigurationError("R1 > 0 and R2 > 0 required")
            if not self.R1 < self.R2:
                raise ConfigurationError("R1 < R2 required")
            if self.n_r < 2:
                raise ConfigurationError("n_r >= 2 required")
            if self.n_theta < 4:
                raise ConfigurationError("n_theta >= 4 required")
        else:
            raise ConfigurationError(f"domain_kind must be 'square' or 'annulus', got {self.domain_kind!r}")

    @classmethod
    def square(cls, L: float = 1.0, n: int = 65) -> "GridSpec":
        return cls("square", L=L, n=n)

    @classmethod
    def annulus(cls, R1: float, R2: float, n_r: int, n_theta: int) -> "GridSpec":
        return cls("annulus", R1=R1, R2=R2, n_r=n_r, n_theta=n_theta)


@dataclass(frozen=True, eq=False)
class Grid:
    """Vertex geometry built from a :class:`GridSpec`."""

    spec: GridSpec

    @property
    def kind(self) -> str:
        return self.spec.domain_kind

    @property
    def is_square(self) -> bool:
        return self.spec.domain_kind == "square"

    @cached_property
    def shape(self) -> tuple[int, int]:
        s = self.spec
        return (s.n, s.n) if self.is_square else (s.n_r, s.n_theta)

    @property
    def n_vertices(self) -> int:
        return self.shape[0] * self.shape[1]

    @cached_property
    def h(self) -> float:
        """Lattice spacing of the square grid."""
        if not self.is_square:
            raise ConfigurationError("h is only defined for square grids")
        return 2.0 * self.spec.L / (self.spec.n - 1)

    @cached_property
    def x1d(self) -> np.ndarray:
        return np.linspace(-self.spec.L, self.spec.L, self.spec.n)

    @cached_property
    def radii(self) -> np.ndarray:
        s = self.spec
        k = np.arange(s.n_r)
        return s.R1 * (s.R2 / s.R1) ** (k / (s.n_r - 1))

    @cached_property
    def log_step(self) -> float:
        s = self.spec
        return np.log(s.R2 / s.R1) / (s.n_r - 1)

    @cached_property
    def thetas(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.spec.n_theta) / self.spec.n_theta

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.spec.n_theta

    @cached_property
    def z(self) -> np.ndarray:
        """Complex vertex coordinates, same layout as field values."""
        if self.is_square:
            X, Y = np.meshgrid(self.x1d, self.x1d, indexing="ij")
            return X + 1j * Y
        return self.radii[:, None] * np.exp(1j * self.thetas)[None, :]

    @property
    def center(self) -> complex:
        return 0j

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        if self.is_square:
            m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        else:
            m[0, :] = m[-1, :] = True
        return m

    @cached_property
    def boundary_loop(self) -> np.ndarray:
        """Counterclockwise boundary loop as an (N, 2) index array.

        For the annulus this is the outer circle; the inner circle is
        available as :attr:`inner_loop` (also counterclockwise).
        """
        if self.is_square:
            n = self.spec.n
            r = np.arange(n - 1)
            bottom = np.stack([r, np.zeros_like(r)], axis=1)
            right = np.stack([np.full_like(r, n - 1), r], axis=1)
            top = np.stack([n - 1 - r, np.full_like(r, n - 1)], axis=1)
            left = np.stack([np.zeros_like(r), n - 1 - r], axis=1)
            return np.concatenate([bottom, right, top, left])
        m = np.arange(self.spec.n_theta)
        return np.stack([np.full_like(m, self.spec.n_r - 1), m], axis=1)

    @cached_property
    def inner_loop(self) -> np.ndarray:
        if self.is_square:
            raise ConfigurationError("square grids have a single boundary loop")
        m = np.arange(self.spec.n_theta)
        return np.stack([np.zeros_like(m), m], axis=1)

    @cached_property
    def vertex_weights(self) -> np.ndarray:
        """Trapezoidal area weights (sum equals the domain area up to quadrature)."""
        if self.is_square:
            w1 = np.full(self.spec.n, self.h)
            w1[0] = w1[-1] = 0.5 * self.h
            return np.outer(w1, w1)
        ws = np.full(self.spec.n_r, self.log_step)
        ws[0] = ws[-1] = 0.5 * self.log_step
        # log-polar area element r^2 ds dtheta
        return (ws * self.radii**2)[:, None] * np.full(self.spec.n_theta, self.dtheta)[None, :]

    @cached_property
    def cell_scale(self) -> float:
        """Reference cell area used to turn gradients into pointwise residuals."""
        if self.is_square:
            return self.h**2
        return self.log_step * self.dtheta

    def loop_values(self, values: np.ndarray, loop: np.ndarray | None = None) -> np.ndarray:
        loop = self.boundary_loop if loop is None else loop
        return values[loop[:, 0], loop[:, 1]]


def make_grid(spec: GridSpec) -> Grid:
    return Grid(spec)


@dataclass(frozen=True)
class AnisotropyParams:
    """Elastic constants K1 = 1 + delta (div) and K3 = 1 - delta (curl)."""

    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ConfigurationError(f"0 <= delta < 1 required, got {self.delta}")

    @property
    def K1(self) -> float:
        return 1.0 + self.delta

    @property
    def K3(self) -> float:
        return 1.0 - self.delta


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ConfigurationError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.grid.boundary_mask

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    def with_values(self, values: np.ndarray) -> "ComplexField":
        return ComplexField(self.grid, values)

    def interpolate(self, pts: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at complex points (square grids only)."""
        g = self.grid
        if not g.is_square:
            raise ConfigurationError("interpolation is implemented for square grids")
        pts = np.asarray(pts, dtype=complex)
        L, h, n = g.spec.L, g.h, g.spec.n
        fx = (pts.real + L) / h
        fy = (pts.imag + L) / h
        i = np.clip(np.floor(fx).astype(int), 0, n - 2)
        j = np.clip(np.floor(fy).astype(int), 0, n - 2)
        tx = fx - i
        ty = fy - j
        V = self.values
        v00, v10, v01, v11 = V[i, j], V[i + 1, j], V[i, j + 1], V[i + 1, j + 1]
        # difference form: exact on constant fields
        return v00 + tx * (v10 - v00) + ty * (v01 - v00) + tx * ty * (v11 - v10 - v01 + v00)


@dataclass(frozen=True, eq=False)
class BoundaryDatum:
    degree: int
    samples: np.ndarray = field(repr=False)
    loop: np.ndarray = field(repr=False)


def boundary_datum(grid: Grid, degree_d: int) -> BoundaryDatum:
    """Sample ``((z - c)/|z - c|)^d`` on the boundary, i.e. conj(.)^D for d = -D.

    On an annulus both circles carry the datum.
    """
    degree_d = int(degree_d)
    loop = grid.boundary_loop
    if not grid.is_square:
        loop = np.concatenate([grid.inner_loop, loop])
    z = grid.z[loop[:, 0], loop[:, 1]] - grid.center
    if np.any(np.abs(z) == 0):
        raise RuntimeError("boundary vertex coincides with the domain center")
    unit = z / np.abs(z)
    samples = unit**degree_d
    samples = samples / np.abs(samples)
    return BoundaryDatum(degree_d, samples, loop)


def apply_datum(values: np.ndarray, datum: BoundaryDatum) -> np.ndarray:
    out = np.array(values, dtype=complex)
    out[datum.loop[:, 0], datum.loop[:, 1]] = datum.samples
    return out


class Winding(NamedTuple):
    """Winding number of a closed loop with its resolution diagnostics.

    ``defect`` is the distance of the raw phase sum (in turns) to the
    nearest integer; ``max_step`` the largest phase increment in radians.
    """

    degree: int
    defect: float
    max_step: float

    @property
    def ill_resolved(self) -> bool:
        return self.defect > 0.25 or self.max_step > 0.75 * np.pi

    def __int__(self) -> int:
        return self.degree

    def __eq__(self, other):
        if isinstance(other, (int, np.integer)):
            return self.degree == other
        return tuple.__eq__(self, other)

    def __hash__(self):
        return hash(self.degree)


def winding_number(loop) -> Winding:
    """Degree of a closed loop of nonzero complex samples.

    The loop is closed implicitly (last sample connects to the first).
    """
    z = np.asarray(loop, dtype=complex).ravel()
    if z.size == 0:
        raise DegreeUndefinedError("empty loop")
    if np.any(z == 0):
        raise DegreeUndefinedError("loop passes through a zero of the field")
    steps = np.angle(np.roll(z, -1) / z)
    turns = steps.sum() / (2.0 * np.pi)
    deg = int(np.rint(turns))
    return Winding(deg, float(abs(turns - deg)), float(np.max(np.abs(steps))))


def square_loop(grid: Grid, ci: int, cj: int, k: int) -> np.ndarray:
    """Counterclockwise square loop of vertices at Chebyshev distance k from (ci, cj)."""
    r = np.arange(-k, k)
    bottom = np.stack([ci + r, np.full_like(r, cj - k)], axis=1)
    right = np.stack([np.full_like(r, ci + k), cj + r], axis=1)
    top = np.stack([ci - r, np.full_like(r, cj + k)], axis=1)
    left = np.stack([np.full_like(r, ci - k), cj - r], axis=1)
    return np.concatenate([bottom, right, top, left])
