"""Pohozaev identities on interior discs, evaluated on discrete fields.

For a critical point u of E_eps and a disc B with pivot X0,

    (1/eps^2) ∫_B (1-|u|^2)^2
        = 1/(2 eps^2) ∫_∂B (1-|u|^2)^2 (X-X0)·ν
          - 2 K1 ∫_∂B (div u)(Z·ν) - 2 K3 ∫_∂B (curl u)(Z·τ)
          + K1 ∫_∂B (div u)^2 (X-X0)·ν + K3 ∫_∂B (curl u)^2 (X-X0)·ν

with Z = (X-X0)·∇u, div u = u_τ·τ + u_ν·ν and curl u = u_ν·τ - u_τ·ν.
Plane vectors are carried as complex numbers, so a·b = Re(conj(a) b).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import check_eps, potential_density
from .fields import AnisotropyParams, BoundaryDatum, ComplexField, ConfigurationError
from .vortices import ball_cell_weights


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class PohozaevReport:
    lhs_interior: float
    potential_boundary: float
    div_flux: float
    curl_flux: float
    div_sq: float
    curl_sq: float
    floor: float

    @property
    def rhs_total(self) -> float:
        return self.potential_boundary + self.div_flux + self.curl_flux + self.div_sq + self.curl_sq

    @property
    def residual_rel(self) -> float:
        lhs, rhs = self.lhs_interior, self.rhs_total
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs), self.floor)


@dataclass(frozen=True)
class CircleTrace:
    """Boundary samples on a circle: u, u_nu, u_tau and the frame."""

    X: np.ndarray
    nu: np.ndarray
    tau: np.ndarray
    u: np.ndarray
    u_nu: np.ndarray
    u_tau: np.ndarray
    ds: float


def _dot(a, b):
    return np.real(np.conj(a) * b)


def circle_trace(field: ComplexField, center: complex, radius: float,
                 normal_order: int = 2, n_points: int | None = None) -> CircleTrace:
    g = field.grid
    if not g.is_square:
        raise ConfigurationError("Pohozaev diagnostics need a square grid")
    h, L = g.h, g.spec.L
    center = complex(center)
    margin = L - (max(abs(center.real), abs(center.imag)) + radius)
    if margin < 2 * h - 1e-12:
        raise GeometryError(f"disc (centre {center}, radius {radius}) violates the 2h interior margin")
    if radius < 3 * h:
        raise GeometryError("disc radius must exceed 3h for one-sided normal differences")
    N = n_points or max(16, int(np.ceil(8 * radius / h)))
    th = 2 * np.pi * np.arange(N) / N
    nu = np.exp(1j * th)
    tau = 1j * nu
    X = center + radius * nu
    u0 = field.interpolate(X)
    u1 = field.interpolate(X - h * nu)
    if normal_order == 1:
        u_nu = (u0 - u1) / h
    elif normal_order == 2:
        u2 = field.interpolate(X - 2 * h * nu)
        u_nu = (3 * u0 - 4 * u1 + u2) / (2 * h)
    else:
        raise ConfigurationError("normal_order must be 1 or 2")
    dth = 2 * np.pi / N
    u_tau = (np.roll(u0, -1) - np.roll(u0, 1)) / (2 * radius * dth)
    return CircleTrace(X, nu, tau, u0, u_nu, u_tau, radius * dth)


def interior_potential(field: ComplexField, eps: float, center: complex, radius: float) -> float:
    """(1/eps^2) ∫_B (1-|u|^2)^2 by cell means times exact clipped cell areas."""
    g = field.grid
    p = 4.0 * potential_density(field.values, eps)
    cell = 0.25 * (p[1:, 1:] + p[:-1, 1:] + p[1:, :-1] + p[:-1, :-1])
    w = ball_cell_weights(g, complex(center), radius) * g.h**2
    return float(np.sum(cell * w))


def pohozaev_disc(field: ComplexField, params: AnisotropyParams, eps: float,
                  center: complex, radius: float, pivot: complex | None = None,
                  normal_order: int = 2) -> PohozaevReport:
    eps = check_eps(field.grid, eps)
    tr = circle_trace(field, center, radius, normal_order)
    X0 = complex(center) if pivot is None else complex(pivot)
    Xr = tr.X - X0
    Xn = _dot(Xr, tr.nu)
    Xt = _dot(Xr, tr.tau)
    div = _dot(tr.u_tau, tr.tau) + _dot(tr.u_nu, tr.nu)
    curl = _dot(tr.u_nu, tr.tau) - _dot(tr.u_tau, tr.nu)
    Z = Xt * tr.u_tau + Xn * tr.u_nu
    m = 1.0 - np.abs(tr.u) ** 2
    K1, K3, ds = params.K1, params.K3, tr.ds
    pot_b = float(np.sum(m * m * Xn)) * ds / (2 * eps**2)
    div_flux = -2 * K1 * float(np.sum(div * _dot(Z, tr.nu))) * ds
    curl_flux = -2 * K3 * float(np.sum(curl * _dot(Z, tr.tau))) * ds
    div_sq = K1 * float(np.sum(div**2 * Xn)) * ds
    curl_sq = K3 * float(np.sum(curl**2 * Xn)) * ds
    lhs = interior_potential(field, eps, center, radius)
    floor = 1e-14 * field.grid.n_vertices
    return PohozaevReport(lhs, pot_b, div_flux, curl_flux, div_sq, curl_sq, floor)


def disc_inequality_check(field: ComplexField, params: AnisotropyParams, eps: float,
                          center: complex, radius: float, delta1: float | None = None,
                          tolerance: float = 0.0, normal_order: int = 2) -> tuple[bool, float]:
    """Slack of the disc estimate

        (1/eps^2)∫_B(1-|u|^2)^2 + (1-δ1) r ∫_∂B |u_ν|^2
            <= (r/2eps^2)∫_∂B (1-|u|^2)^2 + (1+δ1) r ∫_∂B |u_τ|^2

    returned as (slack >= -tolerance * scale, rhs - lhs).
    """
    eps = check_eps(field.grid, eps)
    d1 = params.delta if delta1 is None else float(delta1)
    tr = circle_trace(field, center, radius, normal_order)
    m = 1.0 - np.abs(tr.u) ** 2
    lhs = interior_potential(field, eps, center, radius) + \
        (1 - d1) * radius * float(np.sum(np.abs(tr.u_nu) ** 2)) * tr.ds
    rhs = radius / (2 * eps**2) * float(np.sum(m * m)) * tr.ds + \
        (1 + d1) * radius * float(np.sum(np.abs(tr.u_tau) ** 2)) * tr.ds
    slack = rhs - lhs
    scale = max(abs(lhs), abs(rhs), 1e-14 * field.grid.n_vertices)
    return bool(slack >= -tolerance * scale), float(slack)


def star_shaped_bound_check(field: ComplexField, params: AnisotropyParams, eps: float,
                            datum: BoundaryDatum) -> tuple[bool, float]:
    """ratio = [(1/eps^2)∫_Ω(1-|u|^2)^2 + ∫_∂Ω |u_ν|^2] / ∫_∂Ω |g_τ|^2 on the square.

    Normal derivatives are second-order one-sided differences on each side.
    Degree-zero data are excluded (the denominator can vanish).
    """
    g = field.grid
    if not g.is_square:
        raise ConfigurationError("star-shaped bound check is implemented for the square")
    if datum.degree == 0:
        raise ConfigurationError("degree != 0 required")
    eps = check_eps(g, eps)
    h = g.h
    U = field.values
    interior = float(np.sum(g.vertex_weights * 4.0 * potential_density(U, eps)))
    w = np.full(g.spec.n, h)
    w[0] = w[-1] = 0.5 * h
    sides = [
        (U[:, 0], U[:, 1], U[:, 2]),
        (U[:, -1], U[:, -2], U[:, -3]),
        (U[0, :], U[1, :], U[2, :]),
        (U[-1, :], U[-2, :], U[-3, :]),
    ]
    normal = 0.0
    for b0, b1, b2 in sides:
        u_nu = (3 * b0 - 4 * b1 + b2) / (2 * h)
        normal += float(np.sum(w * np.abs(u_nu) ** 2))
    s = datum.samples
    tangential = float(np.sum(np.abs(np.roll(s, -1) - s) ** 2)) / h
    if tangential == 0:
        raise ZeroDivisionError("tangential boundary energy vanishes")
    ratio = (interior + normal) / tangential
    return bool(np.isfinite(ratio)), ratio
