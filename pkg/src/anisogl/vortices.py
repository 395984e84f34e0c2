"""Bad-disc detection, vortex degrees, separation and clustering diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .energy import energy_density_cells, cell_centers
from .fields import (AnisotropyParams, ComplexField, ConfigurationError, Grid, square_loop,
                     winding_number)
from .geometry import disc_rect_area

_EIGHT = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class Vortex:
    center: complex
    core_radius: float
    degree: int | None = None
    touches_boundary: bool = False
    loop_radius: float | None = None
    note: str = ""

    def __post_init__(self):
        if not self.core_radius > 0:
            raise ValueError("core_radius > 0 required")


@dataclass(frozen=True)
class SeparationStats:
    m_half_min_pair: float
    min_boundary_dist: float
    count: int


@dataclass(frozen=True)
class VortexClustering:
    groups: list[list[int]]
    scale_exponents: np.ndarray = field(repr=False)
    group_degrees: list[int | None] = field(default_factory=list)


def _require_square(grid: Grid):
    if not grid.is_square:
        raise ConfigurationError("vortex analysis is implemented for square grids")


def detect_vortices(field: ComplexField, eps: float | None = None, threshold: float = 0.5) -> list[Vortex]:
    """Connected components (8-neighbour) of {|u| <= threshold}.

    ``eps`` is accepted for interface symmetry; detection depends on |u| only.
    """
    g = field.grid
    _require_square(g)
    mod = np.abs(field.values)
    labels, count = ndimage.label(mod <= threshold, structure=_EIGHT)
    out = []
    h = g.h
    for lab in range(1, count + 1):
        idx = np.argwhere(labels == lab)
        vals = mod[idx[:, 0], idx[:, 1]]
        ci, cj = idx[np.argmin(vals)]
        center = complex(g.z[ci, cj])
        extent = float(np.max(np.abs(g.z[idx[:, 0], idx[:, 1]] - center)))
        touches = bool(np.any(g.boundary_mask[idx[:, 0], idx[:, 1]]))
        out.append(Vortex(center, extent + h, touches_boundary=touches))
    out.sort(key=lambda v: (round(v.center.real, 12), round(v.center.imag, 12)))
    return out


def assign_degrees(field: ComplexField, vortices: list[Vortex], threshold: float = 0.5,
                   growth: float = 1.5) -> list[Vortex]:
    """Winding of u on a square vertex loop of half-width >= 2 core_radius,
    grown geometrically until |u| >= threshold on the loop and no other
    centre lies inside; capped at a quarter of the domain size."""
    g = field.grid
    _require_square(g)
    h, n, L = g.h, g.spec.n, g.spec.L
    cap = 0.25 * (2 * L)
    out = []
    for k, v in enumerate(vortices):
        ci = int(round((v.center.real + L) / h))
        cj = int(round((v.center.imag + L) / h))
        others = [w.center for m, w in enumerate(vortices) if m != k]
        radius = 2.0 * v.core_radius
        degree, note, used = None, "", None
        while True:
            kk = max(1, int(np.ceil(radius / h)))
            if kk * h > cap + 1e-12:
                note = "degree loop exceeds cap; use cluster-level degree"
                break
            if ci - kk < 0 or cj - kk < 0 or ci + kk > n - 1 or cj + kk > n - 1:
                note = "degree loop leaves the grid"
                break
            loop = square_loop(g, ci, cj, kk)
            vals = field.values[loop[:, 0], loop[:, 1]]
            inside = any(abs(o.real - g.x1d[ci]) < kk * h and abs(o.imag - g.x1d[cj]) < kk * h
                         for o in others)
            if np.all(np.abs(vals) >= threshold) and not inside:
                w = winding_number(vals)
                degree, used = w.degree, kk * h
                if w.ill_resolved:
                    note = "ill-resolved loop"
                break
            if inside:
                note = "degree loop encloses another vortex"
                break
            radius *= growth
        out.append(replace(v, degree=degree, loop_radius=used, note=note))
    return out


def separation_stats(vortices: list[Vortex], grid: Grid) -> SeparationStats:
    _require_square(grid)
    if not vortices:
        return SeparationStats(np.inf, np.inf, 0)
    L = grid.spec.L
    c = np.array([v.center for v in vortices])
    bd = float(np.min(L - np.maximum(np.abs(c.real), np.abs(c.imag))))
    if len(c) < 2:
        return SeparationStats(np.inf, bd, len(c))
    dist = np.abs(c[:, None] - c[None, :])
    dist[np.diag_indices(len(c))] = np.inf
    return SeparationStats(0.5 * float(dist.min()), bd, len(c))


def cluster_vortices(vortices: list[Vortex], eps: float, alpha_cut: float,
                     field: ComplexField | None = None, threshold: float = 0.5) -> VortexClustering:
    """Group vortices whose pairwise scale exponents ln|x_i - x_j| / ln eps
    reach ``alpha_cut`` (connected components of that relation)."""
    if not 0 < alpha_cut < 1:
        raise ConfigurationError("0 < alpha_cut < 1 required")
    if not 0 < eps < 1:
        raise ConfigurationError("0 < eps < 1 required")
    n = len(vortices)
    c = np.array([v.center for v in vortices], dtype=complex)
    s = np.full((n, n), np.nan)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = abs(c[i] - c[j])
            s[i, j] = s[j, i] = np.inf if d == 0 else np.log(d) / np.log(eps)
            if s[i, j] >= alpha_cut:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    ordered = sorted(groups.values(), key=lambda gr: gr[0])
    degrees = []
    for gr in ordered:
        ds = [vortices[i].degree for i in gr]
        if all(d is not None for d in ds):
            degrees.append(int(sum(ds)))
        elif field is not None:
            degrees.append(_group_loop_degree(field, [vortices[i] for i in gr], c, threshold))
        else:
            degrees.append(None)
    return VortexClustering(ordered, s, degrees)


def _group_loop_degree(field, members, all_centers, threshold):
    g = field.grid
    h, n, L = g.h, g.spec.n, g.spec.L
    pts = np.array([m.center for m in members])
    mid = pts.mean()
    ci = int(round((mid.real + L) / h))
    cj = int(round((mid.imag + L) / h))
    radius = max(np.max(np.abs(pts - mid)) + max(m.core_radius for m in members), 2 * h)
    member_set = {complex(m.center) for m in members}
    while True:
        kk = int(np.ceil(radius / h))
        if ci - kk < 0 or cj - kk < 0 or ci + kk > n - 1 or cj + kk > n - 1:
            return None
        inside_other = any(abs(o.real - g.x1d[ci]) < kk * h and abs(o.imag - g.x1d[cj]) < kk * h
                           for o in all_centers if complex(o) not in member_set)
        if inside_other:
            return None
        vals = field.values[square_loop(g, ci, cj, kk)[:, 0], square_loop(g, ci, cj, kk)[:, 1]]
        if np.all(np.abs(vals) >= threshold):
            return winding_number(vals).degree
        radius *= 1.5


def ball_cell_weights(grid: Grid, center: complex, radius: float) -> np.ndarray:
    """Fraction of each cell's area inside the disc (exact, per cell)."""
    _require_square(grid)
    x = grid.x1d
    x0 = x[:-1][:, None] - center.real
    x1 = x[1:][:, None] - center.real
    y0 = x[:-1][None, :] - center.imag
    y1 = x[1:][None, :] - center.imag
    return disc_rect_area(x0, x1, y0, y1, radius) / grid.h**2


def local_energy(field: ComplexField, params: AnisotropyParams, eps: float,
                 center: complex, radius: float, density: np.ndarray | None = None) -> float:
    """E_eps(u, B_radius(center) ∩ Ω) from per-cell energies and exact overlaps."""
    dens = energy_density_cells(field, params, eps) if density is None else density
    return float(np.sum(dens * ball_cell_weights(field.grid, center, radius)))


@dataclass(frozen=True)
class EtaRecord:
    center: complex
    local_energy: float | None
    flagged: bool | None
    modulus_close: bool | None
    note: str = ""


def eta_ellipticity_scan(field: ComplexField, params: AnisotropyParams, eps: float,
                         alpha: float, eta: float, centers=None, lam: float = 0.25,
                         n_samples: int = 9) -> list[EtaRecord]:
    """Local energy on B_{eps^alpha}(x) at sampled centres.

    ``flagged`` means local energy <= eta ln(1/eps); ``modulus_close`` records
    whether ||u(x)| - 1| <= lam there.
    """
    if not 0 < alpha < 1:
        raise ConfigurationError("0 < alpha < 1 required")
    g = field.grid
    _require_square(g)
    rad = eps**alpha
    if centers is None:
        t = np.linspace(-g.spec.L, g.spec.L, n_samples + 2)[1:-1]
        centers = [complex(a, b) for a in t for b in t]
    dens = energy_density_cells(field, params, eps)
    bound = eta * np.log(1.0 / eps)
    out = []
    for c in centers:
        c = complex(c)
        if rad < g.h:
            out.append(EtaRecord(c, None, None, None, "ball smaller than one cell; skipped"))
            continue
        e = local_energy(field, params, eps, c, rad, dens)
        flagged = e <= bound
        mod = abs(complex(field.interpolate(np.array([c]))[0]))
        out.append(EtaRecord(c, e, bool(flagged), bool(abs(mod - 1) <= lam)))
    return out


def energy_fraction_near(field: ComplexField, params: AnisotropyParams, eps: float,
                         centers, radius: float) -> tuple[float, list[float]]:
    """Share of E_eps within ``radius`` of the union of centres, and per-centre shares."""
    dens = energy_density_cells(field, params, eps)
    total = float(dens.sum())
    weights = [ball_cell_weights(field.grid, complex(c), radius) for c in centers]
    union = np.clip(np.sum(weights, axis=0), 0, 1) if weights else np.zeros_like(dens)
    return float(np.sum(dens * union)) / total, [float(np.sum(dens * w)) / total for w in weights]
