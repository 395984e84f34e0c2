"""Degree costs C_delta^d from the reduced 1D functional and annulus lifts,
and the partition cost K(delta, -D).

Both estimators work on a lifted phase phi = d*theta + psi, psi periodic in
theta.  For v = exp(i phi) one has div v = grad(phi)·(-sin phi, cos phi) and
curl v = grad(phi)·(cos phi, sin phi), so the S^1 constraint and the degree
are exact by construction.  The 1D functional

    I_d(psi) = ∫ F_d(psi, theta) (d + psi')^2 dtheta,
    F_d = [K1 cos^2((d-1)theta + psi) + K3 sin^2((d-1)theta + psi)] / 2,

and the annulus energy share one quadrature (bilinear phase, 2-point Gauss in
theta), so a theta-only annulus field has energy exactly ln(R2/R1) * I_d.
"""

from __future__ import annotations

import itertools
import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import AnisotropyParams, ComplexField, ConfigurationError, GridSpec, make_grid
from .minimize import DivergenceError, SolveOptions, _bb_descent

_GAUSS = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


class SearchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ReducedProfile:
    psi: np.ndarray = dataclasses.field(repr=False)
    degree: int = -1

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim != 1 or psi.size < 16:
            raise ConfigurationError("profile needs at least 16 samples")
        object.__setattr__(self, "psi", psi)

    @property
    def n(self) -> int:
        return self.psi.size

    @property
    def thetas(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n) / self.n


def _F(params, d, psi, theta):
    return 0.5 * (1.0 + params.delta * np.cos(2.0 * ((d - 1) * theta + psi)))


def _F_psi(params, d, psi, theta):
    return -params.delta * np.sin(2.0 * ((d - 1) * theta + psi))


def _reduced_value_grad(psi, params, d, want_grad=True):
    n = psi.size
    dt = 2 * np.pi / n
    th = dt * np.arange(n)
    nxt = np.roll(psi, -1)
    slope = d + (nxt - psi) / dt
    val = 0.0
    grad = np.zeros(n) if want_grad else None
    for b in _GAUSS:
        pq = (1 - b) * psi + b * nxt
        tq = th + b * dt
        Fq = _F(params, d, pq, tq)
        val += 0.5 * dt * float(np.sum(Fq * slope**2))
        if want_grad:
            A = 0.5 * dt * _F_psi(params, d, pq, tq) * slope**2
            B = dt * Fq * slope / dt  # d/dslope of 0.5 dt F slope^2, times dslope/dpsi = 1/dt
            grad += (1 - b) * A + b * np.roll(A, 1)
            grad += np.roll(B, 1) - B
    return val, grad


def reduced_functional(profile: ReducedProfile, params: AnisotropyParams) -> float:
    """Energy per unit ln(R2/R1) of the 0-homogeneous map exp(i(d theta + psi))."""
    return _reduced_value_grad(profile.psi, params, profile.degree, want_grad=False)[0]


_REDUCED_OPTS = dict(grad_tol=1e-8, max_iters=5000)


def minimize_reduced(d: int, params: AnisotropyParams, n: int = 256,
                     opts: SolveOptions | None = None) -> tuple[ReducedProfile, float]:
    """Descend I_d from a few constant profiles (plus a small seeded kick to
    leave symmetric critical points) and keep the lowest value.

    The default tolerance sits just above the level where energy differences
    drown in roundoff; below it the gradient can no longer be certified by
    the line search and the descent only dithers.
    """
    opts = SolveOptions(**_REDUCED_OPTS) if opts is None else opts
    if n < 16:
        raise ConfigurationError("n >= 16 required")
    rng = np.random.default_rng(opts.seed)
    dt = 2 * np.pi / n
    free = np.ones(n, dtype=bool)

    def fg(x):
        return _reduced_value_grad(x, params, d)

    # periodic Helmholtz preconditioner matching the stiff (psi')^2 term
    sym = dt * (1.0 + (2 - 2 * np.cos(2 * np.pi * np.fft.fftfreq(n) )) / dt**2)
    precond = (lambda v: np.real(np.fft.ifft(np.fft.fft(v) * sym)),
               lambda v: np.real(np.fft.ifft(np.fft.fft(v) / sym)))
    base = np.zeros(n)
    best_val = fg(base)[0]
    best_psi = base
    for c in (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4):
        x0 = c + 1e-3 * rng.standard_normal(n)
        try:
            x, E, res, it, conv, _ = _bb_descent(x0, fg, free, dt, opts, alpha0=0.1, precond=precond)
        except DivergenceError as exc:
            raise DivergenceError(f"reduced descent diverged for d={d}", exc.last_iterate) from exc
        if E < best_val:
            best_val, best_psi = E, x
    return ReducedProfile(best_psi, d), float(best_val)


def el_ode_residual(profile: ReducedProfile, params: AnisotropyParams) -> tuple[float, np.ndarray]:
    """Pointwise residual F_psi (d+psi')^2 - 2 [F (d+psi')]' by periodic centred
    differences; returns (max-norm, residual profile).

    The flux [F (d+psi')]' uses the compact centred stencil (half-node fluxes),
    psi' in the F_psi term the two-sided one.
    """
    psi, d = profile.psi, profile.degree
    n = psi.size
    dt = 2 * np.pi / n
    th = profile.thetas
    nxt = np.roll(psi, -1)
    flux = _F(params, d, 0.5 * (psi + nxt), th + 0.5 * dt) * (d + (nxt - psi) / dt)
    slope = d + (nxt - np.roll(psi, 1)) / (2 * dt)
    res = _F_psi(params, d, psi, th) * slope**2 - 2 * (flux - np.roll(flux, 1)) / dt
    return float(np.max(np.abs(res))), res


# -- annulus lifts ----------------------------------------------------------

def _annulus_value_grad(psi, grid, params, d, want_grad=True):
    """Lift energy on a log-polar grid; psi has shape (n_r, n_theta)."""
    ds, dt = grid.log_step, grid.dtheta
    th = grid.thetas
    Ds = (psi[1:, :] - psi[:-1, :]) / ds
    Dt = d + (np.roll(psi, -1, axis=1) - psi) / dt
    A0, A1 = Ds, np.roll(Ds, -1, axis=1)
    B0, B1 = Dt[:-1, :], Dt[1:, :]
    P00, P10 = psi[:-1, :], psi[1:, :]
    P01, P11 = np.roll(P00, -1, axis=1), np.roll(P10, -1, axis=1)
    w = ds * dt / 4.0
    K1, K3 = params.K1, params.K3
    val = 0.0
    if want_grad:
        gA0, gA1, gB0, gB1 = (np.zeros_like(A0) for _ in range(4))
        gP = [np.zeros_like(A0) for _ in range(4)]
    for a in _GAUSS:
        for b in _GAUSS:
            ps = (1 - b) * A0 + b * A1
            pt = (1 - a) * B0 + a * B1
            tq = th + b * dt
            c, s = np.cos(tq)[None, :], np.sin(tq)[None, :]
            gx = c * ps - s * pt
            gy = s * ps + c * pt
            phq = d * tq[None, :] + (1 - a) * (1 - b) * P00 + a * (1 - b) * P10 \
                + (1 - a) * b * P01 + a * b * P11
            cp, sp_ = np.cos(phq), np.sin(phq)
            Adiv = -gx * sp_ + gy * cp
            Bcurl = gx * cp + gy * sp_
            val += w * float(np.sum(0.5 * K1 * Adiv**2 + 0.5 * K3 * Bcurl**2))
            if want_grad:
                dphi = -w * (K1 - K3) * Adiv * Bcurl
                dgx = w * (-K1 * Adiv * sp_ + K3 * Bcurl * cp)
                dgy = w * (K1 * Adiv * cp + K3 * Bcurl * sp_)
                dps = c * dgx + s * dgy
                dpt = -s * dgx + c * dgy
                gA0 += (1 - b) * dps
                gA1 += b * dps
                gB0 += (1 - a) * dpt
                gB1 += a * dpt
                gP[0] += (1 - a) * (1 - b) * dphi
                gP[1] += a * (1 - b) * dphi
                gP[2] += (1 - a) * b * dphi
                gP[3] += a * b * dphi
    if not want_grad:
        return val, None
    grad = np.zeros_like(psi)
    gDs = gA0 + np.roll(gA1, 1, axis=1)
    grad[1:, :] += gDs / ds
    grad[:-1, :] -= gDs / ds
    gDt = np.zeros_like(psi)
    gDt[:-1, :] += gB0
    gDt[1:, :] += gB1
    grad += (np.roll(gDt, 1, axis=1) - gDt) / dt
    grad[:-1, :] += gP[0] + np.roll(gP[2], 1, axis=1)
    grad[1:, :] += gP[1] + np.roll(gP[3], 1, axis=1)
    return val, grad


def _lift_preconditioner(grid):
    """Sparse (mass + Laplacian) operator on psi: Neumann in s, periodic in theta."""
    nr, nt = grid.shape
    ds, dt = grid.log_step, grid.dtheta
    Ls = sp.diags([-np.ones(nr - 1), 2 * np.ones(nr), -np.ones(nr - 1)], [-1, 0, 1]).tolil()
    Ls[0, 0] = Ls[-1, -1] = 1.0
    Lt = sp.diags([-np.ones(nt - 1), 2 * np.ones(nt), -np.ones(nt - 1)], [-1, 0, 1]).tolil()
    Lt[0, -1] = Lt[-1, 0] = -1.0
    A = ds * dt * (sp.kron(Ls.tocsr() / ds**2, sp.identity(nt))
                   + sp.kron(sp.identity(nr), Lt.tocsr() / dt**2) + sp.identity(nr * nt))
    A = A.tocsc()
    solve = spla.factorized(A)
    shape = grid.shape
    return (lambda v: (A @ v.ravel()).reshape(shape),
            lambda v: solve(np.ascontiguousarray(v).ravel()).reshape(shape))


def annulus_energy(psi: np.ndarray, grid, params: AnisotropyParams, d: int) -> float:
    return _annulus_value_grad(np.asarray(psi, float), grid, params, d, want_grad=False)[0]


@dataclass(frozen=True, eq=False)
class AnnulusResult:
    value: float
    field: ComplexField = dataclasses.field(repr=False)
    psi: np.ndarray = dataclasses.field(repr=False)
    homogeneous_value: float = np.nan
    max_v_theta: tuple[float, float] = (np.nan, np.nan)
    circle_norms: tuple[float, float] = (np.nan, np.nan)
    in_lipschitz_class: bool | None = None
    in_l2_class: bool | None = None
    iters: int = 0
    converged: bool = False


def annulus_grid(R1: float, R2: float, n_per_log: int = 16, n_theta: int = 256):
    n_r = max(2, int(round(n_per_log * np.log(R2 / R1))) + 1)
    return make_grid(GridSpec.annulus(R1, R2, n_r, n_theta))


def annulus_minimize(R1: float, R2: float, d: int, params: AnisotropyParams, grid=None,
                     constraint_c: float | None = None, opts: SolveOptions | None = None,
                     n_per_log: int = 16, n_theta: int = 256) -> AnnulusResult:
    """Minimise E_0 over lifts exp(i(d theta + psi(r, theta))) on A_{R1,R2}.

    psi is free on both circles; the Lipschitz/L^2 class bounds are audited
    afterwards (reported), not enforced.
    """
    opts = SolveOptions(grad_tol=1e-8) if opts is None else opts
    grid = annulus_grid(R1, R2, n_per_log, n_theta) if grid is None else grid
    if grid.is_square:
        raise ConfigurationError("annulus_minimize needs an annulus grid")
    s = grid.spec
    if d == 0:
        raise ConfigurationError("nonzero degree required")
    prof, _ = minimize_reduced(d, params, s.n_theta, SolveOptions(**_REDUCED_OPTS, seed=opts.seed))
    hom = np.tile(prof.psi, (s.n_r, 1))

    def fg(x):
        return _annulus_value_grad(x, grid, params, d)

    free = np.ones(grid.shape, dtype=bool)
    best_val, _ = fg(hom)
    best_psi, iters, conv = hom, 0, True
    hom_val = best_val
    rng = np.random.default_rng(opts.seed)
    scale = grid.log_step * grid.dtheta
    precond = _lift_preconditioner(grid)
    for start in (hom, np.zeros(grid.shape)):
        x0 = start + 1e-3 * rng.standard_normal(grid.shape)
        x, E, res, it, c, _ = _bb_descent(x0, fg, free, scale, opts, 0.1, precond=precond)
        iters += it
        if E < best_val:
            best_val, best_psi, conv = E, x, c
    phi = d * grid.thetas[None, :] + best_psi
    v = ComplexField(grid, np.exp(1j * phi))
    vt = d + (np.roll(best_psi, -1, axis=1) - best_psi) / grid.dtheta
    maxes = (float(np.max(np.abs(vt[0]))), float(np.max(np.abs(vt[-1]))))
    norms = (float(np.sum(vt[0] ** 2) * grid.dtheta * s.R1), float(np.sum(vt[-1] ** 2) * grid.dtheta * s.R2))
    lip = l2 = None
    if constraint_c is not None:
        lip = bool(max(maxes) <= constraint_c)
        l2 = bool(norms[0] <= 2 * np.pi * s.R1 * constraint_c**2 and norms[1] <= 2 * np.pi * s.R2 * constraint_c**2)
    return AnnulusResult(float(best_val), v, best_psi, float(hom_val), maxes, norms, lip, l2, iters, conv)


@dataclass(frozen=True)
class SlopeResult:
    slope: float
    t_list: tuple[float, ...]
    values: tuple[float, ...]
    pairwise: tuple[float, ...]
    drift: tuple[float, ...]


def cdelta_slope(params: AnisotropyParams, d: int = -1, t_list: Sequence[float] = (4, 8, 16),
                 n_per_log: int = 16, n_theta: int = 256, opts: SolveOptions | None = None) -> SlopeResult:
    """Least-squares slope of I(A_{1,t}) against ln t, plus pairwise slopes."""
    ts = [float(t) for t in t_list]
    if len(ts) < 2 or any(b <= a for a, b in zip(ts, ts[1:])) or ts[0] <= 1:
        raise ConfigurationError("t_list must be increasing ratios > 1 with at least two entries")
    vals = [annulus_minimize(1.0, t, d, params, opts=opts, n_per_log=n_per_log,
                             n_theta=n_theta).value for t in ts]
    x = np.log(ts)
    slope = float(np.polyfit(x, vals, 1)[0])
    pw = tuple(float((v2 - v1) / (x2 - x1)) for v1, v2, x1, x2 in zip(vals, vals[1:], x, x[1:]))
    drift = tuple(float(b - a) for a, b in zip(pw, pw[1:]))
    return SlopeResult(slope, tuple(ts), tuple(float(v) for v in vals), pw, drift)


# -- degree costs and the partition search ----------------------------------

@dataclass(frozen=True)
class CostEntry:
    value: float
    method: str
    err: float = 0.0


@dataclass
class DegreeCostTable:
    delta: float
    entries: dict[int, CostEntry] = dataclasses.field(default_factory=dict)

    def cost(self, d: int) -> float:
        return self.entries[d].value

    def check_bounds(self, tol: float = 1e-9) -> bool:
        return all(d * d * (1 - self.delta) * np.pi - tol <= e.value <= d * d * np.pi + tol
                   for d, e in self.entries.items())


def build_cost_table(params: AnisotropyParams, degrees: Sequence[int], method: str = "reduced_1d",
                     n: int = 256, t_list: Sequence[float] = (4, 8, 16),
                     n_per_log: int = 16) -> DegreeCostTable:
    table = DegreeCostTable(params.delta)
    for d in degrees:
        if d == 0:
            continue
        if method == "reduced_1d":
            _, val = minimize_reduced(d, params, n)
            _, coarse = minimize_reduced(d, params, n // 2)
            table.entries[d] = CostEntry(val, method, abs(val - coarse))
        elif method == "annulus_2d":
            res = cdelta_slope(params, d, t_list, n_per_log=n_per_log, n_theta=n)
            err = max((abs(x) for x in res.drift), default=0.0)
            table.entries[d] = CostEntry(res.slope, method, err)
        else:
            raise ConfigurationError(f"unknown method {method!r}")
    return table


def k_partition(delta: float, D: int, table: DegreeCostTable, d_max: int = 4,
                m_max: int | None = None) -> tuple[float, tuple[int, ...]]:
    """Minimal sum of costs over multisets of nonzero degrees in [-d_max, d_max]
    with at most m_max members summing to -D.  Ties go to the lexicographically
    smallest sorted multiset."""
    m_max = D + 2 if m_max is None else m_max
    if m_max < D:
        raise SearchError(f"m_max={m_max} cannot reach total degree -{D} with unit degrees")
    degs = [d for d in range(-d_max, d_max + 1) if d != 0]
    missing = [d for d in degs if d not in table.entries]
    if missing:
        raise SearchError(f"cost table lacks degrees {missing}")
    lower = {d: d * d * (1 - delta) * np.pi for d in degs}
    best = [np.inf, None]

    def rec(start, remaining, size, acc, lb_acc, chosen):
        if remaining == 0 and chosen:
            key = tuple(chosen)
            if acc < best[0] - 1e-12 or (abs(acc - best[0]) <= 1e-12 and key < best[1]):
                best[0], best[1] = acc, key
        if size == m_max:
            return
        for i in range(start, len(degs)):
            d = degs[i]
            # bounds prune: nothing can beat the incumbent
            if lb_acc + lower[d] > best[0] + 1e-12:
                continue
            rest = m_max - size - 1
            new_rem = remaining - d
            if abs(new_rem) > rest * d_max:
                continue
            rec(i, new_rem, size + 1, acc + table.cost(d), lb_acc + lower[d], chosen + [d])

    rec(0, -D, 0, 0.0, 0.0, [])
    if best[1] is None:
        raise SearchError(f"no multiset with at most {m_max} degrees sums to -{D}")
    return float(best[0]), best[1]


def brute_force_partition(D: int, costs: dict[int, float], d_max: int, m_max: int):
    """Reference enumeration over all multisets (no pruning)."""
    degs = [d for d in range(-d_max, d_max + 1) if d != 0]
    best = (np.inf, None)
    for m in range(1, m_max + 1):
        for combo in itertools.combinations_with_replacement(degs, m):
            if sum(combo) != -D:
                continue
            val = sum(costs[d] for d in combo)
            if val < best[0] - 1e-12 or (abs(val - best[0]) <= 1e-12 and combo < best[1]):
                best = (val, combo)
    return best
