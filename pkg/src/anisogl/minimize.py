"""Competitor initialisation, gradient descent for E_eps, eps-continuation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import EnergyReport, check_eps, energy_and_gradient, energy_report
from .fields import (AnisotropyParams, BoundaryDatum, ComplexField, ConfigurationError, Grid,
                     apply_datum, boundary_datum)

logger = logging.getLogger(__name__)


class PlacementError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, message, last_iterate=None, eps=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.eps = eps


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 200_000
    grad_tol: float = 1e-8
    step_rule: str = "barzilai_borwein"
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigurationError("max_iters >= 1 required")
        if not self.grad_tol > 0:
            raise ConfigurationError("grad_tol > 0 required")
        if self.step_rule not in ("barzilai_borwein", "nonlinear_cg"):
            raise ConfigurationError(f"unknown step_rule {self.step_rule!r}")


@dataclass(frozen=True, eq=False)
class SolveResult:
    field: ComplexField
    report: EnergyReport
    grad_norm: float
    iters: int
    converged: bool
    eps: float
    history: np.ndarray = field(repr=False, default=None)


def vortex_ring(D: int, L: float = 1.0, radius_frac: float = 0.3) -> list[complex]:
    """Default planted centres: one at the origin for D = 1, else a ring of radius 0.3 L."""
    if D == 1:
        return [0j]
    return [radius_frac * L * np.exp(2j * np.pi * k / D) for k in range(D)]


def _laplace_extension(grid: Grid, boundary_values: np.ndarray) -> np.ndarray:
    """Discrete 5-point harmonic extension of the boundary layer of ``boundary_values``."""
    n = grid.spec.n
    m = n - 2
    T = sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1])
    I = sp.identity(m)
    A = (sp.kron(T, I) + sp.kron(I, T)).tocsc()
    B = boundary_values
    rhs = np.zeros((m, m), dtype=boundary_values.dtype)
    rhs[0, :] += B[0, 1:-1]
    rhs[-1, :] += B[-1, 1:-1]
    rhs[:, 0] += B[1:-1, 0]
    rhs[:, -1] += B[1:-1, -1]
    out = np.array(B, copy=True)
    solve = spla.factorized(A)
    if np.iscomplexobj(rhs):
        sol = solve(rhs.real.ravel()) + 1j * solve(rhs.imag.ravel())
    else:
        sol = solve(rhs.ravel())
    out[1:-1, 1:-1] = sol.reshape(m, m)
    return out


def harmonic_extension(grid: Grid, datum: BoundaryDatum) -> ComplexField:
    """Componentwise discrete harmonic extension of the boundary datum."""
    if not grid.is_square:
        raise ConfigurationError("harmonic extension is implemented for square grids")
    B = apply_datum(np.zeros(grid.shape, complex), datum)
    return ComplexField(grid, apply_datum(_laplace_extension(grid, B), datum))


def init_competitor(grid: Grid, degree_minus_D: int, eps: float,
                    vortex_centers: Sequence[complex] | None = None,
                    datum: BoundaryDatum | None = None) -> ComplexField:
    """Product of degree -1 vortices conj(z - a)/|z - a| with linear core fill
    |z - a|/eps, times exp(i chi) where chi harmonically corrects the boundary
    phase so that the trace equals the datum exactly."""
    if not grid.is_square:
        raise ConfigurationError("init_competitor needs a square grid")
    D = -int(degree_minus_D)
    if D < 1:
        raise ConfigurationError("negative boundary degree -D < 0 required")
    L = grid.spec.L
    centers = vortex_ring(D, L) if vortex_centers is None else [complex(c) for c in vortex_centers]
    if len(centers) != D:
        raise PlacementError(f"{len(centers)} centres given for D = {D}")
    for k, a in enumerate(centers):
        if L - max(abs(a.real), abs(a.imag)) < 4 * eps:
            raise PlacementError(f"centre {a} closer than 4 eps to the boundary")
        for b in centers[k + 1:]:
            if abs(a - b) < 4 * eps:
                raise PlacementError(f"centres {a} and {b} closer than 4 eps")
    datum = boundary_datum(grid, -D) if datum is None else datum
    z = grid.z
    u = np.ones(grid.shape, dtype=complex)
    for a in centers:
        w = z - a
        r = np.abs(w)
        phase = np.conj(w) / np.where(r > 0, r, 1.0)
        u *= np.where(r >= eps, phase, np.conj(w) / eps)
    # boundary phase mismatch has degree zero, so it lifts to a real function
    b = grid.loop_values(u, datum.loop)
    mismatch = np.unwrap(np.angle(datum.samples / (b / np.abs(b))))
    chi_b = np.zeros(grid.shape)
    chi_b[datum.loop[:, 0], datum.loop[:, 1]] = mismatch
    chi = _laplace_extension(grid, chi_b)
    u = u * np.exp(1j * chi)
    return ComplexField(grid, apply_datum(u, datum))


def default_init(grid: Grid, degree_minus_D: int, eps: float) -> ComplexField:
    """Competitor on the default centred ring, with the core radius reduced to
    the largest value the placement rule admits."""
    D = -int(degree_minus_D)
    centers = vortex_ring(D, grid.spec.L)
    gaps = [grid.spec.L - max(abs(a.real), abs(a.imag)) for a in centers]
    gaps += [abs(a - b) for k, a in enumerate(centers) for b in centers[k + 1:]]
    core = min(eps, min(gaps) / 4.0)
    return init_competitor(grid, -D, core, centers)


def _bb_descent(x0, fg, free, scale, opts: SolveOptions, alpha0: float,
                memory: int = 10, precond=None):
    """Barzilai-Borwein / Polak-Ribiere descent on the ``free`` entries of x0.

    ``fg(x) -> (E, grad)``; convergence when max|grad[free]|/scale <= grad_tol.
    BB steps are globalised by a nonmonotone (Grippo-Lampariello-Lucidi)
    backtracking test against the largest of the last ``memory`` energies.
    ``precond = (apply_P, solve_P)`` switches to preconditioned BB steps.
    """
    x = np.array(x0, copy=True)
    E, g = fg(x)
    if not np.isfinite(E):
        raise DivergenceError("non-finite initial energy", x)
    g = np.where(free, g, 0)
    history = [E]
    recent = [E]
    best = (E, x.copy(), g.copy())
    res = np.max(np.abs(g)) / scale
    it = 0
    alpha = alpha0
    d = -g
    roundoff = lambda e: 1e-13 * max(1.0, abs(e))
    ncg = opts.step_rule == "nonlinear_cg"
    while res > opts.grad_tol and it < opts.max_iters:
        it += 1
        if ncg:
            x_new, E_new, g_new, alpha = _line_search(x, E, g, d, alpha, fg, free)
        else:
            ref = max(recent)
            pg = g if precond is None else precond[1](g)
            gg = float(np.real(np.vdot(g.ravel(), pg.ravel())))
            for _ in range(60):
                x_new = x - alpha * pg
                with np.errstate(over="ignore", invalid="ignore"):
                    E_new, g_new = fg(x_new)
                if np.isfinite(E_new) and E_new <= ref - 1e-4 * alpha * gg + roundoff(ref):
                    break
                alpha *= 0.5
            g_new = np.where(free, g_new, 0)
        if not np.isfinite(E_new):
            raise DivergenceError(f"non-finite energy at iteration {it}", best[1])
        s = (x_new - x).ravel()
        y = (g_new - g).ravel()
        sy = float(np.real(np.vdot(s, y)))
        if ncg:
            beta = max(0.0, float(np.real(np.vdot(g_new.ravel(), y))) / max(float(np.real(np.vdot(g.ravel(), g.ravel()))), 1e-300))
            d_old = d
            d = -g_new + beta * d
            if float(np.real(np.vdot(d.ravel(), g_new.ravel()))) >= 0:
                d = -g_new
            # initial trial step from the previous decrease rate
            ratio = float(np.real(np.vdot(g.ravel(), d_old.ravel()))) / \
                min(float(np.real(np.vdot(g_new.ravel(), d.ravel()))), -1e-300)
            alpha = alpha * min(max(ratio, 0.1), 10.0)
        else:
            Ps = s if precond is None else precond[0](x_new - x).ravel()
            alpha = float(np.real(np.vdot(s, Ps))) / sy if sy > 0 else alpha0
            recent = (recent + [E_new])[-memory:]
        x, E, g = x_new, E_new, g_new
        if E <= best[0] + roundoff(best[0]):
            best = (E, x.copy(), g.copy())
            history.append(E)
        res = np.max(np.abs(g)) / scale
    converged = res <= opts.grad_tol
    if converged and E > best[0] + roundoff(best[0]):
        E, x, g = best
        res = np.max(np.abs(g)) / scale
        converged = res <= opts.grad_tol
    return x, E, res, it, converged, np.array(history)


def _line_search(x, E, g, d, alpha, fg, free, c=1e-4, max_secant=4):
    """Secant steps on phi'(a) = grad(x + a d)·d (the energy is a quartic along
    any line), then Armijo backtracking if sufficient decrease still fails."""
    dot = lambda a, b: float(np.real(np.vdot(a.ravel(), b.ravel())))
    slope0 = dot(g, d)
    tol = 1e-13 * max(1.0, abs(E))
    a_prev, s_prev = 0.0, slope0
    a_cur = alpha
    cand = None
    for _ in range(max_secant):
        x_new = x + a_cur * d
        E_new, g_new = fg(x_new)
        g_new = np.where(free, g_new, 0)
        if not np.isfinite(E_new):
            break
        s_cur = dot(g_new, d)
        if E_new <= E + c * a_cur * slope0 + tol:
            cand = (x_new, E_new, g_new, a_cur)
            if abs(s_cur) <= 0.1 * abs(slope0):
                return cand
        denom = s_prev - s_cur
        if denom == 0:
            break
        a_next = a_cur + (a_cur - a_prev) * s_cur / denom
        if not np.isfinite(a_next) or a_next <= 0:
            break
        a_prev, s_prev, a_cur = a_cur, s_cur, min(max(a_next, 0.1 * a_cur), 10 * a_cur)
    if cand is not None:
        return cand
    a_cur = alpha
    for _ in range(60):
        a_cur *= 0.5
        x_new = x + a_cur * d
        E_new, g_new = fg(x_new)
        g_new = np.where(free, g_new, 0)
        if np.isfinite(E_new) and E_new <= E + c * a_cur * slope0 + tol:
            break
    return x_new, E_new, g_new, a_cur


def minimize(init: ComplexField, params: AnisotropyParams, eps: float,
             opts: SolveOptions | None = None) -> SolveResult:
    """Descend E_eps over interior values; boundary values are kept bit-identical.

    ``grad_tol`` applies to max|el_gradient| divided by the cell area, i.e. to
    the pointwise residual of the discrete Euler-Lagrange system.
    """
    opts = SolveOptions() if opts is None else opts
    grid = init.grid
    eps = check_eps(grid, eps)
    free = ~grid.boundary_mask
    U0 = np.array(init.values)

    def fg(V):
        return energy_and_gradient(V, grid, params, eps)

    scale = grid.cell_scale
    stiff = 8.0 * params.K1 + 2.0 * scale / eps**2
    alpha0 = 1.0 / stiff
    try:
        V, E, res, it, conv, hist = _bb_descent(U0, fg, free, scale, opts, alpha0)
    except DivergenceError as exc:
        exc.eps = eps
        if exc.last_iterate is not None:
            exc.last_iterate = ComplexField(grid, exc.last_iterate)
        raise
    V[grid.boundary_mask] = U0[grid.boundary_mask]
    out = ComplexField(grid, V)
    logger.debug("minimize eps=%g delta=%g: %d iters, residual %.3e, E=%.12g",
                 eps, params.delta, it, res, E)
    return SolveResult(out, energy_report(out, params, eps), float(res), it, bool(conv), eps, hist)


def continuation(grid: Grid, params: AnisotropyParams, degree: int,
                 eps_schedule: Sequence[float], opts: SolveOptions | None = None,
                 init: ComplexField | None = None,
                 callback: Callable[[SolveResult], None] | None = None) -> list[SolveResult]:
    """Solve along a strictly decreasing eps schedule, warm-starting each solve."""
    sched = [float(e) for e in eps_schedule]
    if not sched or any(e <= 0 for e in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
        raise ConfigurationError("eps_schedule must be strictly decreasing and positive")
    if init is None:
        init = default_init(grid, degree, sched[0])
    results = []
    current = init
    for e in sched:
        try:
            r = minimize(current, params, e, opts)
        except DivergenceError as exc:
            exc.eps = e
            raise
        results.append(r)
        if callback is not None:
            callback(r)
        current = r.field
    return results
