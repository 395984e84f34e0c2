import numpy as np
import pytest

from anisogl.energy import energy_report
from anisogl.fields import (AnisotropyParams, ComplexField, ConfigurationError, GridSpec, make_grid,
                            square_loop, winding_number)
from anisogl.minimize import (DivergenceError, PlacementError, SolveOptions, continuation,
                              default_init, harmonic_extension, init_competitor, minimize)
from anisogl.fields import boundary_datum
from anisogl.vortices import detect_vortices

from conftest import solve_chain


@pytest.fixture(scope="module")
def g65():
    return make_grid(GridSpec.square(1.0, 65))


def test_competitor_modulus_and_core(g65):
    eps = 0.1
    u = init_competitor(g65, -1, eps, [0j])
    z = g65.z
    far = (np.abs(z) >= eps) & ~g65.boundary_mask
    np.testing.assert_allclose(np.abs(u.values[far]), 1.0, atol=1e-14)
    assert u.values[32, 32] == 0
    assert np.array_equal(u.values[g65.boundary_mask], boundary_datum(g65, -1).samples[
        np.argsort(np.ravel_multi_index(boundary_datum(g65, -1).loop.T, g65.shape))])


def test_competitor_degrees_add(g65):
    u = init_competitor(g65, -2, 0.05, [0.3 + 0j, -0.3 + 0j])
    loop = square_loop(g65, 32, 32, 24)
    assert winding_number(u.values[loop[:, 0], loop[:, 1]]) == -2


def test_competitor_placement_errors(g65):
    with pytest.raises(PlacementError):
        init_competitor(g65, -2, 0.1, [0.1 + 0j, -0.1 + 0j])
    with pytest.raises(PlacementError):
        init_competitor(g65, -1, 0.1, [0.9 + 0j])
    with pytest.raises(PlacementError):
        init_competitor(g65, -2, 0.1, [0j])


def test_default_init_shrinks_core_when_needed(g65):
    u = default_init(g65, -3, 0.2)
    assert len(detect_vortices(u)) == 3


def test_minimize_from_harmonic_extension(g65):
    init = harmonic_extension(g65, boundary_datum(g65, -1))
    p = AnisotropyParams(0.0)
    r = minimize(init, p, 0.25)
    assert r.converged
    assert r.report.E_eps < energy_report(init, p, 0.25).E_eps
    assert len(detect_vortices(r.field)) == 1


def test_boundary_kept_bitwise_and_history_monotone(g65):
    init = default_init(g65, -1, 0.2)
    r = minimize(init, AnisotropyParams(0.2), 0.2)
    assert np.array_equal(r.field.values[g65.boundary_mask], init.values[g65.boundary_mask])
    h = r.history
    assert np.all(np.diff(h) <= 1e-13 * np.maximum(1, np.abs(h[:-1])))


def test_rerun_is_fixed_point(g65):
    r = minimize(default_init(g65, -1, 0.2), AnisotropyParams(0.1), 0.2)
    r2 = minimize(r.field, AnisotropyParams(0.1), 0.2)
    assert r2.iters <= 5
    assert r2.report.E_eps == pytest.approx(r.report.E_eps, abs=1e-12)


@pytest.mark.parametrize("delta", [0.0, 0.2])
def test_modulus_bounded_by_one(g65, delta):
    r = continuation(g65, AnisotropyParams(delta), -1, [0.2, 0.1])[-1]
    assert np.max(np.abs(r.field.values)) <= 1 + 1e-8


def test_nonlinear_cg_reaches_same_minimum(g65):
    init = default_init(g65, -1, 0.2)
    p = AnisotropyParams(0.2)
    a = minimize(init, p, 0.2)
    b = minimize(init, p, 0.2, SolveOptions(step_rule="nonlinear_cg"))
    assert b.converged
    assert b.report.E_eps == pytest.approx(a.report.E_eps, rel=1e-10)


def test_continuation_contract(g65):
    p = AnisotropyParams(0.0)
    res = continuation(g65, p, -1, [0.2, 0.1])
    assert len(res) == 2
    assert res[1].report.E_eps > res[0].report.E_eps
    init = res[0].field
    single = continuation(g65, p, -1, [0.1], init=init)[0]
    direct = minimize(init, p, 0.1)
    assert np.array_equal(single.field.values, direct.field.values)


@pytest.mark.parametrize("sched", [[0.1, 0.2], [0.1, 0.1], [], [0.2, -0.1]])
def test_continuation_rejects_bad_schedules(g65, sched):
    with pytest.raises(ConfigurationError):
        continuation(g65, AnisotropyParams(0.0), -1, sched)


def test_nonfinite_init_raises_divergence(g65):
    vals = np.array(default_init(g65, -1, 0.2).values)
    vals[10, 10] = np.nan
    with pytest.raises(DivergenceError):
        minimize(ComplexField(g65, vals), AnisotropyParams(0.0), 0.2)


def test_solve_options_validation():
    with pytest.raises(ConfigurationError):
        SolveOptions(step_rule="newton")
    with pytest.raises(ConfigurationError):
        SolveOptions(grad_tol=0)


def test_energy_increments_match_pi_ln2():
    E = [r.report.E_eps for r in solve_chain(129, 0.0, 1)]
    for a, b in zip(E, E[1:]):
        assert (b - a) / (np.pi * np.log(2)) == pytest.approx(1.0, rel=0.15)


@pytest.mark.parametrize("D", [1, 2])
def test_degree_conserved_near_boundary(D):
    for r in solve_chain(129, 0.1, D):
        g = r.field.grid
        loop = square_loop(g, 64, 64, 64 - 3)
        vals = r.field.values[loop[:, 0], loop[:, 1]]
        assert np.all(np.abs(vals) > 0.5)
        assert winding_number(vals) == -D


def test_gradient_bound_times_eps_is_stable():
    ratios = []
    for r in solve_chain(129, 0.2, 1):
        U, h = r.field.values, r.field.grid.h
        gx = np.abs(np.diff(U, axis=0)) / h
        gy = np.abs(np.diff(U, axis=1)) / h
        ratios.append(max(gx.max(), gy.max()) * r.eps)
    assert max(ratios) / min(ratios) <= 3
