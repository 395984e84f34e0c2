import numpy as np
import pytest

from anisogl.fields import AnisotropyParams, ComplexField, ConfigurationError, GridSpec, make_grid
from anisogl.minimize import init_competitor
from anisogl.vortices import (Vortex, assign_degrees, ball_cell_weights, cluster_vortices,
                              detect_vortices, energy_fraction_near, eta_ellipticity_scan,
                              separation_stats)

from conftest import solve_at, solve_chain


@pytest.fixture(scope="module")
def g65():
    return make_grid(GridSpec.square(1.0, 65))


def core_filled(grid, f, eps=0.1):
    z = grid.z
    r = np.abs(z)
    return ComplexField(grid, np.where(r >= eps, f(z) / np.where(r > 0, r, 1), f(z) / eps))


def test_unit_field_has_no_vortices(g65):
    assert detect_vortices(ComplexField(g65, np.ones(g65.shape, complex))) == []


def test_single_competitor_vortex(g65):
    a = 0.2 - 0.1j
    vs = detect_vortices(init_competitor(g65, -1, 0.1, [a]))
    assert len(vs) == 1
    assert abs(vs[0].center - a) <= g65.h


def test_two_competitor_vortices(g65):
    u = init_competitor(g65, -2, 0.1, [0.3 + 0j, -0.3 + 0j])
    vs = assign_degrees(u, detect_vortices(u))
    assert len(vs) == 2
    assert abs(vs[0].center + 0.3) <= g65.h and abs(vs[1].center - 0.3) <= g65.h
    assert [v.degree for v in vs] == [-1, -1]
    assert not any(v.touches_boundary for v in vs)


@pytest.mark.parametrize("f, deg", [(np.conj, -1), (lambda z: 1j * z, 1)])
def test_hedgehog_degrees(g65, f, deg):
    u = core_filled(g65, f)
    vs = assign_degrees(u, detect_vortices(u))
    assert [v.degree for v in vs] == [deg]
    assert vs[0].loop_radius >= 2 * vs[0].core_radius


def test_detection_invariant_under_phase_rotation(g65):
    u = init_competitor(g65, -2, 0.1, [0.3 + 0.1j, -0.3 + 0j])
    a = detect_vortices(u)
    b = detect_vortices(ComplexField(g65, np.exp(0.7j) * u.values))
    assert [(v.center, v.core_radius) for v in a] == [(v.center, v.core_radius) for v in b]


def test_separation_stats_examples(g65):
    vs = [Vortex(-0.5 + 0j, 0.1), Vortex(0.5 + 0j, 0.1)]
    assert separation_stats(vs, g65).m_half_min_pair == pytest.approx(0.5)
    one = separation_stats([Vortex(0j, 0.1)], g65)
    assert one.min_boundary_dist == pytest.approx(1.0)
    empty = separation_stats([], g65)
    assert empty.count == 0 and empty.m_half_min_pair == np.inf and empty.min_boundary_dist == np.inf


def test_clustering_by_scale_exponent():
    eps = 0.01
    near = [Vortex(0j, 0.01, -1), Vortex(complex(eps**0.9, 0), 0.01, -1)]
    c = cluster_vortices(near, eps, 0.5)
    assert c.groups == [[0, 1]] and c.group_degrees == [-2]
    far = [Vortex(0j, 0.01, -1), Vortex(complex(eps**0.1, 0), 0.01, -1)]
    assert cluster_vortices(far, eps, 0.5).groups == [[0], [1]]
    single = cluster_vortices([Vortex(0j, 0.01, 1)], eps, 0.5)
    assert single.groups == [[0]] and single.group_degrees == [1]
    with pytest.raises(ConfigurationError):
        cluster_vortices(near, eps, 1.5)


def test_cluster_degree_from_loop_when_members_unresolved(g65):
    u = init_competitor(g65, -2, 0.05, [0.1 + 0j, -0.1 + 0j])
    vs = [Vortex(v.center, v.core_radius) for v in detect_vortices(u)]
    c = cluster_vortices(vs, 0.05, 0.3, field=u)
    assert c.group_degrees == [-2]


def test_ball_weights_exact_area(g65):
    w = ball_cell_weights(g65, 0.13 - 0.2j, 0.5)
    assert w.sum() * g65.h**2 == pytest.approx(np.pi * 0.25, rel=1e-12)


def test_eta_scan_on_unit_field(g65):
    u = ComplexField(g65, np.ones(g65.shape, complex))
    recs = eta_ellipticity_scan(u, AnisotropyParams(0.1), 0.1, 0.5, 0.1)
    assert recs and all(r.flagged and r.modulus_close for r in recs)


def test_eta_scan_on_converged_solve():
    r = solve_at(129, 0.1, 1, 0.05)
    v = detect_vortices(r.field)[0]
    at_core, far = eta_ellipticity_scan(r.field, AnisotropyParams(0.1), 0.05, 0.5, 0.05,
                                        centers=[v.center, 0.7 + 0.7j])
    assert at_core.flagged is False
    assert far.flagged and far.modulus_close


@pytest.mark.parametrize("delta", [0.0, 0.1, 0.2])
@pytest.mark.parametrize("D", [1, 2])
def test_converged_solves_have_D_unit_vortices(delta, D):
    for r in solve_chain(129, delta, D)[1:]:
        vs = assign_degrees(r.field, detect_vortices(r.field, r.eps))
        assert len(vs) == D
        assert all(v.degree == -1 for v in vs)
        assert sum(v.degree for v in vs) == -D


def test_separation_over_eps_does_not_shrink():
    chain = solve_chain(129, 0.1, 2)
    ratios = [separation_stats(detect_vortices(r.field), r.field.grid).m_half_min_pair / r.eps for r in chain]
    for a, b in zip(ratios, ratios[1:]):
        assert b >= 0.9 * a


def test_energy_fraction_bookkeeping():
    r = solve_at(129, 0.1, 1, 0.1)
    whole, parts = energy_fraction_near(r.field, AnisotropyParams(0.1), 0.1, [0j], 10.0)
    assert whole == pytest.approx(1.0, abs=1e-9) and parts[0] == pytest.approx(1.0, abs=1e-9)
