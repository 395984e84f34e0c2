import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anisogl.fields import (AnisotropyParams, ComplexField, ConfigurationError, DegreeUndefinedError,
                            GridSpec, apply_datum, boundary_datum, make_grid, winding_number)


def test_square_grid_arithmetic():
    g = make_grid(GridSpec.square(1.0, 5))
    assert g.n_vertices == 25
    assert g.h == pytest.approx(0.5)
    assert len(g.boundary_loop) == 16
    assert g.boundary_mask.sum() == 16


def test_annulus_radii_are_log_spaced():
    g = make_grid(GridSpec.annulus(1.0, np.e, 3, 8))
    np.testing.assert_allclose(g.radii, [1.0, np.exp(0.5), np.e], rtol=1e-14)


@pytest.mark.parametrize("kwargs, msg", [
    (dict(domain_kind="annulus", R1=2.0, R2=1.0), "R1 < R2 required"),
    (dict(domain_kind="square", n=2), "n >= 3"),
    (dict(domain_kind="square", L=0.0), "L > 0"),
    (dict(domain_kind="annulus", n_theta=3), "n_theta"),
])
def test_gridspec_validation(kwargs, msg):
    with pytest.raises(ConfigurationError, match=msg):
        GridSpec(**kwargs)


def test_anisotropy_constants():
    p = AnisotropyParams(0.3)
    assert p.K1 + p.K3 == 2.0
    assert p.K1 == pytest.approx(1.3)
    with pytest.raises(ConfigurationError):
        AnisotropyParams(1.0)
    with pytest.raises(ConfigurationError):
        AnisotropyParams(-0.1)


def _datum_at(grid, degree, point):
    d = boundary_datum(grid, degree)
    z = grid.z[d.loop[:, 0], d.loop[:, 1]]
    k = int(np.argmin(np.abs(z - point)))
    assert abs(z[k] - point) < 1e-12
    return d.samples[k]


def test_boundary_datum_values():
    g = make_grid(GridSpec.square(1.0, 9))
    assert _datum_at(g, -1, 1 + 0j) == pytest.approx(1 + 0j)
    assert _datum_at(g, -1, 1j) == pytest.approx(-1j)
    assert _datum_at(g, -2, 1j) == pytest.approx(-1 + 0j)


@pytest.mark.parametrize("n", [9, 17, 33])
@pytest.mark.parametrize("d", [-4, -3, -2, -1, 1, 2, 3, 4])
def test_datum_degree_and_modulus(n, d):
    g = make_grid(GridSpec.square(1.0, n))
    datum = boundary_datum(g, d)
    np.testing.assert_allclose(np.abs(datum.samples), 1.0, atol=1e-15)
    assert winding_number(datum.samples) == d


def test_annulus_datum_covers_both_circles():
    g = make_grid(GridSpec.annulus(1.0, 2.0, 5, 32))
    datum = boundary_datum(g, -1)
    assert len(datum.samples) == 64
    u = apply_datum(np.zeros(g.shape), datum)
    np.testing.assert_allclose(np.abs(u[0]), 1)
    np.testing.assert_allclose(np.abs(u[-1]), 1)


def test_winding_examples():
    th = 2 * np.pi * np.arange(64) / 64
    assert winding_number(np.exp(-1j * th)) == -1
    assert winding_number(np.ones(10, complex)) == 0
    assert winding_number(np.exp(2j * th)) == 2
    assert not winding_number(np.exp(2j * th)).ill_resolved


def test_winding_zero_raises():
    with pytest.raises(DegreeUndefinedError):
        winding_number([1, 0, 1j])


def test_winding_flags_coarse_loops():
    th = 2 * np.pi * np.arange(5) / 5
    assert winding_number(np.exp(2j * th)).ill_resolved


@settings(max_examples=40, deadline=None)
@given(d=st.integers(-5, 5), shift=st.integers(0, 127), phase=st.floats(0, 2 * np.pi),
       wobble=st.floats(0, 0.3))
def test_winding_invariances(d, shift, phase, wobble):
    th = 2 * np.pi * np.arange(128) / 128
    loop = (1 + wobble * np.cos(3 * th)) * np.exp(1j * (d * th + wobble * np.sin(th)))
    w = winding_number(loop).degree
    assert w == d
    assert winding_number(np.roll(loop, shift)) == w
    assert winding_number(np.exp(1j * phase) * loop) == w
    assert winding_number(np.conj(loop)) == -w


def test_field_is_read_only_and_copied():
    g = make_grid(GridSpec.square(1.0, 5))
    arr = np.ones(g.shape, complex)
    u = ComplexField(g, arr)
    arr[2, 2] = 5
    assert u.values[2, 2] == 1
    with pytest.raises(ValueError):
        u.values[0, 0] = 2


def test_field_shape_checked():
    g = make_grid(GridSpec.square(1.0, 5))
    with pytest.raises(ConfigurationError):
        ComplexField(g, np.ones((4, 4), complex))


def test_bilinear_interpolation_exact_on_bilinear():
    g = make_grid(GridSpec.square(1.0, 9))
    f = lambda z: (1 + 2j) * z.real + 3 * z.imag - 0.5j * z.real * z.imag
    u = ComplexField(g, f(g.z))
    pts = np.array([0.13 - 0.71j, -0.9 + 0.33j, 0.999 + 0.999j])
    np.testing.assert_allclose(u.interpolate(pts), f(pts), atol=1e-14)
