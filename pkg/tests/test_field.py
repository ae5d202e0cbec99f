import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hlx.errors import ValidationError
from hlx.field import VOLUME, Grid, SpectralField, hermitian_defect, pointwise, pointwise_coeffs, to_physical, to_spectral
from hlx.operators import (
    biot_savart,
    curl,
    divergence,
    gradient,
    leray_project,
    pressure_solve,
    translate,
    vector_potential,
)
from hlx.presets import abc, preset_field, random_decay, single_mode, taylor_green

from conftest import field_from, rel


def test_grid_validation():
    for bad in (4, 12, 0):
        with pytest.raises(ValidationError):
            Grid(bad)
    with pytest.raises(ValidationError):
        Grid(16, "bogus")
    g = Grid(16)
    assert g.coords()[1] == pytest.approx(2 * np.pi / 16)
    assert g.product_size(2) == 24 and g.product_size(3) == 32
    assert Grid(16, "two_thirds").product_size(2) == 16


def test_roundtrip_and_plancherel(g32):
    f = random_decay(g32, sigma=1.0, seed=4)
    x = f.physical()
    back = SpectralField.from_physical(g32, x)
    assert rel(back, f) < 1e-13
    grid_inner = np.sum(x * x) * g32.spacing**3
    assert grid_inner == pytest.approx(f.inner(f), rel=1e-12)
    assert hermitian_defect(f.coeffs) < 1e-15


def test_padded_transform_is_exact(g16):
    f = random_decay(g16, sigma=1.0, seed=1)
    up = to_physical(f.coeffs, 40)
    assert np.allclose(to_spectral(up, 16), f.coeffs, atol=1e-15)


def test_curl_examples(g16):
    u = field_from(g16, lambda x, y, z: (np.sin(z), 0 * x, 0 * x))
    assert rel(curl(u), field_from(g16, lambda x, y, z: (0 * x, np.cos(z), 0 * x))) < 1e-14
    phi = field_from(g16, lambda x, y, z: np.cos(x) * np.cos(y))
    assert curl(gradient(phi)).norm() < 1e-13
    u = abc(g16)
    assert rel(curl(u), u) < 1e-14
    assert np.allclose(curl(random_decay(g16, seed=2)).mean(), 0)


def test_curl_rejects_scalar(g16):
    with pytest.raises(ValidationError):
        curl(field_from(g16, lambda x, y, z: np.sin(x)))


def test_divergence_examples(g16):
    f = field_from(g16, lambda x, y, z: (np.sin(x), 0 * x, 0 * x))
    assert rel(divergence(f), field_from(g16, lambda x, y, z: np.cos(x))) < 1e-14
    g = random_decay(g16, seed=3, project=False)
    assert divergence(curl(g)).norm() < 1e-13
    assert divergence(leray_project(g)).norm() < 1e-13


def test_biot_savart(g16):
    z = SpectralField.zeros(g16)
    assert biot_savart(z).norm() == 0
    w = single_mode(g16, (1, 0, 0), comp=2, kind="cos")
    assert rel(biot_savart(w), single_mode(g16, (1, 0, 0), comp=1, kind="sin")) < 1e-14
    u = abc(g16)
    assert rel(biot_savart(curl(u)), u) < 1e-12
    r = random_decay(g16, seed=5)
    w = curl(r)
    ub = biot_savart(w)
    assert rel(curl(ub), w) < 1e-13 and divergence(ub).norm() < 1e-13


def test_biot_savart_errors(g16):
    w = curl(random_decay(g16, seed=5))
    c = np.array(w.coeffs)
    c[:, 0, 0, 0] = 1.0
    with pytest.raises(ValidationError):
        biot_savart(SpectralField(g16, c))
    with pytest.raises(ValidationError):
        biot_savart(random_decay(g16, seed=6, project=False))


def test_vector_potential(g16):
    B = single_mode(g16, (1, 0, 0), comp=2, kind="cos")
    assert rel(vector_potential(B), single_mode(g16, (1, 0, 0), comp=1)) < 1e-14
    B = curl(random_decay(g16, seed=7))
    A = vector_potential(B)
    assert rel(curl(A), B) < 1e-13
    assert divergence(A).norm() < 1e-13


def test_leray(g16):
    u = random_decay(g16, seed=9)
    assert rel(leray_project(u), u) < 1e-14
    phi = random_decay(g16, seed=10, ncomp=1)
    assert leray_project(gradient(phi)).norm() < 1e-13
    r = random_decay(g16, seed=11, project=False)
    p1 = leray_project(r)
    assert rel(leray_project(p1), p1) < 1e-13


def test_pressure_examples(g32):
    assert pressure_solve(SpectralField.zeros(g32)).norm() == 0
    shear = field_from(g32, lambda x, y, z: (np.sin(y) + 0.3 * np.cos(2 * y), 0 * x, 0 * x))
    assert pressure_solve(shear).norm() < 1e-13
    u = abc(g32)
    x = u.physical()
    half = 0.5 * np.sum(x * x, axis=0)
    expected = SpectralField.from_physical(g32, (half.mean() - half)[None])
    assert rel(pressure_solve(u), expected) < 1e-13


def test_presets(g32, oracle):
    u = abc(g32)
    assert u.inner(u) == pytest.approx(3 * VOLUME, rel=1e-14)
    assert u.inner(curl(u)) == pytest.approx(oracle["abc_helicity"], rel=1e-14)
    tg = taylor_green(g32)
    assert abs(tg.inner(curl(tg))) < 1e-12
    a = random_decay(g32, sigma=2, seed=3)
    b = random_decay(g32, sigma=2, seed=3)
    assert np.array_equal(a.coeffs, b.coeffs)
    with pytest.raises(ValidationError):
        preset_field("nope", g32)


def test_random_decay_spectrum(g32):
    f = random_decay(g32, sigma=2.0, seed=1, project=False, kmax=12)
    kmag = g32.kmag()
    amp = np.sqrt(np.sum(np.abs(f.coeffs) ** 2, axis=0))
    sel = (kmag >= 1) & (kmag <= 12)
    ratio = amp[sel] * kmag[sel] ** 2.0
    assert np.ptp(ratio) / ratio.mean() < 1e-12


def test_vector_identities(g16):
    u = random_decay(g16, sigma=2, seed=12)
    w = curl(u)
    lhs = curl(pointwise(lambda a, b: np.cross(b, a, axis=0), u, w))

    def div_outer(a, b):
        # div(a (x) b)_j = sum_i d_i (a_i b_j)
        t = pointwise_coeffs(lambda x, y: np.stack([x[i] * y[j] for i in range(3) for j in range(3)]),
                             [a.coeffs, b.coeffs], g16, order=2)
        kd = g16.derivative_wavenumbers()
        return np.stack([sum(1j * kd[i] * t[3 * i + j] for i in range(3)) for j in range(3)])

    rhs = SpectralField(g16, div_outer(u, w) - div_outer(w, u))
    assert rel(lhs, rhs) < 1e-10
    wxu = pointwise(lambda a, b: np.cross(a, b, axis=0), w, u)
    uu2 = pointwise(lambda a: 0.5 * np.sum(a * a, axis=0), u, order=2)
    rhs2 = SpectralField(g16, div_outer(u, u)) - gradient(uu2)
    assert rel(wxu, rhs2) < 1e-10


def test_translate_shift(g16):
    f = single_mode(g16, (2, 1, 0), comp=0)
    xi = np.array([0.3, -0.2, 0.5])
    expected = field_from(g16, lambda x, y, z: (np.sin(2 * (x + xi[0]) + (y + xi[1])), 0 * x, 0 * x))
    assert rel(translate(f, xi), expected) < 1e-13


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_hermitian_preserved(seed):
    g = Grid(8)
    u = random_decay(g, sigma=1.5, seed=seed)
    for out in (curl(u), leray_project(u), pressure_solve(u), pointwise(lambda a: a * a, u, order=2)):
        assert hermitian_defect(out.coeffs) < 1e-14
