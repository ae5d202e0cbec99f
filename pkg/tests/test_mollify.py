import numpy as np
import pytest

from hlx.errors import ValidationError
from hlx.field import Grid, SpectralField
from hlx.mollify import (
    STANDARD_RADIAL_CONSTANT,
    MollifierSpec,
    commutator_identity_residual,
    commutator_r,
    mollification_rate_fit,
    mollify,
)
from hlx.operators import curl
from hlx.presets import random_decay

from conftest import field_from, rel


def test_constant(oracle):
    assert STANDARD_RADIAL_CONSTANT == pytest.approx(oracle["standard_radial_constant"], rel=1e-15)


@pytest.mark.parametrize("kind", ["standard_radial", "shell", "ball_indicator"])
def test_multiplier_oracle(kind, oracle):
    spec = MollifierSpec(kind, oracle["multiplier_eps"], mu=0.5)
    got = spec.multiplier_of(np.array(oracle["multiplier_q"]))
    assert np.allclose(got, oracle["multipliers"][kind], rtol=0, atol=1e-13)


def test_spec_validation():
    with pytest.raises(ValidationError):
        MollifierSpec("gauss", 0.2)
    with pytest.raises(ValidationError):
        MollifierSpec("standard_radial", 2.0)
    with pytest.raises(ValidationError):
        MollifierSpec("shell", 0.2, mu=0.0)


@pytest.mark.parametrize("kind", ["standard_radial", "shell", "ball_indicator"])
def test_unit_mass(kind, g16):
    spec = MollifierSpec(kind, 0.3)
    f = field_from(g16, lambda x, y, z: 1.7 + 0 * x)
    assert np.array_equal(mollify(f, spec).coeffs, f.coeffs)
    assert sum(spec.quadrature()[1]) == pytest.approx(1.0, abs=1e-14)


def test_commutes_with_curl(g16):
    u = random_decay(g16, seed=2)
    spec = MollifierSpec("shell", 0.4, mu=0.3)
    assert rel(curl(mollify(u, spec)), mollify(curl(u), spec)) < 1e-12


def test_multiplier_vs_direct_convolution():
    # cos(x) convolved with the kernel, evaluated at x=0 by 1D radial quadrature
    from scipy.integrate import quad

    eps = 0.5
    spec = MollifierSpec("standard_radial", eps)
    phi = lambda r: STANDARD_RADIAL_CONSTANT * np.exp(-1 / (1 - r * r)) / eps**3 if r < 1 else 0.0
    # int_ball phi(|y|) cos(y_1) dy = int 4 pi r^2 phi sinc(r) dr
    val = quad(lambda r: 4 * np.pi * r * r * phi(r / eps) * np.sin(r) / r, 0, eps, epsabs=1e-14)[0]
    assert spec.multiplier_of(np.array([1.0]))[0] == pytest.approx(val, rel=1e-12)


def test_shell_limit():
    g = Grid(32)
    ball = MollifierSpec("ball_indicator", 0.3).multiplier(g)
    shell = MollifierSpec("shell", 0.3, mu=0.01).multiplier(g)
    assert np.max(np.abs(ball - shell)) <= 0.05


def test_commutator_trivial(g16):
    spec = MollifierSpec("standard_radial", 0.3, quad_points=8)
    u = random_decay(g16, seed=1)
    assert commutator_r(u, u, spec).norm() < 1e-13
    const = field_from(g16, lambda x, y, z: (1 + 0 * x, 2 + 0 * x, 0 * x))
    assert commutator_r(u, const, spec).norm() < 1e-13
    assert commutator_identity_residual(u, u, spec) <= 1e-13


def test_commutator_bilinear(g16):
    spec = MollifierSpec("ball_indicator", 0.3, quad_points=8)
    u, B = random_decay(g16, seed=1), random_decay(g16, seed=2)
    base = commutator_r(u, B, spec)
    assert rel(commutator_r(u * 2.5, B * -0.7, spec), base * (-1.75)) < 1e-12


@pytest.mark.parametrize("kind", ["standard_radial", "shell", "ball_indicator"])
def test_identity_residual_refines(kind, g16):
    u = random_decay(g16, sigma=3, seed=11, kmax=2)
    B = random_decay(g16, sigma=3, seed=12, kmax=2)
    res = {q: commutator_identity_residual(u, B, MollifierSpec(kind, 0.3, quad_points=q)) for q in (8, 16, 32)}
    assert res[32] < res[8]
    if kind != "ball_indicator":
        assert res[16] <= 1e-6


def test_rate_fit_errors_and_constant(g16):
    f = field_from(g16, lambda x, y, z: 3.0 + 0 * x)
    with pytest.raises(ValidationError):
        mollification_rate_fit(f, 0.5, 0.4, eps_list=[0.1, 0.2])
    fit = mollification_rate_fit(f, 0.2, 0.4, eps_list=[0.1, 0.2])
    assert np.all(fit.ys == 0)


def test_rate_fit_smooth(g16):
    f = field_from(g16, lambda x, y, z: np.cos(x + y))
    fit = mollification_rate_fit(f, 0.2, 0.5, eps_list=np.geomspace(0.05, 0.4, 6))
    assert fit.slope >= 0.3


def test_besov_bound_ratio():
    from hlx.besov import INF, BesovParams, besov_norm, lp_norm, synthetic_sigma

    g = Grid(32)
    a1 = 0.4
    f = random_decay(g, sigma=synthetic_sigma(-a1), seed=5, project=False, ncomp=1)
    fb = besov_norm(f, BesovParams(-a1, 2, INF))
    ratios = [lp_norm(mollify(f, MollifierSpec("standard_radial", e)), 2) * e**a1 / fb for e in np.geomspace(0.05, 1.0, 8)]
    assert max(ratios) / min(ratios) < 20
