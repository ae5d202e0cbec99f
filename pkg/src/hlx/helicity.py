"""Helicity defect terms, the mollified local balance and global invariants."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .field import VOLUME, SpectralField, check_same_grid, check_vector, pointwise_coeffs
from .mollify import MollifierSpec, mollify
from .operators import (
    curl,
    curl_coeffs,
    div_coeffs,
    divergence,
    grad_coeffs,
    pressure_solve,
    vector_potential,
)
from .shifts import ShiftEngine

METHODS = ("quadrature", "explicit")


@dataclass
class DefectReport:
    d1: SpectralField
    d2: SpectralField
    combined: SpectralField
    path_residual: float
    eps: float
    d1_residual: float = float("nan")
    d2_residual: float = float("nan")
    method: str = "explicit"

    def as_row(self) -> dict:
        return {
            "eps": self.eps,
            "d1_norm": self.d1.norm(),
            "d2_norm": self.d2.norm(),
            "combined_norm": self.combined.norm(),
            "d1_path_residual": self.d1_residual,
            "d2_path_residual": self.d2_residual,
            "path_residual": self.path_residual,
        }


@dataclass
class ConservedSet:
    energy: float
    helicity: float
    cross_helicity: float
    magnetic_helicity: float


@dataclass
class BalanceReport:
    residual: SpectralField
    norm: float
    time_source: str
    terms: dict


def resolve_vorticity(u: SpectralField, omega: Optional[SpectralField], synthetic: bool = False):
    check_vector(u, "u")
    if omega is None:
        return curl(u)
    check_vector(omega, "omega")
    check_same_grid(u, omega)
    if not synthetic:
        w = curl(u)
        if (omega - w).norm() > 1e-10 * max(w.norm(), 1.0):
            raise ValidationError("omega is not curl(u); pass synthetic=True for synthetic pairs")
    return omega


def _div_rows(t, grid):
    # (div T)_j = d_i T_ij for T stored row-major as 9 components
    kd = grid.derivative_wavenumbers()
    return np.stack([sum(1j * kd[i] * t[3 * i + j] for i in range(3)) for j in range(3)])


def _outer(a, b):
    return np.stack([a[i] * b[j] for i in range(3) for j in range(3)])


def _explicit_terms(u, w, spec):
    """Explicit D1 and D2 coefficients with alias-free products."""
    grid = u.grid
    m = spec.multiplier(grid)
    uc, wc = u.coeffs, w.coeffs
    ue, we = uc * m, wc * m

    # (w.u) u, |u|^2 w, w.u, |u|^2, u(x)w, u(x)u, w(x)u
    wu_u = pointwise_coeffs(lambda a, b: np.sum(a * b, axis=0) * a, [uc, wc], grid, order=3)
    uu_w = pointwise_coeffs(lambda a, b: np.sum(a * a, axis=0) * b, [uc, wc], grid, order=3)
    quad = pointwise_coeffs(
        lambda a, b: np.concatenate(
            (
                np.sum(a * b, axis=0)[None],
                np.sum(a * a, axis=0)[None],
                _outer(a, b),
                _outer(a, a),
                _outer(b, a),
            )
        ),
        [uc, wc],
        grid,
        order=2,
    )
    wu, uu = quad[0], quad[1]
    t_uw, t_uu, t_wu = quad[2:11], quad[11:20], quad[20:29]

    grad_wu_e = grad_coeffs(wu * m, grid)
    grad_uu_e = grad_coeffs(uu * m, grid)
    div_uw_e = _div_rows(t_uw * m, grid)
    div_uu_e = _div_rows(t_uu * m, grid)
    div_wu_e = _div_rows(t_wu * m, grid)
    kd = grid.derivative_wavenumbers()
    # G[i] = d_i u^eps, H[i] = d_i w^eps (vectors)
    gu = np.stack([1j * kd[i] * ue for i in range(3)])
    gw = np.stack([1j * kd[i] * we for i in range(3)])

    def d1_fn(a, b, g_wu, d_uw, d_uu, g_u, g_w):
        out = np.sum(a * g_wu, axis=0)
        out += np.sum(a * d_uw, axis=0)
        out += np.sum(b * d_uu, axis=0)
        out -= np.einsum("i...,j...,ij...->...", a, b, g_u)
        out -= np.einsum("i...,j...,ij...->...", a, a, g_w)
        return out

    d1 = pointwise_coeffs(d1_fn, [uc, wc, grad_wu_e, div_uw_e, div_uu_e, gu, gw], grid, order=3)
    d1 = d1 - div_coeffs(wu_u * m, grid)[None]

    def d2_fn(a, b, g_uu, d_wu, g_u):
        out = np.sum(b * g_uu, axis=0)
        out += 2.0 * np.sum(a * d_wu, axis=0)
        out -= 2.0 * np.einsum("i...,j...,ij...->...", b, a, g_u)
        return out

    d2 = pointwise_coeffs(d2_fn, [uc, wc, grad_uu_e, div_wu_e, gu], grid, order=3)
    d2 = d2 - div_coeffs(uu_w * m, grid)[None]
    return d1, d2


def _quadrature_terms(u, w, spec):
    """D1 and D2 as xi-integrals of grad(kernel) against increment products."""
    if spec.kind == "ball_indicator":
        from .structfun import lebedev_for, s1_s2

        rule = lebedev_for(u, spec.eps)
        s1, s2 = s1_s2(u, w, spec.eps, rule)
        scale = -3.0 / spec.eps
        return scale * s1.coeffs, scale * s2.coeffs
    xis, g = spec.gradient_quadrature()
    eng = ShiftEngine([u, w], degree=3)
    u0, w0 = eng.base[:3], eng.base[3:]
    shape = (eng.m,) * 3
    acc1 = np.zeros(shape)
    acc2 = np.zeros(shape)
    for shifted, gb in eng.batches(xis, g):
        du = shifted[:, :3] - u0
        dw = shifted[:, 3:] - w0
        gdu = np.einsum("bi,bi...->b...", gb, du)
        gdw = np.einsum("bi,bi...->b...", gb, dw)
        acc1 += np.sum(gdu * np.sum(dw * du, axis=1), axis=0)
        acc2 += np.sum(gdw * np.sum(du * du, axis=1), axis=0)
    d1 = eng.finish(acc1[None]).coeffs
    d2 = eng.finish(acc2[None]).coeffs
    return d1, d2


def _terms(u, w, spec, method):
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}")
    if method == "explicit":
        return _explicit_terms(u, w, spec)
    return _quadrature_terms(u, w, spec)


def defect_d1(
    u: SpectralField,
    omega: Optional[SpectralField] = None,
    spec: MollifierSpec = MollifierSpec(),
    method: str = "explicit",
    synthetic: bool = False,
) -> SpectralField:
    """D1 = int grad(kernel)(xi) . du (dw . du) d xi."""
    w = resolve_vorticity(u, omega, synthetic)
    return SpectralField(u.grid, _terms(u, w, spec, method)[0], u.time)


def defect_d2(
    u: SpectralField,
    omega: Optional[SpectralField] = None,
    spec: MollifierSpec = MollifierSpec(),
    method: str = "explicit",
    synthetic: bool = False,
) -> SpectralField:
    """D2 = int grad(kernel)(xi) . dw |du|^2 d xi."""
    w = resolve_vorticity(u, omega, synthetic)
    return SpectralField(u.grid, _terms(u, w, spec, method)[1], u.time)


def _rel(a, b):
    scale = np.sqrt(VOLUME * np.sum(np.abs(b) ** 2))
    diff = np.sqrt(VOLUME * np.sum(np.abs(a - b) ** 2))
    return float(diff / scale) if scale > 0 else float(diff)


def defect_report(
    u: SpectralField,
    spec: MollifierSpec,
    omega: Optional[SpectralField] = None,
    method: str = "both",
    synthetic: bool = False,
) -> DefectReport:
    """D1, D2 and combined D1 - D2/2; with method='both' the two paths are compared.

    path_residual is the larger of the relative L2 differences of D1 and D2
    between the quadrature and explicit evaluations (nan for a single path).
    """
    w = resolve_vorticity(u, omega, synthetic)
    if method == "both":
        e1, e2 = _explicit_terms(u, w, spec)
        q1, q2 = _quadrature_terms(u, w, spec)
        r1, r2 = _rel(q1, e1), _rel(q2, e2)
        res = max(r1, r2)
        d1, d2 = e1, e2
    else:
        d1, d2 = _terms(u, w, spec, method)
        r1 = r2 = res = float("nan")
    f1 = SpectralField(u.grid, d1, u.time)
    f2 = SpectralField(u.grid, d2, u.time)
    return DefectReport(f1, f2, f1 - 0.5 * f2, res, spec.eps, r1, r2, method)


def _time_term(u, w, dudt, m):
    """d/dt (w^eps . u + w . u^eps) from a known d_t u."""
    grid = u.grid
    dw = curl_coeffs(dudt.coeffs, grid)
    return pointwise_coeffs(
        lambda a, b, da, db, ae, be, dae, dbe: np.sum(dbe * a + be * da + db * ae + b * dae, axis=0),
        [u.coeffs, w.coeffs, dudt.coeffs, dw, u.coeffs * m, w.coeffs * m, dudt.coeffs * m, dw * m],
        grid,
        order=2,
    )


def local_balance_residual(
    u: SpectralField,
    spec: MollifierSpec,
    dudt: Optional[SpectralField] = None,
    pressure: Optional[SpectralField] = None,
    nu: float = 0.0,
    method: str = "explicit",
    time_source: str = "analytic",
) -> BalanceReport:
    """Assemble the mollified helicity balance; returns the residual field and its L2 norm.

    dudt is the time derivative of u (zero when absent, i.e. a steady state).
    With nu > 0 the viscous contribution
    nu (w^eps.Lap u + u.Lap w^eps + w.Lap u^eps + u^eps.Lap w)
      = nu Lap(w^eps.u + w.u^eps) - 2 nu (grad u : grad w^eps + grad u^eps : grad w)
    is subtracted.
    """
    check_vector(u, "u")
    grid = u.grid
    w = curl(u)
    m = spec.multiplier(grid)
    uc, wc = u.coeffs, w.coeffs
    ue, we = uc * m, wc * m
    p = pressure_solve(u) if pressure is None else pressure
    pc = p.coeffs

    terms = {}
    if dudt is None:
        terms["time"] = np.zeros((1,) + grid.shape, dtype=complex)
    else:
        check_same_grid(u, dudt)
        terms["time"] = _time_term(u, w, dudt, m)

    flux_p = pointwise_coeffs(lambda pp, b, be, ppe: pp * be + ppe * b, [pc, wc, we, pc * m], grid, order=2)
    terms["pressure_flux"] = div_coeffs(flux_p, grid)[None]

    flux_c = pointwise_coeffs(
        lambda a, b, ae, be: np.sum(a * be, axis=0) * a
        + np.sum(b * ae, axis=0) * a
        - np.sum(a * ae, axis=0) * b,
        [uc, wc, ue, we],
        grid,
        order=3,
    )
    terms["transport_flux"] = div_coeffs(flux_c, grid)[None]

    wu_u = pointwise_coeffs(lambda a, b: np.sum(a * b, axis=0) * a, [uc, wc], grid, order=3)
    uu_w = pointwise_coeffs(lambda a, b: np.sum(a * a, axis=0) * b, [uc, wc], grid, order=3)
    scal = pointwise_coeffs(
        lambda a, b: np.stack((np.sum(a * b, axis=0), np.sum(a * a, axis=0))), [uc, wc], grid, order=2
    )
    mixed = pointwise_coeffs(
        lambda a, b, s_wu, s_uu: -2.0 * s_wu * a + s_uu * b,
        [uc, wc, scal[0:1] * m, scal[1:2] * m],
        grid,
        order=2,
    )
    flux_d = 2.0 * wu_u * m - uu_w * m + mixed
    terms["defect_flux"] = 0.5 * div_coeffs(flux_d, grid)[None]

    d1, d2 = _terms(u, w, spec, method)
    terms["defect"] = d1 - 0.5 * d2

    if nu:
        kd = grid.derivative_wavenumbers()
        dens = pointwise_coeffs(lambda a, b, ae, be: np.sum(be * a + b * ae, axis=0), [uc, wc, ue, we], grid, order=2)
        k2 = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
        gu = np.stack([1j * kd[i] * uc for i in range(3)])
        gw = np.stack([1j * kd[i] * wc for i in range(3)])
        diss = pointwise_coeffs(
            lambda a, b, ae, be: np.sum(a * be + ae * b, axis=(0, 1)),
            [gu, gw, gu * m, gw * m],
            grid,
            order=2,
        )
        terms["viscous"] = -nu * (-k2 * dens) + 2.0 * nu * diss
    res = sum(terms.values())
    field = SpectralField(grid, res, u.time)
    source = "steady" if dudt is None else time_source
    return BalanceReport(field, field.norm(), source, {k: SpectralField(grid, v) for k, v in terms.items()})


def centered_time_derivative(u_prev: SpectralField, u_next: SpectralField, dt: float) -> SpectralField:
    """(u(t+dt) - u(t-dt)) / (2 dt) for adjacent snapshots."""
    check_same_grid(u_prev, u_next)
    if dt <= 0:
        raise ValidationError("dt must be positive")
    return (u_next - u_prev) / (2.0 * dt)


def conserved_quantities(u: SpectralField, B: Optional[SpectralField] = None) -> ConservedSet:
    """Energy int |u|^2 + |B|^2, helicity, cross and magnetic helicity."""
    check_vector(u, "u")
    w = curl(u)
    energy = u.inner(u)
    helicity = u.inner(w)
    cross_h = mag_h = 0.0
    if B is not None:
        check_vector(B, "B")
        check_same_grid(u, B)
        energy += B.inner(B)
        cross_h = u.inner(B)
        mag_h = magnetic_helicity(B)
    return ConservedSet(energy, helicity, cross_h, mag_h)


def magnetic_helicity(B: SpectralField, gauge: Optional[SpectralField] = None) -> float:
    """int A . B with A = vector_potential(B), optionally plus grad(gauge)."""
    div = divergence(B).norm()
    if div > 1e-10 * max(B.norm(), 1e-300) * B.grid.n:
        warnings.warn("B is not divergence-free; magnetic helicity uses its solenoidal part", stacklevel=2)
    c = np.array(B.coeffs)
    c[:, 0, 0, 0] = 0.0
    A = vector_potential(SpectralField(B.grid, c, B.time))
    if gauge is not None:
        A = A + SpectralField(B.grid, grad_coeffs(gauge.coeffs[0], B.grid), B.time)
    return A.inner(B)


def viscous_helicity_dissipation(u: SpectralField, nu: float) -> float:
    """-2 nu int grad u : grad w (exact by Plancherel)."""
    check_vector(u, "u")
    w = curl(u)
    kd = u.grid.derivative_wavenumbers()
    k2 = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
    return float(-2.0 * nu * VOLUME * np.sum((k2 * np.conj(u.coeffs) * w.coeffs).real))
