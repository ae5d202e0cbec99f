"""Spherical averages, third-order structure functions S1/S2 and the scaling check."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.integrate import lebedev_rule

from .errors import ValidationError
from .field import VOLUME, Grid, SpectralField, bandwidth, check_same_grid, check_vector
from .mollify import MollifierSpec
from .shifts import ShiftEngine

LEBEDEV_ORDERS = (
    3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31, 35,
    41, 47, 53, 59, 65, 71, 77, 83, 89, 95, 101, 107, 113, 119, 125, 131,
)
CONVENTIONS = ("unit", "literal")


@dataclass(frozen=True)
class SphereRule:
    """Unit-sphere nodes with Haar weights (summing to 1), exact up to `degree`."""

    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    @classmethod
    def lebedev(cls, degree: int) -> "SphereRule":
        return _lebedev(int(degree))

    def antipodal(self) -> "SphereRule":
        return SphereRule(-self.nodes, self.weights, self.degree)

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def _lebedev(degree):
    order = next((o for o in LEBEDEV_ORDERS if o >= degree), None)
    if order is None:
        raise ValidationError(f"no Lebedev rule of degree >= {degree}")
    x, w = lebedev_rule(order)
    nodes = np.ascontiguousarray(x.T)
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    weights = w / w.sum()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return SphereRule(nodes, weights, order)


def required_degree(kmax: float, r: float, min_degree: int = 17) -> int:
    """Lebedev degree resolving exp(i k.xi r) for |k| <= kmax to about 1e-14."""
    a = float(kmax) * float(r)
    return max(min_degree, int(np.ceil(1.4 * a + 4.0 * a ** (1.0 / 3.0) + 12)))


def lebedev_for(u: SpectralField, r: float, order: int = 3, min_degree: int = 17) -> SphereRule:
    """Rule for an integrand that is a product of `order` increments of u at radius r."""
    kmax = np.sqrt(3.0) * bandwidth(u.coeffs) * order
    return SphereRule.lebedev(min(131, required_degree(kmax, r, min_degree)))


def _check_radius(r):
    r = float(r)
    if not (0.0 < r < np.pi):
        raise ValidationError(f"radius must lie in (0, pi), got {r}")
    return r


def spherical_average(f: SpectralField, r: float) -> SpectralField:
    """A_r f(x) = mean of f(x - r xi) over the unit sphere, as the multiplier sin(|k|r)/(|k|r)."""
    r = _check_radius(r)
    return SpectralField(f.grid, f.coeffs * np.sinc(f.grid.kmag() * r / np.pi), f.time)


def spherical_average_nodes(f: SpectralField, r: float, rule: SphereRule) -> SpectralField:
    """Same average by node quadrature over the rule; reference path for tests."""
    from .operators import translate_coeffs

    r = _check_radius(r)
    acc = np.zeros_like(f.coeffs)
    for xi, w in zip(rule.nodes, rule.weights):
        acc += w * translate_coeffs(f.coeffs, f.grid, -r * xi)
    return SpectralField(f.grid, acc, f.time)


def _resolve(u, omega):
    from .helicity import resolve_vorticity

    return resolve_vorticity(u, omega, synthetic=omega is not None)


def s1_s2(u: SpectralField, omega: Optional[SpectralField], r: float, rule: SphereRule):
    """S1 = <(du.xi)(dw.du)> and S2 = <(dw.xi)|du|^2> over the sphere at radius r."""
    r = _check_radius(r)
    check_vector(u, "u")
    w = _resolve(u, omega)
    check_same_grid(u, w)
    eng = ShiftEngine([u, w], degree=3)
    u0, w0 = eng.base[:3], eng.base[3:]
    acc1 = np.zeros((eng.m,) * 3)
    acc2 = np.zeros((eng.m,) * 3)
    xis = r * rule.nodes
    for shifted, (nb, wb) in zip(
        (s for s, _ in eng.batches(xis, rule.weights)),
        _chunks(rule.nodes, rule.weights, eng.batch),
    ):
        du = shifted[:, :3] - u0
        dw = shifted[:, 3:] - w0
        du_l = np.einsum("bi,bi...->b...", nb, du)
        dw_l = np.einsum("bi,bi...->b...", nb, dw)
        acc1 += np.tensordot(wb, du_l * np.sum(dw * du, axis=1), axes=(0, 0))
        acc2 += np.tensordot(wb, dw_l * np.sum(du * du, axis=1), axes=(0, 0))
    return eng.finish(acc1[None], u.time), eng.finish(acc2[None], u.time)


def _chunks(nodes, weights, size):
    for start in range(0, len(weights), size):
        yield nodes[start : start + size], weights[start : start + size]


def s1(u: SpectralField, omega: Optional[SpectralField], r: float, rule: SphereRule) -> SpectralField:
    return s1_s2(u, omega, r, rule)[0]


def s2(u: SpectralField, omega: Optional[SpectralField], r: float, rule: SphereRule) -> SpectralField:
    return s1_s2(u, omega, r, rule)[1]


class LTParts(NamedTuple):
    long: np.ndarray
    trans: np.ndarray
    convention: str
    scale: float

    def reconstruct(self) -> np.ndarray:
        return self.long / self.scale + self.trans


def longitudinal_transversal(f_increment, xi, convention: str = "unit") -> LTParts:
    """Split an increment into parts along and across xi.

    convention='unit': long = (f.xi_hat) xi_hat.
    convention='literal': long = (f.xi_hat) xi, so it scales with |xi|.
    trans = f - (f.xi_hat) xi_hat in both cases; reconstruct() undoes the scaling.
    Accepts a SpectralField[3] or an array whose leading axis holds 3 components.
    """
    if convention not in CONVENTIONS:
        raise ValidationError(f"convention must be one of {CONVENTIONS}")
    xi = np.asarray(xi, dtype=float)
    norm = float(np.linalg.norm(xi))
    if norm == 0.0:
        raise ValidationError("xi must be nonzero")
    e = xi / norm
    is_field = isinstance(f_increment, SpectralField)
    data = f_increment.coeffs if is_field else np.asarray(f_increment)
    if data.shape[0] != 3:
        raise ValidationError("increment must have three components")
    proj = np.tensordot(e, data, axes=(0, 0))
    unit_long = e.reshape((3,) + (1,) * (data.ndim - 1)) * proj
    trans = data - unit_long
    scale = norm if convention == "literal" else 1.0
    long = scale * unit_long
    if is_field:
        long = SpectralField(f_increment.grid, long, f_increment.time)
        trans = SpectralField(f_increment.grid, trans, f_increment.time)
    return LTParts(long, trans, convention, scale)


def helical_45_analogue(u: SpectralField, r: float, rule: Optional[SphereRule] = None, convention: str = "unit") -> float:
    """Space and sphere mean of du_L(r xi) . [u_P(x + r xi) x u_P(x)]."""
    r = _check_radius(r)
    check_vector(u, "u")
    if convention not in CONVENTIONS:
        raise ValidationError(f"convention must be one of {CONVENTIONS}")
    if rule is None:
        rule = lebedev_for(u, r)
    eng = ShiftEngine([u], degree=3)
    u0 = eng.base
    total = 0.0
    scale = r if convention == "literal" else 1.0
    for shifted, (nb, wb) in zip(
        (s for s, _ in eng.batches(r * rule.nodes, rule.weights)),
        _chunks(rule.nodes, rule.weights, eng.batch),
    ):
        e = nb[:, :, None, None, None]
        us = shifted
        pu0 = np.einsum("bi,i...->b...", nb, u0)[:, None]
        pus = np.einsum("bi,bi...->b...", nb, us)[:, None]
        p0 = u0[None] - pu0 * e
        ps = us - pus * e
        dl = scale * (pus - pu0) * e
        c = np.cross(ps, p0, axis=1)
        vals = np.sum(dl * c, axis=1).mean(axis=(-3, -2, -1))
        total += float(np.dot(wb, vals))
    return total


def eps_tilde(u: SpectralField, nu: float) -> float:
    """Space mean of nu grad u : grad w."""
    from .helicity import viscous_helicity_dissipation

    return -viscous_helicity_dissipation(u, nu) / (2.0 * VOLUME)


def eps_tilde_window(states: Sequence[SpectralField], nu: float) -> float:
    """Space-time mean of nu grad u : grad w over equally spaced snapshots (trapezoid)."""
    vals = np.array([eps_tilde(s, nu) for s in states])
    if vals.size == 1:
        return float(vals[0])
    return float(np.trapezoid(vals) / (vals.size - 1))


def test_function(grid: Grid, seed: int = 0, kmax: int = 4) -> SpectralField:
    """Seeded real scalar field with modes |k| <= kmax, unit rms, zero mean removed."""
    rng = np.random.default_rng(seed)
    kmag = grid.kmag()
    mask = (kmag <= kmax) & (kmag > 0)
    c = (rng.standard_normal(kmag.shape) + 1j * rng.standard_normal(kmag.shape)) * mask
    f = SpectralField(grid, c[None], symmetrize=True)
    f = SpectralField(grid, f.coeffs + (1.0 + 0j) * (kmag == 0)[None])
    return f / np.sqrt(f.inner(f) / VOLUME)


# keep pytest from collecting the helper above
test_function.__test__ = False


@dataclass
class ScalingPoint:
    eps: float
    lhs: float
    rhs: float
    gap: float
    s1_mean: float
    s2_mean: float
    degree: int


def _mean_against(c, phi):
    return float(np.real(np.sum(c[0] * np.conj(phi.coeffs[0]))))


def scaling_check(
    u: SpectralField,
    eps_list: Sequence[float],
    rule: Optional[SphereRule] = None,
    test: Optional[SpectralField] = None,
    dudt: Optional[SpectralField] = None,
    seed: int = 0,
) -> List[ScalingPoint]:
    """Ball-mollified flux terms against a test function vs 3<S1/eps - S2/(2 eps), test>.

    S1, S2 use the unit (Haar) sphere measure, so the factor 3 equals 3/(4 pi)
    times the surface-measure form. lhs includes d/dt terms when dudt is given.
    """
    from .helicity import local_balance_residual

    check_vector(u, "u")
    phi = test_function(u.grid, seed) if test is None else test
    out = []
    for eps in eps_list:
        eps = float(eps)
        spec = MollifierSpec("ball_indicator", eps)
        rep = local_balance_residual(u, spec, dudt=dudt)
        flux = rep.residual.coeffs - rep.terms["defect"].coeffs
        lhs = _mean_against(flux, phi)
        rl = lebedev_for(u, eps) if rule is None else rule
        a, b = s1_s2(u, None, eps, rl)
        rhs = 3.0 * (_mean_against(a.coeffs, phi) - 0.5 * _mean_against(b.coeffs, phi)) / eps
        scale = max(abs(lhs), abs(rhs))
        gap = abs(lhs - rhs) / scale if scale > 0 else 0.0
        out.append(ScalingPoint(eps, lhs, rhs, gap, float(a.mean()[0]), float(b.mean()[0]), rl.degree))
    return out


@dataclass
class StructureCurve:
    radii: np.ndarray
    s1_mean: np.ndarray
    s2_mean: np.ndarray
    lhs: np.ndarray = field(default=None)
    rhs: np.ndarray = field(default=None)
    gap: np.ndarray = field(default=None)
    fields: Optional[list] = field(default=None, repr=False)

    COLUMNS = ("r", "s1_mean", "s2_mean", "combined", "lhs", "rhs", "gap")

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        if self.radii.size and (np.any(np.diff(self.radii) <= 0) or self.radii[0] <= 0 or self.radii[-1] >= np.pi):
            raise ValidationError("radii must be strictly increasing inside (0, pi)")
        nanfill = np.full(self.radii.shape, np.nan)
        self.s1_mean = np.asarray(self.s1_mean, dtype=float)
        self.s2_mean = np.asarray(self.s2_mean, dtype=float)
        for name in ("lhs", "rhs", "gap"):
            v = getattr(self, name)
            setattr(self, name, nanfill.copy() if v is None else np.asarray(v, dtype=float))

    @property
    def combined(self) -> np.ndarray:
        return (self.s1_mean - 0.5 * self.s2_mean) / self.radii

    def rows(self):
        for i, r in enumerate(self.radii):
            yield (r, self.s1_mean[i], self.s2_mean[i], self.combined[i], self.lhs[i], self.rhs[i], self.gap[i])

    def to_csv(self, path, header_comment: Optional[str] = None):
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])


def structure_curve(
    u: SpectralField, radii: Sequence[float], rule: Optional[SphereRule] = None, keep_fields: bool = False
) -> StructureCurve:
    """Spatial means of S1, S2 over a list of radii."""
    a_means, b_means, kept = [], [], []
    for r in radii:
        a, b = s1_s2(u, None, r, lebedev_for(u, r) if rule is None else rule)
        a_means.append(float(a.mean()[0]))
        b_means.append(float(b.mean()[0]))
        if keep_fields:
            kept.append((a, b))
    return StructureCurve(np.asarray(radii, dtype=float), a_means, b_means, fields=kept or None)
