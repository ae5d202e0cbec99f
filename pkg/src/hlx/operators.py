"""Exact spectral differential and inverse operators."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import ValidationError
from .field import SpectralField, check_same_grid, check_vector, cross, pointwise, pointwise_coeffs

DIV_TOL = 1e-10


def _kd(grid):
    return grid.derivative_wavenumbers()


def _inv_k2(grid):
    kx, ky, kz = _kd(grid)
    k2 = kx**2 + ky**2 + kz**2
    with np.errstate(divide="ignore"):
        inv = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    return inv


def curl_coeffs(c: np.ndarray, grid) -> np.ndarray:
    kx, ky, kz = _kd(grid)
    return 1j * np.stack(
        (ky * c[2] - kz * c[1], kz * c[0] - kx * c[2], kx * c[1] - ky * c[0])
    )


def div_coeffs(c: np.ndarray, grid) -> np.ndarray:
    kx, ky, kz = _kd(grid)
    return 1j * (kx * c[0] + ky * c[1] + kz * c[2])


def grad_coeffs(c: np.ndarray, grid) -> np.ndarray:
    kx, ky, kz = _kd(grid)
    return 1j * np.stack((kx * c, ky * c, kz * c))


def leray_coeffs(c: np.ndarray, grid) -> np.ndarray:
    kx, ky, kz = _kd(grid)
    kdotc = (kx * c[0] + ky * c[1] + kz * c[2]) * _inv_k2(grid)
    return np.stack((c[0] - kx * kdotc, c[1] - ky * kdotc, c[2] - kz * kdotc))


def curl(f: SpectralField) -> SpectralField:
    """Spectral curl ik x f."""
    check_vector(f)
    return SpectralField(f.grid, curl_coeffs(f.coeffs, f.grid), f.time)


def divergence(f: SpectralField) -> SpectralField:
    check_vector(f)
    return SpectralField(f.grid, div_coeffs(f.coeffs, f.grid), f.time)


def gradient(f: SpectralField) -> SpectralField:
    if f.ncomp != 1:
        raise ValidationError("gradient expects a scalar field")
    return SpectralField(f.grid, grad_coeffs(f.coeffs[0], f.grid), f.time)


def jacobian(f: SpectralField) -> list:
    """[d_j f for j = 0, 1, 2], each with the component count of f."""
    kd = _kd(f.grid)
    return [SpectralField(f.grid, 1j * k * f.coeffs, f.time) for k in kd]


def laplacian(f: SpectralField) -> SpectralField:
    kx, ky, kz = _kd(f.grid)
    return SpectralField(f.grid, -(kx**2 + ky**2 + kz**2) * f.coeffs, f.time)


def inverse_laplacian(f: SpectralField) -> SpectralField:
    """(-Delta)^{-1} with the k = 0 mode set to zero."""
    return SpectralField(f.grid, _inv_k2(f.grid) * f.coeffs, f.time)


def _check_mean_free(f, name):
    scale = max(f.norm(), 1.0)
    if np.max(np.abs(f.coeffs[:, 0, 0, 0])) > 1e-12 * scale:
        raise ValidationError(f"{name} must be mean-free")


def _check_div_free(f, name, tol):
    scale = max(f.norm(), 1e-300)
    if divergence(f).norm() > tol * scale * f.grid.n:
        raise ValidationError(f"{name} is not divergence-free to tolerance {tol}")


def biot_savart(omega: SpectralField, tol: float = DIV_TOL) -> SpectralField:
    """Velocity u = curl (-Delta)^{-1} omega of a mean-free solenoidal vorticity."""
    check_vector(omega, "omega")
    _check_mean_free(omega, "omega")
    _check_div_free(omega, "omega", tol)
    c = curl_coeffs(omega.coeffs, omega.grid) * _inv_k2(omega.grid)
    return SpectralField(omega.grid, c, omega.time)


def vector_potential(B: SpectralField) -> SpectralField:
    """Divergence-free A = curl (-Delta)^{-1} B.

    For B with nonzero divergence only its solenoidal part is recovered.
    """
    check_vector(B, "B")
    _check_mean_free(B, "B")
    c = curl_coeffs(B.coeffs, B.grid) * _inv_k2(B.grid)
    return SpectralField(B.grid, c, B.time)


def leray_project(f: SpectralField) -> SpectralField:
    check_vector(f)
    return SpectralField(f.grid, leray_coeffs(f.coeffs, f.grid), f.time)


def _outer_div_source(u_phys, b_phys=None):
    # returns the six independent entries of u (x) u - B (x) B
    pairs = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
    out = np.stack([u_phys[i] * u_phys[j] for i, j in pairs])
    if b_phys is not None:
        out -= np.stack([b_phys[i] * b_phys[j] for i, j in pairs])
    return out


def pressure_solve(u: SpectralField, B: Optional[SpectralField] = None) -> SpectralField:
    """Mean-free p with -Delta p = d_i d_j (u_i u_j - B_i B_j)."""
    check_vector(u, "u")
    grid = u.grid
    if B is None:
        t = pointwise_coeffs(_outer_div_source, [u.coeffs], grid, order=2)
    else:
        check_vector(B, "B")
        check_same_grid(u, B)
        t = pointwise_coeffs(_outer_div_source, [u.coeffs, B.coeffs], grid, order=2)
    kx, ky, kz = _kd(grid)
    k = (kx, ky, kz)
    pairs = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
    src = np.zeros(grid.shape, dtype=complex)
    for idx, (i, j) in enumerate(pairs):
        w = 1.0 if i == j else 2.0
        src = src - w * k[i] * k[j] * t[idx]
    return SpectralField(grid, src * _inv_k2(grid), u.time)


def translate_coeffs(c: np.ndarray, grid, xi) -> np.ndarray:
    """Coefficients of f(x + xi)."""
    kx, ky, kz = _kd(grid)
    phase = np.exp(1j * (kx * xi[0])) * np.exp(1j * (ky * xi[1])) * np.exp(1j * (kz * xi[2]))
    return c * phase


def translate(f: SpectralField, xi) -> SpectralField:
    """Shifted field x -> f(x + xi) via phase factors."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (3,):
        raise ValidationError("shift must be a 3-vector")
    return SpectralField(f.grid, translate_coeffs(f.coeffs, f.grid, xi), f.time)


def increment(f: SpectralField, xi) -> SpectralField:
    """delta f(xi; x) = f(x + xi) - f(x)."""
    return translate(f, xi) - f


def cross_product(a: SpectralField, b: SpectralField) -> SpectralField:
    check_vector(a)
    check_vector(b)
    return pointwise(cross, a, b)


def dot_product(a: SpectralField, b: SpectralField) -> SpectralField:
    return pointwise(lambda x, y: np.sum(x * y, axis=0), a, b)
