"""Spectral fields on the periodic box [0, 2pi)^3.

Coefficients follow f(x) = sum_k c_k exp(i k.x) and are stored in full
complex form in standard FFT order, one (n, n, n) block per component.
Physical transforms go through the real-to-complex FFT on the half spectrum.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft

from .errors import ValidationError

TWO_PI = 2.0 * np.pi
VOLUME = TWO_PI**3
DEALIAS_MODES = ("three_halves_padding", "two_thirds", "none")


def fft_workers() -> int:
    """Worker count for FFTs, capped by the HLX_THREADS environment variable."""
    raw = os.environ.get("HLX_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    n: int
    dealias_mode: str = "three_halves_padding"

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise ValidationError(f"grid size must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise ValidationError(f"grid size must be a power of two >= 8, got {n}")
        if self.dealias_mode not in DEALIAS_MODES:
            raise ValidationError(
                f"unknown dealias mode {self.dealias_mode!r}; expected one of {DEALIAS_MODES}"
            )
        object.__setattr__(self, "n", int(n))

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @property
    def shape(self) -> tuple:
        return (self.n, self.n, self.n)

    def coords(self) -> np.ndarray:
        """Collocation points x_i = 2 pi i / n along one axis."""
        return self.spacing * np.arange(self.n)

    def mesh(self) -> np.ndarray:
        """Stacked coordinate arrays of shape (3, n, n, n)."""
        x = self.coords()
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))

    def wavenumbers(self):
        """Integer wavevector components as broadcastable arrays."""
        return _wavenumbers(self.n)

    def derivative_wavenumbers(self):
        """Wavevector components with the Nyquist entry zeroed."""
        return _derivative_wavenumbers(self.n)

    def k2(self) -> np.ndarray:
        """|k|^2 over the full grid."""
        return _k2(self.n)

    def kmag(self) -> np.ndarray:
        return _kmag(self.n)

    def product_size(self, order: int = 2) -> int:
        """Physical grid size for an alias-free product of `order` factors."""
        if self.dealias_mode != "three_halves_padding" or order <= 1:
            return self.n
        m = -(-(order + 1) * self.n // 2)
        return m + (m % 2)

    def dealias_mask(self) -> np.ndarray:
        """Boolean mask of modes kept by the two-thirds rule."""
        return _two_thirds_mask(self.n)


@lru_cache(maxsize=None)
def _wavenumbers(n):
    k = np.fft.fftfreq(n, 1.0 / n)
    k.flags.writeable = False
    return (k.reshape(n, 1, 1), k.reshape(1, n, 1), k.reshape(1, 1, n))


@lru_cache(maxsize=None)
def _derivative_wavenumbers(n):
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = 0.0
    k.flags.writeable = False
    return (k.reshape(n, 1, 1), k.reshape(1, n, 1), k.reshape(1, 1, n))


@lru_cache(maxsize=None)
def _k2(n):
    kx, ky, kz = _wavenumbers(n)
    out = kx**2 + ky**2 + kz**2
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def _kmag(n):
    out = np.sqrt(_k2(n))
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def _two_thirds_mask(n):
    kx, ky, kz = _wavenumbers(n)
    cut = n / 3.0
    out = (np.abs(kx) < cut) & (np.abs(ky) < cut) & (np.abs(kz) < cut)
    out.flags.writeable = False
    return out


def reflect(c: np.ndarray) -> np.ndarray:
    """Array indexed by -k: out[..., k] = c[..., -k mod n]."""
    axes = (-3, -2, -1)
    return np.roll(np.flip(c, axis=axes), 1, axis=axes)


def hermitian_part(c: np.ndarray) -> np.ndarray:
    """Coefficients of the real part of the field described by c."""
    return 0.5 * (c + np.conj(reflect(c)))


def hermitian_defect(c: np.ndarray) -> float:
    """max |c(k) - conj(c(-k))|, zero for a real field."""
    if c.size == 0:
        return 0.0
    return float(np.max(np.abs(c - np.conj(reflect(c)))))


def _symmetrize_plane(full, idx):
    # planes with k3 = 0 or k3 = n/2 are their own reflection in the last axis
    p = full[..., idx]
    flipped = np.roll(np.flip(p, axis=(-2, -1)), 1, axis=(-2, -1))
    full[..., idx] = 0.5 * (p + np.conj(flipped))


def _band_slices(b, size):
    return (slice(0, b + 1), slice(size - b, size))


def to_physical(coeffs: np.ndarray, m: Optional[int] = None, band: Optional[int] = None) -> np.ndarray:
    """Sample a field given by full coefficients on an m^3 grid.

    Only modes with |k_i| <= band are used (default n/2 - 1 when m != n). The
    Nyquist modes are therefore dropped for padded grids, which matches the
    truncation used by every padded product. With band set, m may be smaller
    than n as long as it resolves the band.
    """
    n = coeffs.shape[-1]
    m = n if m is None else m
    if m == n and band is None:
        half = coeffs[..., : n // 2 + 1]
    else:
        b = n // 2 - 1 if band is None else int(band)
        if b > n // 2 - 1 or 2 * b + 1 > m:
            raise ValidationError(f"band {b} not representable with n={n}, m={m}")
        half = np.zeros(coeffs.shape[:-3] + (m, m, m // 2 + 1), dtype=complex)
        src = _band_slices(b, n)
        dst = _band_slices(b, m)
        for s0, d0 in zip(src, dst):
            for s1, d1 in zip(src, dst):
                half[..., d0, d1, : b + 1] = coeffs[..., s0, s1, : b + 1]
    return sfft.irfftn(half, s=(m, m, m), axes=(-3, -2, -1), norm="forward", workers=fft_workers())


def to_spectral(samples: np.ndarray, n: Optional[int] = None, band: Optional[int] = None) -> np.ndarray:
    """Full coefficients (n^3 per component) of real samples on an m^3 grid.

    Modes with |k_i| <= band are kept (default n/2 - 1 when m != n).
    """
    m = samples.shape[-1]
    n = m if n is None else n
    half = sfft.rfftn(samples, axes=(-3, -2, -1), norm="forward", workers=fft_workers())
    full = np.zeros(samples.shape[:-3] + (n, n, n), dtype=complex)
    if m == n and band is None:
        h = n // 2
        full[..., : h + 1] = half
        _symmetrize_plane(full, 0)
        _symmetrize_plane(full, h)
        b = h - 1
    else:
        b = n // 2 - 1 if band is None else int(band)
        if b > n // 2 - 1 or 2 * b + 1 > m:
            raise ValidationError(f"band {b} not representable with n={n}, m={m}")
        src = _band_slices(b, m)
        dst = _band_slices(b, n)
        for s0, d0 in zip(src, dst):
            for s1, d1 in zip(src, dst):
                full[..., d0, d1, : b + 1] = half[..., s0, s1, : b + 1]
        _symmetrize_plane(full, 0)
    # negative k3 from Hermitian symmetry
    pos = full[..., 1 : b + 1]
    neg = np.conj(np.roll(np.flip(pos, axis=(-3, -2)), 1, axis=(-3, -2)))
    full[..., n - b :] = neg[..., ::-1]
    return full


def bandwidth(coeffs: np.ndarray, rel_tol: float = 1e-14) -> int:
    """Largest |k_i| carrying a coefficient above rel_tol * max |c|."""
    a = np.abs(coeffs)
    if a.ndim == 4:
        a = a.max(axis=0)
    top = a.max() if a.size else 0.0
    if top == 0:
        return 0
    n = a.shape[-1]
    k = np.abs(np.fft.fftfreq(n, 1.0 / n)).astype(int)
    live = a > rel_tol * top
    return int(
        max(
            k[np.any(live, axis=(1, 2))].max(),
            k[np.any(live, axis=(0, 2))].max(),
            k[np.any(live, axis=(0, 1))].max(),
        )
    )


class SpectralField:
    """Fourier coefficients of a real scalar (ncomp=1) or vector (ncomp=3) field."""

    __slots__ = ("grid", "coeffs", "time")

    def __init__(self, grid: Grid, coeffs, time: Optional[float] = None, symmetrize: bool = False):
        if not isinstance(grid, Grid):
            raise ValidationError("grid must be a Grid")
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 3:
            c = c[None]
        if c.ndim != 4 or c.shape[1:] != grid.shape:
            raise ValidationError(f"coefficient shape {c.shape} does not match grid n={grid.n}")
        if c.shape[0] not in (1, 3):
            raise ValidationError(f"component count must be 1 or 3, got {c.shape[0]}")
        if not np.all(np.isfinite(c)):
            raise ValidationError("coefficients contain non-finite values")
        if symmetrize:
            c = hermitian_part(c)
        c.flags.writeable = False
        self.grid = grid
        self.coeffs = c
        self.time = None if time is None else float(time)

    @classmethod
    def zeros(cls, grid: Grid, ncomp: int = 3, time=None) -> "SpectralField":
        return cls(grid, np.zeros((ncomp,) + grid.shape, dtype=complex), time)

    @classmethod
    def from_physical(cls, grid: Grid, samples, time=None) -> "SpectralField":
        s = np.asarray(samples, dtype=float)
        if s.ndim == 3:
            s = s[None]
        if s.shape[1:] != grid.shape:
            raise ValidationError(f"sample shape {s.shape} does not match grid n={grid.n}")
        return cls(grid, to_spectral(s), time)

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n(self) -> int:
        return self.grid.n

    def physical(self, m: Optional[int] = None) -> np.ndarray:
        """Real samples, shape (ncomp, m, m, m)."""
        return to_physical(self.coeffs, m)

    def to_physical_field(self) -> "PhysicalField":
        return PhysicalField(self.grid, self.physical())

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs[i : i + 1], self.time)

    def with_time(self, time) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs, time)

    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0, 0, 0].real.copy()

    def is_mean_free(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs[:, 0, 0, 0]) <= tol))

    def norm(self) -> float:
        """L2 norm over the box."""
        return float(np.sqrt(VOLUME * np.sum(np.abs(self.coeffs) ** 2)))

    def inner(self, other: "SpectralField") -> float:
        """Integral of the pointwise (dot) product over the box."""
        check_same_grid(self, other)
        if self.ncomp != other.ncomp:
            raise ValidationError("inner product needs equal component counts")
        return float(VOLUME * np.sum((np.conj(self.coeffs) * other.coeffs).real))

    def _wrap(self, coeffs):
        return SpectralField(self.grid, coeffs, self.time)

    def __add__(self, other):
        if isinstance(other, SpectralField):
            check_same_grid(self, other)
            return self._wrap(self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            check_same_grid(self, other)
            return self._wrap(self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __mul__(self, scalar):
        if np.isscalar(scalar) and np.isreal(scalar):
            return self._wrap(float(scalar) * self.coeffs)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if np.isscalar(scalar) and np.isreal(scalar):
            return self._wrap(self.coeffs / float(scalar))
        return NotImplemented

    def __repr__(self):
        return f"SpectralField(n={self.n}, ncomp={self.ncomp}, time={self.time})"


@dataclass(frozen=True)
class PhysicalField:
    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 3:
            s = s[None]
        if s.shape[1:] != self.grid.shape:
            raise ValidationError(f"sample shape {s.shape} does not match grid n={self.grid.n}")
        object.__setattr__(self, "samples", s)

    @property
    def ncomp(self) -> int:
        return self.samples.shape[0]

    def to_spectral(self, time=None) -> SpectralField:
        return SpectralField.from_physical(self.grid, self.samples, time)

    def inner(self, other: "PhysicalField") -> float:
        """Grid quadrature of the pointwise product."""
        return float(np.sum(self.samples * other.samples) * self.grid.spacing**3)


def check_same_grid(*fields):
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid.n != grid.n:
            raise ValidationError(f"grid mismatch: n={grid.n} vs n={f.grid.n}")


def check_vector(f: SpectralField, name: str = "field"):
    if not isinstance(f, SpectralField):
        raise ValidationError(f"{name} must be a SpectralField")
    if f.ncomp != 3:
        raise ValidationError(f"{name} must have 3 components, got {f.ncomp}")


def pointwise_coeffs(fn: Callable, coeff_list, grid: Grid, order: Optional[int] = None) -> np.ndarray:
    """Array version of `pointwise`: inputs and output are coefficient stacks
    with any number of components."""
    order = len(coeff_list) if order is None else order
    m = grid.product_size(order)
    arrays = [to_physical(c, m) for c in coeff_list]
    out = np.asarray(fn(*arrays), dtype=float)
    if out.ndim == 3:
        out = out[None]
    coeffs = to_spectral(out, grid.n)
    if grid.dealias_mode == "two_thirds":
        coeffs = coeffs * grid.dealias_mask()
    return coeffs


def pointwise(fn: Callable, *fields: SpectralField, order: Optional[int] = None) -> SpectralField:
    """Evaluate fn on physical samples of `fields` and return the truncated result.

    The sampling grid follows the dealias mode of the first field's grid; with
    three_halves_padding it is large enough for an alias-free product of
    `order` factors (defaults to the number of fields).
    """
    check_same_grid(*fields)
    grid = fields[0].grid
    coeffs = pointwise_coeffs(fn, [f.coeffs for f in fields], grid, order)
    return SpectralField(grid, coeffs, fields[0].time)


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("i...,i...->...", a, b)


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(
        (
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        )
    )
