"""Named initial fields and seeded random corpora."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .field import VOLUME, Grid, SpectralField, reflect
from .operators import gradient, leray_project

PRESETS = ("abc", "taylor_green", "single_mode", "random_decay", "gradient_seed")


def _sampled(grid: Grid, u: np.ndarray) -> SpectralField:
    # trigonometric presets: drop transform roundoff so absent modes are exactly zero
    c = np.array(SpectralField.from_physical(grid, u).coeffs)
    c[np.abs(c) < 1e-13 * np.abs(c).max()] = 0.0
    return SpectralField(grid, c, time=0.0)


def abc(grid: Grid, A: float = 1.0, B: float = 1.0, C: float = 1.0) -> SpectralField:
    """Arnold-Beltrami-Childress flow; curl u = u."""
    x, y, z = grid.mesh()
    u = np.stack(
        (
            A * np.sin(z) + C * np.cos(y),
            B * np.sin(x) + A * np.cos(z),
            C * np.sin(y) + B * np.cos(x),
        )
    )
    return _sampled(grid, u)


def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    x, y, z = grid.mesh()
    u = amplitude * np.stack(
        (np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), np.zeros(grid.shape))
    )
    return _sampled(grid, u)


def single_mode(
    grid: Grid,
    k: Sequence[int] = (1, 0, 0),
    comp: int = 1,
    amplitude: float = 1.0,
    kind: str = "sin",
    ncomp: int = 3,
) -> SpectralField:
    """One Fourier mode, amplitude*sin(k.x) or amplitude*cos(k.x), in component `comp`."""
    k = tuple(int(v) for v in k)
    if len(k) != 3 or any(abs(v) >= grid.n // 2 for v in k):
        raise ValidationError(f"wavevector {k} not resolved on n={grid.n}")
    if not 0 <= comp < ncomp:
        raise ValidationError(f"component {comp} out of range for ncomp={ncomp}")
    if kind not in ("sin", "cos"):
        raise ValidationError("kind must be 'sin' or 'cos'")
    c = np.zeros((ncomp,) + grid.shape, dtype=complex)
    n = grid.n
    plus = tuple(v % n for v in k)
    minus = tuple(-v % n for v in k)
    if kind == "cos":
        c[(comp,) + plus] += 0.5 * amplitude
        c[(comp,) + minus] += 0.5 * amplitude
    elif plus != minus:
        c[(comp,) + plus] += -0.5j * amplitude
        c[(comp,) + minus] += 0.5j * amplitude
    return SpectralField(grid, c, time=0.0)


def random_decay(
    grid: Grid,
    sigma: float = 2.0,
    seed: int = 0,
    kmax: Optional[float] = None,
    kmin: float = 1.0,
    ncomp: int = 3,
    project: bool = True,
    rms: float = 1.0,
) -> SpectralField:
    """Random-phase field with |c_k| proportional to |k|^-sigma on kmin <= |k| <= kmax.

    Phases are odd in k so the field is real without any averaging. Vector
    fields are Leray-projected when `project` is set; the result is scaled to
    the requested root-mean-square value.
    """
    if ncomp not in (1, 3):
        raise ValidationError("ncomp must be 1 or 3")
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 2.0 * np.pi, size=(ncomp,) + grid.shape)
    theta = a - reflect(a)
    kmag = grid.kmag()
    kx, ky, kz = grid.wavenumbers()
    h = grid.n // 2
    inside = (kmag >= kmin) & (np.abs(kx) < h) & (np.abs(ky) < h) & (np.abs(kz) < h)
    if kmax is not None:
        inside &= kmag <= kmax
    amp = np.where(inside, np.where(kmag > 0, kmag, 1.0) ** (-float(sigma)), 0.0)
    c = amp * np.exp(1j * theta)
    f = SpectralField(grid, c, time=0.0)
    if ncomp == 3 and project:
        f = leray_project(f)
    norm = f.norm()
    if norm == 0:
        return f
    return f * (rms * np.sqrt(VOLUME) / norm)


def gradient_seed(grid: Grid, seed: Optional[int] = None, kmax: float = 4.0) -> SpectralField:
    """Pure gradient field: grad(sin x) by default, grad(phi) for a seeded random phi."""
    if seed is None:
        phi = single_mode(grid, (1, 0, 0), comp=0, ncomp=1)
    else:
        phi = random_decay(grid, sigma=1.0, seed=seed, kmax=kmax, ncomp=1)
    return gradient(phi)


def preset_field(name: str, grid: Grid, **params) -> SpectralField:
    """Dispatch by preset name."""
    table = {
        "abc": abc,
        "taylor_green": taylor_green,
        "single_mode": single_mode,
        "random_decay": random_decay,
        "gradient_seed": gradient_seed,
    }
    if name not in table:
        raise ValidationError(f"unknown preset {name!r}; expected one of {PRESETS}")
    try:
        return table[name](grid, **params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for preset {name!r}: {exc}") from None
