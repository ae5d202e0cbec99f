"""Littlewood-Paley blocks, Besov norms and empirical rate/bound harnesses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .errors import ValidationError
from .field import Grid, SpectralField, check_same_grid, pointwise
from .operators import translate

INF = float("inf")


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        for name in ("p", "q"):
            v = float(getattr(self, name))
            if not (v >= 1.0):
                raise ValidationError(f"{name} must be >= 1 or inf, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "s", float(self.s))


@dataclass
class DyadicDecomposition:
    low_block: SpectralField
    blocks: List[SpectralField]

    def reconstruct(self) -> SpectralField:
        out = self.low_block
        for b in self.blocks:
            out = out + b
        return out


@dataclass
class RateFit:
    slope: float
    target: float
    xs: np.ndarray
    ys: np.ndarray = field(repr=False)

    def __float__(self):
        return float(self.slope)


def shell_index(grid: Grid) -> np.ndarray:
    """Block label per mode: -1 for k = 0, j for 2^j <= |k| < 2^(j+1)."""
    kmag = grid.kmag()
    out = np.full(kmag.shape, -1, dtype=int)
    nz = kmag >= 1.0
    out[nz] = np.floor(np.log2(kmag[nz]) + 1e-12).astype(int)
    return out


def dyadic_blocks(f: SpectralField) -> DyadicDecomposition:
    """Sharp-shell partition of the modes of f."""
    labels = shell_index(f.grid)
    low = SpectralField(f.grid, f.coeffs * (labels == -1), f.time)
    blocks = [
        SpectralField(f.grid, f.coeffs * (labels == j), f.time) for j in range(int(labels.max()) + 1)
    ]
    return DyadicDecomposition(low, blocks)


def lp_norm(f: SpectralField, p: float) -> float:
    """L^p norm of |f(x)| over the box; grid quadrature unless p is 2."""
    p = float(p)
    if p == 2.0:
        return f.norm()
    x = f.physical()
    mag = np.sqrt(np.sum(x * x, axis=0)) if f.ncomp > 1 else np.abs(x[0])
    if p == INF:
        return float(mag.max())
    h3 = f.grid.spacing**3
    return float((np.sum(mag**p) * h3) ** (1.0 / p))


def besov_norm(f: SpectralField, params: BesovParams) -> float:
    """||D_{-1} f||_p + (sum_j (2^{sj} ||D_j f||_p)^q)^{1/q}, sup for q = inf."""
    dec = dyadic_blocks(f)
    low = lp_norm(dec.low_block, params.p)
    terms = np.array(
        [2.0 ** (params.s * j) * lp_norm(b, params.p) for j, b in enumerate(dec.blocks)]
    )
    if terms.size == 0:
        return low
    if params.q == INF:
        return float(low + terms.max())
    return float(low + np.sum(terms**params.q) ** (1.0 / params.q))


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x (nan if any y vanishes)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def default_directions() -> np.ndarray:
    """Coordinate axes and the cube diagonals."""
    d = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1), (1, -1, 1), (-1, 1, 1), (1, 1, -1)]
    d = np.array(d, dtype=float)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def check_increment_radii(radii, n: int) -> np.ndarray:
    r = np.sort(np.asarray(radii, dtype=float))
    lo, hi = np.pi / (2 * n), np.pi / 4
    if r.size < 3:
        raise ValidationError("need at least three radii")
    if r[0] < lo * (1 - 1e-9) or r[-1] > hi * (1 + 1e-9):
        raise ValidationError(f"radii must lie in [{lo:.4g}, {hi:.4g}] for n={n}")
    if np.log10(r[-1] / r[0]) < 1.5 - 1e-9:
        raise ValidationError("radii must span at least 1.5 decades")
    return r


def increment_norms(f: SpectralField, s: float, p: float, directions, radii) -> np.ndarray:
    """Direction-averaged ||delta f(r e)||_{B^s_{p,inf}} per radius."""
    params = BesovParams(s, p, INF)
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    out = []
    for r in radii:
        vals = [besov_norm(translate(f, r * d) - f, params) for d in dirs]
        out.append(np.mean(vals))
    return np.array(out)


def increment_rate_fit(
    f: SpectralField, s: float, eps_exponent: float, p: float = 2.0, directions=None, radii=None
) -> RateFit:
    """Fit ||delta f(xi)||_{B^s_{p,inf}} ~ |xi|^slope; target is eps_exponent."""
    n = f.grid.n
    if radii is None:
        radii = np.geomspace(np.pi / (2 * n), np.pi / 4, 9)
    r = check_increment_radii(radii, n)
    dirs = default_directions() if directions is None else directions
    ys = increment_norms(f, s, p, dirs, r)
    return RateFit(loglog_slope(r, ys), float(eps_exponent), r, ys)


def _inv(p):
    return 0.0 if p == INF else 1.0 / p


def paraproduct_ratio(
    f: SpectralField,
    g: SpectralField,
    out_params: BesovParams,
    f_params: BesovParams,
    g_params: BesovParams,
) -> float:
    """||fg||_out / (||f||_f ||g||_g), defined as 0 when a factor vanishes."""
    check_same_grid(f, g)
    if abs(_inv(out_params.p) - _inv(f_params.p) - _inv(g_params.p)) > 1e-12:
        raise ValidationError("integrability exponents must satisfy 1/p = 1/p1 + 1/p2")
    if f.ncomp != 1 and g.ncomp != 1:
        raise ValidationError("at least one factor must be scalar")
    nf = besov_norm(f, f_params)
    ng = besov_norm(g, g_params)
    if nf == 0.0 or ng == 0.0:
        return 0.0
    prod = pointwise(lambda a, b: a * b, f, g)
    return besov_norm(prod, out_params) / (nf * ng)


def paraproduct_corpus(
    grid: Grid,
    seeds: Sequence[int],
    alpha: float = 0.6,
    beta: float = -0.3,
    p1: float = 4.0,
    p2: float = 4.0,
    q: float = INF,
) -> np.ndarray:
    """Ratios for f in B^alpha_{p1,q}, g in B^beta_{p2,q}, fg measured in B^beta_{p,q}."""
    from .presets import random_decay

    p = 1.0 / (_inv(p1) + _inv(p2))
    out = []
    for seed in seeds:
        f = random_decay(grid, sigma=1.5 + alpha, seed=2 * seed, ncomp=1)
        g = random_decay(grid, sigma=1.5 + beta, seed=2 * seed + 1, ncomp=1)
        out.append(
            paraproduct_ratio(
                f, g, BesovParams(beta, p, q), BesovParams(alpha, p1, q), BesovParams(beta, p2, q)
            )
        )
    return np.array(out)


def synthetic_sigma(regularity: float) -> float:
    """Spectral decay exponent giving ||D_j f||_2 ~ 2^(-regularity j) in 3D."""
    return 1.5 + regularity

