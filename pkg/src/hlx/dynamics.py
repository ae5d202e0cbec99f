"""Fourier-Galerkin time integration for Euler, Navier-Stokes, MHD and the kinematic dynamo.

State vectors are stacks of full-complex coefficient arrays. The velocity
equation is Leray-projected; the magnetic equation is not, so div B evolves
according to the truncated dynamics. Linear diffusion is integrated exactly
(Lawson integrating-factor RK4) or by Crank-Nicolson (imex_cn).
"""

from __future__ import annotations

import csv
import logging
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .besov import RateFit, loglog_slope
from .errors import CFLError, NumericalError, ValidationError
from .field import VOLUME, Grid, SpectralField, check_vector, cross, fft_workers, pointwise, pointwise_coeffs
from .mollify import MollifierSpec, mollify
from .operators import _inv_k2, curl_coeffs, div_coeffs, leray_coeffs

log = logging.getLogger(__name__)

MODELS = ("euler", "nse", "mhd", "ideal_mhd", "dynamo")
INTEGRATORS = ("rk4_integrating_factor", "imex_cn")
CFL_LIMIT = 0.5

DIAG_FIELDS = (
    "t",
    "energy",
    "helicity",
    "cross_helicity",
    "magnetic_helicity",
    "divb_l2",
    "grad_divb_l2",
    "dissipation",
    "visc_u",
    "visc_b",
    "coupling",
)

Source = Union[SpectralField, Callable[[float], SpectralField]]


def periodic_source(u0: SpectralField, omega: float = 1.0) -> Callable[[float], SpectralField]:
    """Time-periodic velocity u0 cos(omega t) for the dynamo model."""
    check_vector(u0, "u0")

    def source(t):
        return u0 * float(np.cos(omega * t))

    return source


@dataclass(frozen=True)
class DynConfig:
    grid: Grid
    model: str = "euler"
    dt: float = 1e-3
    t_end: float = 1.0
    integrator: str = "rk4_integrating_factor"
    nu1: float = 0.0
    nu2: float = 0.0
    u_source: Optional[Source] = None
    snapshot_stride: int = 0
    diag_stride: int = 1
    dump_dir: Optional[str] = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValidationError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.integrator not in INTEGRATORS:
            raise ValidationError(f"unknown integrator {self.integrator!r}; expected one of {INTEGRATORS}")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not (self.t_end >= 0):
            raise ValidationError(f"t_end must be non-negative, got {self.t_end}")
        if self.nu1 < 0 or self.nu2 < 0:
            raise ValidationError("viscosities must be non-negative")
        if self.model in ("euler", "ideal_mhd") and (self.nu1 or self.nu2):
            raise ValidationError(f"model {self.model} is inviscid; use nse or mhd")
        if self.model == "dynamo" and self.u_source is None:
            raise ValidationError("dynamo model needs u_source")
        for name in ("snapshot_stride", "diag_stride"):
            if int(getattr(self, name)) < 0:
                raise ValidationError(f"{name} must be >= 0")

    @property
    def has_b(self) -> bool:
        return self.model in ("mhd", "ideal_mhd", "dynamo")

    @property
    def nsteps(self) -> int:
        return int(round(self.t_end / self.dt))

    def source_at(self, t: float) -> SpectralField:
        src = self.u_source
        return src(t) if callable(src) else src


@dataclass(frozen=True)
class DynState:
    u_hat: SpectralField
    b_hat: Optional[SpectralField] = None
    t: float = 0.0

    def __post_init__(self):
        check_vector(self.u_hat, "u_hat")
        if self.b_hat is not None:
            check_vector(self.b_hat, "b_hat")
            if self.b_hat.grid != self.u_hat.grid:
                raise ValidationError("u and B live on different grids")

    @property
    def grid(self) -> Grid:
        return self.u_hat.grid


@dataclass
class DiagSeries:
    columns: dict = field(default_factory=lambda: {k: [] for k in DIAG_FIELDS})
    nu1: float = 0.0
    nu2: float = 0.0

    def append(self, record: dict):
        t = self.columns["t"]
        if t and not record["t"] > t[-1]:
            raise ValidationError("diagnostic timestamps must be strictly increasing")
        for k in DIAG_FIELDS:
            self.columns[k].append(float(record[k]))

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, name) -> np.ndarray:
        return np.asarray(self.columns[name])

    def rows(self):
        for i in range(len(self)):
            yield tuple(self.columns[k][i] for k in DIAG_FIELDS)

    def to_csv(self, path, header_comment: Optional[str] = None):
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh)
            w.writerow(DIAG_FIELDS)
            for row in self.rows():
                w.writerow([repr(v) for v in row])


def _energy_like(c, k2=None):
    w = 1.0 if k2 is None else k2
    return float(VOLUME * np.sum(w * (c.real**2 + c.imag**2)))


def diagnostics(state: DynState, config: DynConfig) -> dict:
    """All DiagSeries quantities for one state."""
    grid = state.grid
    kd = grid.derivative_wavenumbers()
    k2d = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
    uc = state.u_hat.coeffs
    wc = curl_coeffs(uc, grid)
    rec = dict.fromkeys(DIAG_FIELDS, 0.0)
    rec["t"] = state.t
    rec["energy"] = _energy_like(uc)
    rec["helicity"] = float(VOLUME * np.sum((np.conj(uc) * wc).real))
    rec["dissipation"] = float(-2.0 * config.nu1 * VOLUME * np.sum((k2d * np.conj(uc) * wc).real))
    rec["visc_u"] = config.nu1 * _energy_like(uc, k2d)
    if state.b_hat is not None:
        bc = state.b_hat.coeffs
        dc = div_coeffs(bc, grid)
        rec["energy"] += _energy_like(bc)
        rec["cross_helicity"] = float(VOLUME * np.sum((np.conj(uc) * bc).real))
        a = curl_coeffs(bc, grid) * _inv_k2(grid)
        rec["magnetic_helicity"] = float(VOLUME * np.sum((np.conj(a) * bc).real))
        rec["divb_l2"] = np.sqrt(_energy_like(dc))
        rec["grad_divb_l2"] = np.sqrt(_energy_like(dc, k2d))
        rec["visc_b"] = config.nu2 * _energy_like(bc, k2d)
        ub = pointwise_coeffs(lambda a_, b_: np.sum(a_ * b_, axis=0), [uc, bc], grid, order=2)
        rec["coupling"] = float(VOLUME * np.sum((np.conj(ub[0]) * dc).real))
    return rec


def _cross(a, b):
    return np.stack(
        (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
    )


class _System:
    """Right-hand side and linear operator for one model on one grid."""

    def __init__(self, config: DynConfig):
        self.config = config
        self.grid = g = config.grid
        k2 = g.k2()
        model = config.model
        if model in ("euler", "nse"):
            self.rates = [config.nu1]
        elif model == "dynamo":
            self.rates = [config.nu2]
        else:
            self.rates = [config.nu1, config.nu2]
        self.lin = np.concatenate([np.broadcast_to(-nu * k2, (3,) + g.shape) for nu in self.rates])

    def pack(self, state: DynState) -> np.ndarray:
        if self.config.model == "dynamo":
            return np.array(state.b_hat.coeffs)
        if self.config.has_b:
            return np.concatenate((state.u_hat.coeffs, state.b_hat.coeffs))
        return np.array(state.u_hat.coeffs)

    def unpack(self, y: np.ndarray, t: float, like: DynState) -> DynState:
        g = self.grid
        if self.config.model == "dynamo":
            return DynState(self.config.source_at(t).with_time(t), SpectralField(g, y, t), t)
        if self.config.has_b:
            return DynState(SpectralField(g, y[:3], t), SpectralField(g, y[3:], t), t)
        return DynState(SpectralField(g, y, t), None, t)

    def rhs(self, y: np.ndarray, t: float) -> np.ndarray:
        g = self.grid
        model = self.config.model
        if model in ("euler", "nse"):
            w = curl_coeffs(y, g)
            nl = pointwise_coeffs(_cross, [y, w], g, order=2)
            return leray_coeffs(nl, g)
        if model == "dynamo":
            u = self.config.source_at(t).coeffs
            return curl_coeffs(pointwise_coeffs(_cross, [u, y], g, order=2), g)
        u, b = y[:3], y[3:]
        w = curl_coeffs(u, g)
        j = curl_coeffs(b, g)
        d = div_coeffs(b, g)[None]

        def fn(u_, w_, b_, j_, d_):
            return np.concatenate((_cross(u_, w_) + _cross(j_, b_), _cross(u_, b_), u_ * d_[0]))

        prod = pointwise_coeffs(fn, [u, w, b, j, d], g, order=2)
        du = leray_coeffs(prod[:3], g)
        db = curl_coeffs(prod[3:6], g) - prod[6:9]
        return np.concatenate((du, db))

    def rk4_if(self, y, t, dt):
        e2 = np.exp(self.lin * (0.5 * dt))
        e = e2 * e2
        a = self.rhs(y, t)
        b = self.rhs(e2 * (y + 0.5 * dt * a), t + 0.5 * dt)
        c = self.rhs(e2 * y + 0.5 * dt * b, t + 0.5 * dt)
        d = self.rhs(e * y + dt * e2 * c, t + dt)
        return e * y + (dt / 6.0) * (e * a + 2.0 * e2 * (b + c) + d)

    def imex_cn(self, y, t, dt):
        plus = 1.0 + 0.5 * dt * self.lin
        minus = 1.0 / (1.0 - 0.5 * dt * self.lin)
        n0 = self.rhs(y, t)
        pred = minus * (plus * y + dt * n0)
        n1 = self.rhs(pred, t + dt)
        return minus * (plus * y + 0.5 * dt * (n0 + n1))


def _max_speed(state: DynState, config: DynConfig) -> float:
    fields = [state.u_hat]
    if state.b_hat is not None:
        fields.append(state.b_hat)
    speed = 0.0
    for f in fields:
        x = f.physical()
        speed = max(speed, float(np.sqrt(np.max(np.sum(x * x, axis=0)))))
    return speed


def check_cfl(state: DynState, config: DynConfig) -> float:
    """Raise CFLError unless dt max(|u|, |B|) n / (2 pi) <= 0.5; returns the number."""
    number = config.dt * _max_speed(state, config) * config.grid.n / (2.0 * np.pi)
    if number > CFL_LIMIT:
        raise CFLError(f"CFL number {number:.3g} exceeds {CFL_LIMIT} (dt={config.dt})", state=state)
    return number


def _dump(state: DynState, config: DynConfig) -> str:
    from .cli_io import write_state

    d = config.dump_dir or tempfile.gettempdir()
    os.makedirs(d, exist_ok=True)
    path = os.path.join(d, f"hlx_dump_t{state.t:.6g}.hlx")
    try:
        write_state(path, state, config.model)
    except OSError:
        return ""
    return path


def _initial_state(state: DynState, config: DynConfig) -> DynState:
    if state.grid != config.grid:
        raise ValidationError("initial state and config use different grids")
    if config.has_b and state.b_hat is None:
        raise ValidationError(f"model {config.model} needs an initial magnetic field")
    if config.model == "dynamo":
        return DynState(config.source_at(state.t).with_time(state.t), state.b_hat, state.t)
    if not config.has_b and state.b_hat is not None:
        return DynState(state.u_hat, None, state.t)
    return state


def step(state: DynState, config: DynConfig, _system: Optional[_System] = None) -> DynState:
    """Advance one time step of size config.dt."""
    system = _system or _System(config)
    y = system.pack(state)
    advance = system.rk4_if if config.integrator == "rk4_integrating_factor" else system.imex_cn
    y_new = advance(y, state.t, config.dt)
    t_new = state.t + config.dt
    if not np.all(np.isfinite(y_new)):
        path = _dump(state, config)
        raise NumericalError(f"non-finite values at t={t_new:.6g}; last good state dumped to {path}", state, path)
    return system.unpack(y_new, t_new, state)


def run(config: DynConfig, initial: DynState):
    """Integrate to t_end; returns (snapshots, DiagSeries)."""
    state = _initial_state(initial, config)
    check_cfl(state, config)
    system = _System(config)
    t0 = state.t
    snaps: List[DynState] = []
    series = DiagSeries(nu1=config.nu1, nu2=config.nu2)
    if config.diag_stride:
        series.append(diagnostics(state, config))
    if config.snapshot_stride:
        snaps.append(state)
    for i in range(1, config.nsteps + 1):
        state = step(state, config, system)
        # re-anchor time to avoid drift from repeated addition
        state = system.unpack(system.pack(state), t0 + i * config.dt, state)
        if config.diag_stride and i % config.diag_stride == 0:
            series.append(diagnostics(state, config))
        if config.snapshot_stride and i % config.snapshot_stride == 0:
            snaps.append(state)
    if not snaps or snaps[-1] is not state:
        snaps.append(state)
    return snaps, series


def _centered(series: DiagSeries, name: str):
    t = series["t"]
    v = series[name]
    if t.size < 3:
        raise ValidationError("series needs at least three samples")
    dt = np.diff(t)
    if np.ptp(dt) > 1e-9 * dt.mean():
        raise ValidationError("centered differences need uniformly spaced samples")
    return (v[2:] - v[:-2]) / (t[2:] - t[:-2])


def helicity_dissipation_check(series: DiagSeries, nu: Optional[float] = None) -> float:
    """max |dH/dt + 2 nu int grad u : grad w| over interior samples (centered differences).

    The dissipation column was recorded with the run's nu1; a different nu
    rescales it.
    """
    dh = _centered(series, "helicity")
    diss = series["dissipation"][1:-1]
    if nu is not None and nu != series.nu1:
        if nu == 0:
            diss = np.zeros_like(diss)
        elif series.nu1 > 0:
            diss = diss * (nu / series.nu1)
        else:
            raise ValidationError("series was recorded with nu1 = 0; cannot rescale dissipation")
    return float(np.max(np.abs(dh - diss)))


def energy_law_residual(series: DiagSeries) -> float:
    """max |d/dt E/2 + nu1 |grad u|^2 + nu2 |grad B|^2 + int (u.B) div B| (centered)."""
    de = 0.5 * _centered(series, "energy")
    rest = series["visc_u"] + series["visc_b"] + series["coupling"]
    return float(np.max(np.abs(de + rest[1:-1])))


def divb_diagnostics(series: DiagSeries, nu2: float) -> dict:
    """Check 1/2 d/dt |div B|^2 + nu2 |grad div B|^2 = 0 and |div B(t)| <= |div B0|."""
    d = series["divb_l2"]
    g = series["grad_divb_l2"]
    _centered(series, "divb_l2")
    t = series["t"]
    d2 = d**2
    law = 0.5 * (d2[2:] - d2[:-2]) / (t[2:] - t[:-2]) + nu2 * g[1:-1] ** 2
    scale = max(float(d2[0]), 1e-300)
    monotone = bool(np.all(d <= d[0] * (1.0 + 1e-10) + 1e-14))
    return {
        "max_divb": float(d.max()),
        "initial_divb": float(d[0]),
        "final_divb": float(d[-1]),
        "energy_law_residual": float(np.max(np.abs(law))),
        "energy_law_relative": float(np.max(np.abs(law)) / scale),
        "monotone_bound": monotone,
    }


def _cumulative_dissipation(series: DiagSeries) -> float:
    t = series["t"]
    return float(-np.trapezoid(series["dissipation"], t)) if t.size > 1 else 0.0


@dataclass
class SweepResult:
    nu: np.ndarray
    helicity_change: np.ndarray
    cumulative_dissipation: np.ndarray
    terminal_divb: np.ndarray
    distances: np.ndarray
    series: list = field(repr=False, default_factory=list)

    def rows(self):
        for i, nu in enumerate(self.nu):
            yield (nu, self.helicity_change[i], self.cumulative_dissipation[i], self.terminal_divb[i])


def viscosity_sweep(config_template: DynConfig, nu_list: Sequence[float], initial: DynState) -> SweepResult:
    """Run the template at each viscosity (nu1 = nu2 = nu for MHD) and compare terminal states."""
    nus = np.asarray(list(nu_list), dtype=float)
    if nus.size == 0 or np.any(nus <= 0) or np.any(np.diff(nus) >= 0):
        raise ValidationError("nu_list must be positive and strictly decreasing")
    model = config_template.model
    if model in ("euler",):
        model = "nse"
    elif model == "ideal_mhd":
        model = "mhd"

    def member(nu):
        if model == "nse":
            cfg = replace(config_template, model=model, nu1=nu, nu2=0.0)
        elif model == "dynamo":
            cfg = replace(config_template, model=model, nu2=nu)
        else:
            cfg = replace(config_template, model=model, nu1=nu, nu2=nu)
        snaps, series = run(cfg, initial)
        return snaps[-1], series

    workers = fft_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(member, nus))
    else:
        results = [member(nu) for nu in nus]

    finals = [r[0] for r in results]
    allseries = [r[1] for r in results]
    dh = np.array([abs(s["helicity"][-1] - s["helicity"][0]) for s in allseries])
    cum = np.array([_cumulative_dissipation(s) for s in allseries])
    divb = np.array([s["divb_l2"][-1] for s in allseries])
    k = len(finals)
    dist = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            dist[i, j] = dist[j, i] = (finals[i].u_hat - finals[j].u_hat).norm()
    return SweepResult(nus, dh, cum, divb, dist, allseries)


@dataclass
class MagneticRateFit(RateFit):
    i1: np.ndarray = None
    i2: np.ndarray = None
    slope_i1: float = float("nan")
    slope_i2: float = float("nan")


def _as_traj(x):
    return [x] if isinstance(x, SpectralField) else list(x)


def magnetic_helicity_rate_fit(
    u_traj, B_traj, alpha1: float, alpha2: float, eps_list: Sequence[float], kind: str = "standard_radial"
) -> MagneticRateFit:
    """I1 = 2|int B^eps . r_eps(u, B)|, I2 = 2|int B^eps . ((u - u^eps) x (B - B^eps))| against eps.

    r_eps is evaluated through the commutator identity with exact multipliers.
    Trajectories are integrated in time by the trapezoid rule on their time
    tags; a single snapshot gives the instantaneous integrands.
    """
    if not (0.0 < alpha1 < alpha2 < 1.0):
        raise ValidationError("need 0 < alpha1 < alpha2 < 1")
    us, bs = _as_traj(u_traj), _as_traj(B_traj)
    if len(us) != len(bs):
        raise ValidationError("u and B trajectories differ in length")
    eps_arr = np.asarray(list(eps_list), dtype=float)
    if eps_arr.size < 2:
        raise ValidationError("need at least two eps values")
    times = np.array([0.0 if u.time is None else u.time for u in us])
    i1s, i2s = [], []
    for eps in eps_arr:
        spec = MollifierSpec(kind, float(eps))
        v1, v2 = [], []
        for u, b in zip(us, bs):
            ue, be = mollify(u, spec), mollify(b, spec)
            tail = pointwise(cross, u - ue, b - be)
            r = mollify(pointwise(cross, u, b), spec) - pointwise(cross, ue, be) + tail
            v1.append(be.inner(r))
            v2.append(be.inner(tail))
        if len(us) > 1:
            i1s.append(2.0 * abs(np.trapezoid(v1, times)))
            i2s.append(2.0 * abs(np.trapezoid(v2, times)))
        else:
            i1s.append(2.0 * abs(v1[0]))
            i2s.append(2.0 * abs(v2[0]))
    i1s, i2s = np.array(i1s), np.array(i2s)
    total = i1s + i2s
    return MagneticRateFit(
        loglog_slope(eps_arr, total),
        alpha2 - alpha1,
        eps_arr,
        total,
        i1=i1s,
        i2=i2s,
        slope_i1=loglog_slope(eps_arr, i1s),
        slope_i2=loglog_slope(eps_arr, i2s),
    )
