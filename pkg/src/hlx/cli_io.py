"""Snapshot files, run configuration documents, CSV with provenance and SVG plots."""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import os
import struct
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, SnapshotError, ValidationError
from .field import Grid, SpectralField

MAGIC = b"HLX1"
VERSION = 1
HEADER = struct.Struct("<4sIQId16sI")
FLAG_MEAN_FREE = 1
FLAG_DIV_FREE = 2


def _version():
    from . import __version__

    return __version__


@dataclass
class Snapshot:
    n: int
    ncomp: int
    time: Optional[float]
    model: str
    flags: int
    coeffs: np.ndarray

    @property
    def mean_free(self) -> bool:
        return bool(self.flags & FLAG_MEAN_FREE)

    @property
    def div_free(self) -> bool:
        return bool(self.flags & FLAG_DIV_FREE)

    def fields(self, dealias_mode: str = "three_halves_padding") -> List[SpectralField]:
        """Split the payload into 1- or 3-component fields."""
        grid = Grid(self.n, dealias_mode)
        step = 1 if self.ncomp == 1 else 3
        return [SpectralField(grid, self.coeffs[i : i + step], self.time) for i in range(0, self.ncomp, step)]


def _flags(coeffs: np.ndarray, n: int) -> int:
    flags = 0
    if np.all(coeffs[:, 0, 0, 0] == 0):
        flags |= FLAG_MEAN_FREE
    if coeffs.shape[0] % 3 == 0:
        from .operators import div_coeffs

        grid = Grid(n)
        ok = True
        for i in range(0, coeffs.shape[0], 3):
            c = coeffs[i : i + 3]
            d = np.sqrt(np.sum(np.abs(div_coeffs(c, grid)) ** 2))
            scale = np.sqrt(np.sum(np.abs(c) ** 2)) * n
            ok &= bool(d <= 1e-12 * max(scale, 1e-300))
        if ok:
            flags |= FLAG_DIV_FREE
    return flags


def write_snapshot(path, fields: Sequence[SpectralField], model: str = "", time: Optional[float] = None):
    """Write fields (stacked in order) as one snapshot; payload is little-endian complex128."""
    if isinstance(fields, SpectralField):
        fields = [fields]
    if not fields:
        raise ValidationError("nothing to write")
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid.n != grid.n:
            raise ValidationError("all fields in a snapshot must share n")
    coeffs = np.concatenate([f.coeffs for f in fields])
    tag = model.encode("ascii")
    if len(tag) > 16:
        raise ValidationError("model tag longer than 16 bytes")
    t = fields[0].time if time is None else time
    header = HEADER.pack(
        MAGIC, VERSION, grid.n, coeffs.shape[0], float("nan") if t is None else float(t), tag, _flags(coeffs, grid.n)
    )
    payload = np.ascontiguousarray(coeffs, dtype="<c16").tobytes()
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise SnapshotError(f"{path}: file too short for a snapshot header")
    magic, version, n, ncomp, t, tag, flags = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotError(f"{path}: snapshot version {version} is not supported (reader version {VERSION})")
    expected = ncomp * n**3 * 16
    got = len(raw) - HEADER.size
    if got != expected:
        raise SnapshotError(f"{path}: payload has {got} bytes, header (n={n}, ncomp={ncomp}) implies {expected}")
    coeffs = np.frombuffer(raw, dtype="<c16", offset=HEADER.size).reshape(ncomp, n, n, n).astype(complex)
    return Snapshot(int(n), int(ncomp), None if np.isnan(t) else float(t), tag.rstrip(b"\0").decode("ascii"), flags, coeffs)


def write_state(path, state, model: str = ""):
    fields = [state.u_hat] if state.b_hat is None else [state.u_hat, state.b_hat]
    write_snapshot(path, fields, model, state.t)


def read_state(path, dealias_mode: str = "three_halves_padding"):
    from .dynamics import DynState

    snap = read_snapshot(path)
    if snap.ncomp not in (3, 6):
        raise SnapshotError(f"{path}: a dynamical state needs 3 or 6 components, found {snap.ncomp}")
    fields = snap.fields(dealias_mode)
    t = 0.0 if snap.time is None else snap.time
    return DynState(fields[0], fields[1] if len(fields) > 1 else None, t)


# Run configuration schema: section -> key -> (parser, default).
def _floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _split_top(text):
    # split on commas or semicolons outside brackets
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch in ",;" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _params(text):
    """'sigma=2, k=[1,0,0], kind=cos' -> dict; values parsed as JSON where possible."""
    out = {}
    for item in _split_top(text):
        if "=" not in item:
            raise ConfigError(f"parameter {item!r} must look like key=value")
        k, v = item.split("=", 1)
        v = v.strip()
        try:
            val = json.loads(v)
        except json.JSONDecodeError:
            val = v
        out[k.strip()] = tuple(val) if isinstance(val, list) else val
    return out


SCHEMA: Dict[str, Dict[str, tuple]] = {
    "run": {
        "model": (str, "euler"),
        "n": (int, 32),
        "dealias": (str, "three_halves_padding"),
        "dt": (float, 1e-3),
        "t_end": (float, 1.0),
        "integrator": (str, "rk4_integrating_factor"),
        "nu1": (float, 0.0),
        "nu2": (float, 0.0),
        "snapshot_stride": (int, 0),
        "diag_stride": (int, 1),
        "seed": (int, 0),
    },
    "initial": {
        "u_preset": (str, "abc"),
        "u_params": (_params, {}),
        "u_file": (str, ""),
        "b_preset": (str, ""),
        "b_params": (_params, {}),
        "b_file": (str, ""),
    },
    "source": {
        "preset": (str, ""),
        "params": (_params, {}),
        "file": (str, ""),
        "omega": (float, 0.0),
    },
    "output": {
        "dir": (str, "."),
        "diag_csv": (str, "diag.csv"),
        "snapshot_prefix": (str, "snap"),
    },
    "diagnostics": {
        "select": (lambda s: [x.strip() for x in s.split(",") if x.strip()], []),
    },
    "sweep": {
        "nu_list": (_floats, []),
    },
}


@dataclass
class RunConfig:
    values: Dict[str, Dict[str, object]]
    text: str

    def __getitem__(self, section):
        return self.values[section]

    @property
    def hash(self) -> str:
        """Digest of the validated values; the output directory is left out so
        the same run written elsewhere carries the same provenance."""
        vals = {k: dict(v) for k, v in self.values.items()}
        vals["output"].pop("dir", None)
        canon = json.dumps(vals, sort_keys=True, default=str)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def dyn_config(self, u_source=None):
        from .dynamics import DynConfig

        r = self.values["run"]
        grid = Grid(r["n"], r["dealias"])
        return DynConfig(
            grid,
            model=r["model"],
            dt=r["dt"],
            t_end=r["t_end"],
            integrator=r["integrator"],
            nu1=r["nu1"],
            nu2=r["nu2"],
            u_source=u_source,
            snapshot_stride=r["snapshot_stride"],
            diag_stride=r["diag_stride"],
            dump_dir=self.values["output"]["dir"],
        )


def parse_run_config(text: str) -> RunConfig:
    """Parse and validate an INI document against SCHEMA; unknown sections or keys are errors."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values: Dict[str, Dict[str, object]] = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(SCHEMA)}")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (parse, default) in keys.items():
            if cp.has_option(section, key):
                raw = cp.get(section, key)
                try:
                    values[section][key] = parse(raw)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
            else:
                values[section][key] = default
    return RunConfig(values, text)


def load_run_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_run_config(fh.read())


def provenance(config_hash: str = "none") -> str:
    return f"hlx {_version()} config={config_hash}"


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], config_hash: str = "none"):
    """CSV with a provenance comment line and a header row; path '-' or None writes to a string."""
    buf = io.StringIO()
    buf.write(f"# {provenance(config_hash)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path in (None, "-"):
        return text
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def read_csv(path) -> Tuple[List[str], np.ndarray]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    data = [[float(x) for x in row] for row in reader if row]
    return header, np.array(data, dtype=float).reshape(-1, len(header))


def plot_csv(csv_path, svg_path, x: Optional[str] = None, ys: Optional[Sequence[str]] = None,
             logx: bool = False, logy: bool = False, title: Optional[str] = None):
    """Static SVG line chart of CSV columns (first column on x by default)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, data = read_csv(csv_path)
    x = x or header[0]
    if x not in header:
        raise ValidationError(f"column {x!r} not in {header}")
    ys = list(ys) if ys else [h for h in header if h != x]
    for y in ys:
        if y not in header:
            raise ValidationError(f"column {y!r} not in {header}")
    xv = data[:, header.index(x)]
    with matplotlib.rc_context({"svg.hashsalt": "hlx", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for y in ys:
            yv = data[:, header.index(y)]
            if logy:
                yv = np.abs(yv)
            ax.plot(xv, yv, marker="o", ms=3, label=y)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(x)
        ax.legend()
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
