"""Command-line entry point: `hlx <subcommand> ...`.

Exit status 0 on success, 2 on validation errors (including bad flags),
3 on numerical or file failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

import numpy as np

from .errors import HlxError, NumericalError, SnapshotError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _param(text: str):
    from .cli_io import _params

    try:
        return _params(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _emit(text: str, out: Optional[str]):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _load_fields(path, dealias):
    from .cli_io import read_snapshot

    snap = read_snapshot(path)
    return snap, snap.fields(dealias)


def _velocity(path, dealias):
    snap, fields = _load_fields(path, dealias)
    if fields[0].ncomp != 3:
        raise ValidationError(f"{path}: expected a vector field")
    return snap, fields[0]


def _mollifier(args):
    from .mollify import MollifierSpec

    return MollifierSpec(args.kind, args.eps, mu=args.mu, quad_points=args.quad_points)


def cmd_gen(args):
    from .cli_io import write_snapshot
    from .field import Grid
    from .presets import preset_field

    grid = Grid(args.n, args.dealias)
    params = dict(args.param or {})
    if args.preset == "random_decay":
        params.setdefault("seed", args.seed)
    fields = [preset_field(args.preset, grid, **params)]
    if args.b_preset:
        bparams = dict(args.b_param or {})
        if args.b_preset == "random_decay":
            bparams.setdefault("seed", args.seed + 1)
        fields.append(preset_field(args.b_preset, grid, **bparams))
    write_snapshot(args.out, fields, model=args.preset[:16], time=0.0)


def cmd_diag(args):
    from .cli_io import write_csv
    from .helicity import conserved_quantities

    snap, fields = _load_fields(args.inp, args.dealias)
    u = fields[0]
    b = fields[1] if len(fields) > 1 else None
    c = conserved_quantities(u, b)
    cols = ("time", "energy", "helicity", "cross_helicity", "magnetic_helicity")
    t = np.nan if snap.time is None else snap.time
    _emit(write_csv(None, cols, [(t, c.energy, c.helicity, c.cross_helicity, c.magnetic_helicity)]), args.out)


def cmd_besov(args):
    from .besov import BesovParams, besov_norm, dyadic_blocks, lp_norm
    from .cli_io import write_csv

    _, fields = _load_fields(args.inp, args.dealias)
    f = fields[0]
    params = BesovParams(args.s, args.p, args.q)
    dec = dyadic_blocks(f)
    rows = [(-1, lp_norm(dec.low_block, args.p))]
    rows += [(j, lp_norm(b, args.p)) for j, b in enumerate(dec.blocks)]
    text = write_csv(None, ("block", "lp_norm"), rows)
    text += f"# besov_norm s={args.s} p={args.p} q={args.q}: {besov_norm(f, params)!r}\n"
    _emit(text, args.out)


def cmd_defect(args):
    from .cli_io import write_csv
    from .helicity import defect_report

    _, u = _velocity(args.inp, args.dealias)
    rows = []
    for eps in args.eps:
        args_eps = argparse.Namespace(**{**vars(args), "eps": eps})
        rep = defect_report(u, _mollifier(args_eps), method=args.method)
        rows.append(rep.as_row())
    cols = list(rows[0])
    _emit(write_csv(None, cols, [[r[c] for c in cols] for r in rows]), args.out)


def cmd_balance(args):
    from .cli_io import write_csv
    from .helicity import centered_time_derivative, local_balance_residual

    _, u = _velocity(args.inp, args.dealias)
    dudt = None
    source = "steady"
    if args.prev or args.next:
        if not (args.prev and args.next and args.dt):
            raise ValidationError("--prev, --next and --dt are needed together")
        _, up = _velocity(args.prev, args.dealias)
        _, un = _velocity(args.next, args.dealias)
        dudt = centered_time_derivative(up, un, args.dt)
        source = "centered_difference"
    rows = []
    for eps in args.eps:
        spec = _mollifier(argparse.Namespace(**{**vars(args), "eps": eps}))
        rep = local_balance_residual(u, spec, dudt=dudt, nu=args.nu, time_source=source)
        rows.append((eps, rep.norm, rep.time_source))
    _emit(write_csv(None, ("eps", "residual_norm", "time_source"), rows), args.out)


def cmd_structure(args):
    from .cli_io import write_csv
    from .structfun import StructureCurve, structure_curve

    _, u = _velocity(args.inp, args.dealias)
    curve = structure_curve(u, sorted(args.radii))
    _emit(write_csv(None, StructureCurve.COLUMNS, curve.rows()), args.out)


def cmd_scaling(args):
    from .cli_io import write_csv
    from .structfun import StructureCurve, scaling_check

    _, u = _velocity(args.inp, args.dealias)
    eps = sorted(args.eps)
    pts = scaling_check(u, eps, seed=args.seed)
    curve = StructureCurve(
        [p.eps for p in pts],
        [p.s1_mean for p in pts],
        [p.s2_mean for p in pts],
        lhs=[p.lhs for p in pts],
        rhs=[p.rhs for p in pts],
        gap=[p.gap for p in pts],
    )
    _emit(write_csv(None, StructureCurve.COLUMNS, curve.rows()), args.out)


def _initial_from_config(rc, grid):
    from .cli_io import read_snapshot
    from .dynamics import DynState
    from .field import SpectralField
    from .presets import preset_field

    init = rc["initial"]
    seed = rc["run"]["seed"]

    def make(preset, params, path, default_seed):
        if path:
            snap = read_snapshot(path)
            if snap.n != grid.n:
                raise ValidationError(f"{path}: n={snap.n} does not match config n={grid.n}")
            return SpectralField(grid, snap.coeffs[:3], snap.time)
        if not preset:
            return None
        params = dict(params)
        if preset == "random_decay":
            params.setdefault("seed", default_seed)
        return preset_field(preset, grid, **params)

    u = make(init["u_preset"], init["u_params"], init["u_file"], seed)
    b = make(init["b_preset"], init["b_params"], init["b_file"], seed + 1)
    if u is None:
        u = SpectralField.zeros(grid)
    return DynState(u, b, 0.0)


def _source_from_config(rc, grid):
    from .cli_io import read_snapshot
    from .dynamics import periodic_source
    from .field import SpectralField
    from .presets import preset_field

    src = rc["source"]
    if src["file"]:
        snap = read_snapshot(src["file"])
        u = SpectralField(grid, snap.coeffs[:3])
    elif src["preset"]:
        params = dict(src["params"])
        if src["preset"] == "random_decay":
            params.setdefault("seed", rc["run"]["seed"] + 2)
        u = preset_field(src["preset"], grid, **params)
    else:
        return None
    return periodic_source(u, src["omega"]) if src["omega"] else u


def _run_from_config(rc, force_model=None):
    from .cli_io import write_csv, write_state
    from .dynamics import DIAG_FIELDS, run
    from .field import Grid

    if force_model:
        rc.values["run"]["model"] = force_model
    r = rc["run"]
    grid = Grid(r["n"], r["dealias"])
    source = _source_from_config(rc, grid)
    cfg = rc.dyn_config(u_source=source)
    initial = _initial_from_config(rc, grid)
    snaps, series = run(cfg, initial)
    out = rc["output"]
    os.makedirs(out["dir"], exist_ok=True)
    select = rc["diagnostics"]["select"] or list(DIAG_FIELDS)
    bad = [c for c in select if c not in DIAG_FIELDS]
    if bad:
        raise ValidationError(f"unknown diagnostics {bad}; expected names from {DIAG_FIELDS}")
    if "t" not in select:
        select = ["t"] + select
    rows = ([row[DIAG_FIELDS.index(c)] for c in select] for row in series.rows())
    write_csv(os.path.join(out["dir"], out["diag_csv"]), select, rows, rc.hash)
    for i, s in enumerate(snaps):
        write_state(os.path.join(out["dir"], f"{out['snapshot_prefix']}_{i:05d}.hlx"), s, cfg.model)
    return cfg, snaps, series


def _config_from_args(args):
    from .cli_io import load_run_config

    rc = load_run_config(args.config)
    if getattr(args, "outdir", None):
        rc.values["output"]["dir"] = args.outdir
    return rc


def cmd_solve(args):
    rc = _config_from_args(args)
    _run_from_config(rc)


def cmd_dynamo(args):
    rc = _config_from_args(args)
    if not (rc["source"]["preset"] or rc["source"]["file"]):
        raise ValidationError("dynamo runs need a [source] preset or file")
    _run_from_config(rc, force_model="dynamo")


def cmd_sweep(args):
    from .cli_io import write_csv
    from .dynamics import viscosity_sweep
    from .field import Grid

    rc = _config_from_args(args)
    nus = args.nu or rc["sweep"]["nu_list"]
    if not nus:
        raise ValidationError("no viscosities given (--nu or [sweep] nu_list)")
    r = rc["run"]
    grid = Grid(r["n"], r["dealias"])
    cfg = rc.dyn_config(u_source=_source_from_config(rc, grid))
    res = viscosity_sweep(cfg, nus, _initial_from_config(rc, grid))
    cols = ("nu", "helicity_change", "cumulative_dissipation", "terminal_divb")
    out = rc["output"]["dir"]
    os.makedirs(out, exist_ok=True)
    write_csv(os.path.join(out, "sweep.csv"), cols, res.rows(), rc.hash)
    k = len(res.nu)
    write_csv(
        os.path.join(out, "sweep_distances.csv"),
        ["nu"] + [f"d_{j}" for j in range(k)],
        ([res.nu[i]] + list(res.distances[i]) for i in range(k)),
        rc.hash,
    )


def cmd_plot(args):
    from .cli_io import plot_csv

    plot_csv(args.csv, args.out, x=args.x, ys=args.y, logx=args.logx, logy=args.logy, title=args.title)


def build_parser() -> argparse.ArgumentParser:
    from .field import DEALIAS_MODES
    from .helicity import METHODS
    from .mollify import KINDS
    from .presets import PRESETS

    p = argparse.ArgumentParser(prog="hlx", description="Helicity, defect and MHD diagnostics on the periodic box.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("--in", dest="inp", required=True, help="input snapshot")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--dealias", default="three_halves_padding", choices=DEALIAS_MODES)
        sp.add_argument("--seed", type=int, default=0)

    def mollifier(sp, kind="standard_radial"):
        sp.add_argument("--eps", type=_floats, required=True, help="radius or comma-separated radii")
        sp.add_argument("--kind", default=kind, choices=KINDS)
        sp.add_argument("--mu", type=float, default=0.5)
        sp.add_argument("--quad-points", type=int, default=24)

    sp = sub.add_parser("gen", help="write a preset field as a snapshot")
    sp.add_argument("--preset", required=True, choices=PRESETS)
    sp.add_argument("--param", type=_param, help="preset parameters, e.g. 'sigma=2,kmax=4'")
    sp.add_argument("--b-preset", choices=PRESETS, default=None, help="also store a magnetic field")
    sp.add_argument("--b-param", type=_param)
    sp.add_argument("--n", type=int, required=True)
    common(sp, needs_input=False)
    sp.set_defaults(func=cmd_gen)
    sp._option_string_actions["--out"].required = True

    sp = sub.add_parser("diag", help="energy and helicities of a snapshot")
    common(sp)
    sp.set_defaults(func=cmd_diag)

    sp = sub.add_parser("besov", help="Littlewood-Paley block norms and a Besov norm")
    common(sp)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.set_defaults(func=cmd_besov)

    sp = sub.add_parser("defect", help="defect terms D1, D2 and their path residual")
    common(sp)
    mollifier(sp)
    sp.add_argument("--method", default="both", choices=METHODS + ("both",))
    sp.set_defaults(func=cmd_defect)

    sp = sub.add_parser("balance", help="mollified local helicity balance residual")
    common(sp)
    mollifier(sp)
    sp.add_argument("--nu", type=float, default=0.0)
    sp.add_argument("--prev", default=None, help="snapshot at t - dt for the time derivative")
    sp.add_argument("--next", default=None, help="snapshot at t + dt for the time derivative")
    sp.add_argument("--dt", type=float, default=None)
    sp.set_defaults(func=cmd_balance)

    sp = sub.add_parser("structure", help="spatial means of S1 and S2 over radii")
    common(sp)
    sp.add_argument("--radii", type=_floats, required=True)
    sp.set_defaults(func=cmd_structure)

    sp = sub.add_parser("scaling", help="ball-mollified balance against the spherical-average form")
    common(sp)
    sp.add_argument("--eps", type=_floats, required=True)
    sp.set_defaults(func=cmd_scaling)

    for name, fn, text in (
        ("solve", cmd_solve, "run a configured simulation"),
        ("dynamo", cmd_dynamo, "run the kinematic dynamo from a config"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True)
        sp.add_argument("--outdir", default=None, help="override [output] dir")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("sweep", help="viscosity sweep from a config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--nu", type=_floats, default=None)
    sp.add_argument("--outdir", default=None)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("plot", help="render CSV columns to an SVG line chart")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--x", default=None)
    sp.add_argument("--y", type=lambda s: [c.strip() for c in s.split(",") if c.strip()], default=None)
    sp.add_argument("--logx", action="store_true")
    sp.add_argument("--logy", action="store_true")
    sp.add_argument("--title", default=None)
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"hlx: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, SnapshotError, OSError) as exc:
        print(f"hlx: failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HlxError as exc:
        print(f"hlx: failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
