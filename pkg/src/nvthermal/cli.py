"""Command-line front end.

Exit codes: 0 success, 2 usage or input-parse error, 3 numerical failure
(rank deficiency, non-convergence).
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import spectra, spin, thermal, zfs
from .config import ConfigError, load_config
from .constants import MHZ, format_float
from .fitting import FitError, FitOptions, RankDeficiencyError, fit_d_poly, fit_mott_seitz, \
    fit_phonon_shift

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _vector(text, name="vector"):
    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{name} must be three comma-separated numbers, got {text!r}") from None
    if len(v) != 3 or not all(np.isfinite(v)):
        raise UsageError(f"{name} must be three finite comma-separated numbers, got {text!r}")
    return np.array(v)


def _interval(text, name):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"{name} must be 'low,high', got {text!r}") from None
    if not lo < hi:
        raise UsageError(f"{name} needs low < high")
    return lo, hi


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(args, text):
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------

def cmd_lines(args, cfg):
    B = _vector(args.field, "--field")
    params = cfg.hamiltonian
    D = params.D
    if args.temp is not None:
        if args.temp < 0:
            raise UsageError("--temp must be >= 0 K")
        D = thermal.d_of_t(cfg.thermal.d_poly, args.temp)
        params = spin.HamiltonianParams(D, params.E_NV, params.gamma_e)
    ts = spin.odmr_lines(params, B, cfg.tolerances.degeneracy)
    if args.format == "csv":
        out = io.StringIO()
        out.write("frequency_MHz,orientation,branch,multiplicity\n")
        for ln in ts.lines:
            out.write(f"{format_float(ln.frequency / MHZ)},{ln.orientation},{ln.branch},"
                      f"{ln.multiplicity}\n")
        _emit(args, out.getvalue())
    else:
        _emit(args, _dumps({
            "field_T": [float(b) for b in B],
            "temperature_K": args.temp,
            "D_MHz": D / MHZ,
            "lines": [{"frequency_MHz": ln.frequency / MHZ, "orientation": ln.orientation,
                       "branch": ln.branch, "multiplicity": ln.multiplicity,
                       "members": [list(m) for m in ln.members]} for ln in ts.lines],
        }))
    return EXIT_OK


def sweep_table(cfg, direction, B_min, B_max, steps):
    """CSV text with one column per (orientation, branch), tracked across rows."""
    rows = spin.field_sweep(cfg.hamiltonian, direction, B_min, B_max, steps,
                            cfg.tolerances.degeneracy)
    keys = spin.branch_keys()
    out = io.StringIO()
    cols = [f"o{o}_{'minus' if b < 0 else 'plus'}_MHz" for o, b in keys]
    out.write(",".join(["B_T"] + cols) + "\n")
    for B, ts in rows:
        vals = [format_float(B)] + [format_float(ts.by_branch[k] / MHZ) for k in keys]
        out.write(",".join(vals) + "\n")
    return out.getvalue()


def cmd_sweep(args, cfg):
    s = cfg.sweep
    direction = _vector(args.direction, "--direction") if args.direction else s.direction
    B_min = s.B_min if args.bmin is None else args.bmin
    B_max = s.B_max if args.bmax is None else args.bmax
    steps = s.steps if args.steps is None else args.steps
    if steps < 2 or B_min > B_max or not np.linalg.norm(direction) > 0:
        raise UsageError("sweep needs steps >= 2, B_min <= B_max and a non-zero direction")
    _emit(args, sweep_table(cfg, direction, B_min, B_max, steps))
    return EXIT_OK


def cmd_fit(args, cfg):
    data = spectra.load_series(args.data)
    tol = cfg.tolerances
    opts = FitOptions(gtol=tol.gtol, xtol=tol.xtol, max_iter=tol.max_iter)
    try:
        if args.model == "mott-seitz":
            res = fit_mott_seitz(data, options=opts)
        elif args.model == "phonon":
            res = fit_phonon_shift(data, reference_T=args.reference_temp, options=opts)
        else:
            res = fit_d_poly(data, degree=args.degree)
    except RankDeficiencyError as exc:
        sys.stderr.write(f"error: {exc} (parameters: {', '.join(exc.parameters)})\n")
        return EXIT_NUMERIC
    _emit(args, _dumps(res.as_dict()))
    if not res.converged:
        sys.stderr.write(f"error: fit did not converge ({res.message})\n")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_zfs(args, cfg):
    if args.point_dipole is not None:
        r = _vector(args.point_dipole, "--point-dipole")
        if not np.linalg.norm(r) > 0:
            raise UsageError("--point-dipole separation must be non-zero")
        T = zfs.zfs_point_dipole(r, args.chi, args.spin)
        source = {"point_dipole_A": [float(x) for x in r]}
    else:
        psi_i = zfs.load_grid(args.orbitals[0])
        psi_j = zfs.load_grid(args.orbitals[1])
        T = zfs.zfs_from_orbitals(psi_i, psi_j, args.chi, args.spin, workers=args.workers)
        source = {"orbitals": list(args.orbitals)}
    out = T.as_dict()
    out.update(source, chi=args.chi, S=args.spin)
    _emit(args, _dumps(out))
    return EXIT_OK


def cmd_peaks(args, cfg):
    sp = cfg.spectra
    window = _interval(args.window, "--window") if args.window else sp.window_nm
    exclude = _interval(args.exclude, "--exclude") if args.exclude else sp.exclude_nm
    specs = [spectra.load_spectrum(p) for p in args.spectra]
    if args.dips:
        result = []
        for path, s in zip(args.spectra, specs):
            dips, warning = spectra.find_odmr_dips(s, args.dips, args.prominence or sp.dip_prominence)
            result.append({"file": path, "warning": warning,
                           "dips_MHz": [d.position / MHZ for d in dips],
                           "depths": [d.height for d in dips]})
        _emit(args, _dumps(result))
    elif len(specs) > 1 or args.reference_temp is not None:
        ref = sp.reference_T if args.reference_temp is None else args.reference_temp
        series = spectra.peak_shift_series(specs, ref, window, exclude)
        buf = io.StringIO()
        spectra.save_series(buf, series)
        _emit(args, buf.getvalue())
    else:
        pk = spectra.find_peak(specs[0], window, exclude)
        _emit(args, _dumps({"position": pk.position, "height": pk.height, "method": pk.method,
                            "window": list(pk.window), "warnings": list(pk.warnings),
                            "metadata": pk.metadata, "temperature_K": specs[0].temperature}))
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _common_options(suppress):
    common = argparse.ArgumentParser(add_help=False)
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common.add_argument("--config", help="JSON config (default: $NV_CONFIG, then built-in defaults)",
                        **kw)
    common.add_argument("--dump-config", action="store_true",
                        help="print the effective config as JSON and exit", **kw)
    common.add_argument("-o", "--output", help="write the result here instead of stdout", **kw)
    return common


def build_parser():
    # subcommand copies must not reset options given before the subcommand
    common = _common_options(suppress=True)
    p = argparse.ArgumentParser(prog="nvthermal", parents=[_common_options(suppress=False)],
                                description="NV- center ODMR lines, dipolar ZFS and thermal fits")
    sub = p.add_subparsers(dest="command")

    q = sub.add_parser("lines", parents=[common], help="ODMR resonance lines at one field")
    q.add_argument("--field", default="0,0,0", help="Bx,By,Bz in tesla (crystal frame)")
    q.add_argument("--temp", type=float, help="replace D by D(T) from the config, in K")
    q.add_argument("--format", choices=("json", "csv"), default="json")
    q.set_defaults(func=cmd_lines)

    q = sub.add_parser("sweep", parents=[common], help="branch-tracked lines vs field magnitude")
    q.add_argument("--direction", help="x,y,z field direction (default from config)")
    q.add_argument("--bmin", type=float, help="tesla")
    q.add_argument("--bmax", type=float, help="tesla")
    q.add_argument("--steps", type=int)
    q.set_defaults(func=cmd_sweep)

    q = sub.add_parser("fit", parents=[common], help="fit a thermal model to an x,y[,sigma] CSV")
    q.add_argument("--model", required=True, choices=("mott-seitz", "phonon", "dpoly"))
    q.add_argument("--data", required=True, help="data-series CSV")
    q.add_argument("--degree", type=int, default=3, help="dpoly degree (0..3)")
    q.add_argument("--reference-temp", type=float,
                   help="phonon: shifts are relative to this temperature")
    q.set_defaults(func=cmd_fit)

    q = sub.add_parser("zfs", parents=[common], help="dipolar zero-field-splitting tensor (GHz)")
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--orbitals", nargs=2, metavar=("PSI_I", "PSI_J"), help="two grid files")
    g.add_argument("--point-dipole", metavar="X,Y,Z", help="separation in Angstrom")
    q.add_argument("--chi", type=int, choices=(1, -1), default=1)
    q.add_argument("--spin", type=float, default=1.0)
    q.add_argument("--workers", type=int, default=1)
    q.set_defaults(func=cmd_zfs)

    q = sub.add_parser("peaks", parents=[common], help="lambda_max, peak-shift series or ODMR dips")
    q.add_argument("spectra", nargs="+", help="spectrum CSV files")
    q.add_argument("--reference-temp", type=float, help="emit a Delta E_V series relative to this T")
    q.add_argument("--window", help="low,high axis interval (default from config)")
    q.add_argument("--exclude", help="low,high axis interval to ignore")
    q.add_argument("--dips", type=int, help="find this many ODMR dips instead")
    q.add_argument("--prominence", type=float)
    q.set_defaults(func=cmd_peaks)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    if args.dump_config:
        _emit(args, _dumps(cfg.to_dict()))
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, cfg)
    except (UsageError, spectra.ParseError, zfs.GridError, ConfigError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (RankDeficiencyError, FitError, FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
