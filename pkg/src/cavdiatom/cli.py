"""Command-line front end: scans, resonances, levels, spectra and validation.

Every subcommand writes CSV/JSON next to a run manifest and, unless
--no-figure is given, a rendered figure of the same data.  Outputs are
deterministic: rerunning with identical inputs reproduces the data files
byte for byte, independent of the thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _kernels, report
from . import adiabatic, bound_states, nonadiabatic, resonance, scattering, spectrum
from .core import (
    NumericalError,
    RadialGrid,
    SystemParams,
    ValidationError,
    config_fingerprint,
    internal_to_mhz,
    load_grid,
    load_params,
    mhz_to_internal,
    preset_grid,
    preset_names,
    read_config,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

OUT_DIR_ENV = "CAVDIATOM_OUT"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavdiatom",
        description="Cavity-induced giant quasibound diatoms: potentials, "
                    "scattering, resonances, levels and spectra.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--preset", choices=preset_names(), default="cs-optical",
                       help="named parameter set")
        p.add_argument("--config", type=Path, default=None,
                       help="YAML config overriding the preset (sections: params, grid)")
        p.add_argument("--out", type=Path, default=None,
                       help=f"output directory (default: $" + OUT_DIR_ENV + " or cwd)")
        p.add_argument("--threads", type=int, default=0,
                       help="compute threads (0 = all cores); outputs do not depend on it")
        p.add_argument("--no-figure", action="store_true",
                       help="skip figure rendering")

    p = sub.add_parser("potentials", help="adiabatic curves on the radial grid")
    common(p)

    p = sub.add_parser("sweep-kappa", help="well depth and position versus coupling")
    common(p)
    p.add_argument("--factor-min", type=float, default=1.0)
    p.add_argument("--factor-max", type=float, default=100.0)
    p.add_argument("--points", type=int, default=13)

    p = sub.add_parser("sweep-detuning", help="well minimum versus cavity detuning")
    common(p)
    p.add_argument("--det-min", type=float, default=-40.0, help="MHz")
    p.add_argument("--det-max", type=float, default=40.0, help="MHz")
    p.add_argument("--points", type=int, default=33)

    p = sub.add_parser("scatter", help="sigma_11 over an energy window")
    common(p)
    p.add_argument("--emin", type=float, default=None,
                   help="MHz above the lowest threshold")
    p.add_argument("--emax", type=float, default=None,
                   help="MHz above the lowest threshold")
    p.add_argument("--points", type=int, default=800)
    p.add_argument("--loss", type=float, default=0.0,
                   help="cavity linewidth Gamma_c for the broadened curve [MHz]")
    p.add_argument("--method", choices=("volterra", "numerov"), default="volterra")
    p.add_argument("--no-richardson", action="store_true",
                   help="skip the half-grid error-cancellation run")

    p = sub.add_parser("resonances", help="quasibound poles of the S matrix")
    common(p)
    p.add_argument("--window", type=float, nargs=2, default=None,
                   metavar=("EMIN", "EMAX"), help="MHz above the lowest threshold")
    p.add_argument("--max-seeds", type=int, default=64)

    p = sub.add_parser("levels", help="orientation-resolved vibrational levels")
    common(p)
    p.add_argument("--symmetry", choices=("sigma", "pi"), default="sigma")
    p.add_argument("--theta-points", type=int, default=32)

    p = sub.add_parser("spectrum", help="fluorescence spectrum (Sigma and Pi)")
    common(p)
    p.add_argument("--gamma-eff", type=float, default=8.0,
                   help="Lorentzian half width [MHz]")
    p.add_argument("--theta-points", type=int, default=128)
    p.add_argument("--omega-points", type=int, default=2001)

    p = sub.add_parser("validate", help="run the fast invariant checks")
    common(p)
    return parser


def _setup(args):
    config = {"preset": args.preset}
    if args.config is not None:
        file_cfg = read_config(args.config)
        file_cfg.setdefault("preset", args.preset)
        config = file_cfg
    params = load_params(config)
    if args.config is not None and "grid" in config:
        grid = load_grid(config)
    else:
        grid = preset_grid(config.get("preset", args.preset))
    out_dir = args.out or Path(os.environ.get(OUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.threads and args.threads > 0:
        _kernels.set_threads(args.threads)
    return params, grid, out_dir, config


def _manifest(out_dir: Path, args, config, outputs, t_start) -> Path:
    payload = {
        "tool": "cavdiatom",
        "version": __version__,
        "command": args.command,
        "preset": getattr(args, "preset", None),
        "config_hash": config_fingerprint(config),
        "arguments": {k: (str(v) if isinstance(v, Path) else v)
                      for k, v in sorted(vars(args).items()) if k != "command"},
        "outputs": [p.name for p in outputs],
        "duration_s": round(time.time() - t_start, 3),
    }
    path = out_dir / f"{args.command.replace('-', '_')}_manifest.json"
    report.write_json(path, payload)
    return path


def _well_window_mhz(params: SystemParams, grid: RadialGrid):
    """Default scan window: the well-depth band above the lowest threshold."""
    curves, _ = nonadiabatic.tables_for(params, grid)
    well = adiabatic.characterize_well(curves)
    if well is None:
        raise ValidationError("the omega_2 curve holds no well for these parameters")
    th = curves.thresholds
    lo = (params.omega_A + well.min_value) - th[0]
    hi = th[1] - th[0]
    return (internal_to_mhz(lo + 0.02 * well.depth),
            internal_to_mhz(hi - 0.005 * well.depth), curves, well)


def cmd_potentials(args) -> int:
    t0 = time.time()
    params, grid, out_dir, config = _setup(args)
    curves = adiabatic.diagonalize_curves(params, grid)
    well = adiabatic.characterize_well(curves)
    r = grid.points()
    omega_rel = report.mhz(curves.omega - params.omega_A)
    csv_path = out_dir / "curves.csv"
    report.emit_csv(csv_path, ["R_a0", "omega1_MHz", "omega2_MHz", "omega3_MHz"],
                    [r, omega_rel[0], omega_rel[1], omega_rel[2]])
    outputs = [csv_path]
    if well is not None:
        print(f"omega_2 well: R_c = {well.r_c:.1f} a0, "
              f"depth = {internal_to_mhz(well.depth):.4f} MHz")
    if not args.no_figure:
        fig_path = out_dir / "potentials.png"
        report.figure_curves(fig_path, r, omega_rel,
                             r_c=None if well is None else well.r_c)
        outputs.append(fig_path)
    outputs.append(_manifest(out_dir, args, config, outputs, t0))
    return EXIT_OK


def cmd_sweep_kappa(args) -> int:
    t0 = time.time()
    params, grid, out_dir, config = _setup(args)
    if args.points < 1 or args.factor_min <= 0 or args.factor_max < args.factor_min:
        raise ValidationError("sweep range must satisfy 0 < factor-min <= factor-max")
    factors = np.geomspace(args.factor_min, args.factor_max, args.points)
    table = adiabatic.sweep_coupling(params, params.kappa_A * factors)
    csv_path = out_dir / "sweep_kappa.csv"
    report.emit_csv(csv_path, ["kappa_A_MHz", "depth_MHz", "r_c_a0"],
                    [report.mhz(table[:, 0]), report.mhz(table[:, 1]), table[:, 2]])
    outputs = [csv_path]
    if not args.no_figure:
        fig_path = out_dir / "sweep_kappa.png"
        report.figure_sweep_kappa(fig_path, report.mhz(table[:, 0]),
                                  report.mhz(table[:, 1]), table[:, 2])
        outputs.append(fig_path)
    outputs.append(_manifest(out_dir, args, config, outputs, t0))
    return EXIT_OK


def cmd_sweep_detuning(args) -> int:
    t0 = time.time()
    params, grid, out_dir, config = _setup(args)
    if args.points < 1 or args.det_max < args.det_min:
        raise ValidationError("detuning range must satisfy det-min <= det-max")
    detunings = mhz_to_internal(np.linspace(args.det_min, args.det_max, args.points))
    table = adiabatic.sweep_detuning(params, detunings)
    csv_path = out_dir / "sweep_detuning.csv"
    report.emit_csv(csv_path, ["detuning_MHz", "min_omega2_MHz"],
                    [report.mhz(table[:, 0]), report.mhz(table[:, 1])])
    outputs = [csv_path]
    if not args.no_figure:
        fig_path = out_dir / "sweep_detuning.png"
        report.figure_sweep_detuning(fig_path, report.mhz(table[:, 0]),
                                     report.mhz(table[:, 1]))
        outputs.append(fig_path)
    outputs.append(_manifest(out_dir, args, config, outputs, t0))
    return EXIT_OK


def cmd_scatter(args) -> int:
    t0 = time.time()
    params, grid, out_dir, config = _setup(args)
    emin_auto, emax_auto, curves, _ = _well_window_mhz(params, grid)
    emin = emin_auto if args.emin is None else args.emin
    emax = emax_auto if args.emax is None else args.emax
    if not emax > emin:
        raise ValidationError(f"empty energy range: emin = {emin}, emax = {emax} MHz")
    if args.points < 2:
        raise ValidationError("scatter needs at least 2 energy points")
    if args.loss < 0.0:
        raise ValidationError(f"loss must be non-negative, got {args.loss}")
    th = curves.thresholds
    energies = th[0] + mhz_to_internal(np.linspace(emin, emax, args.points))
    sigma, s11 = scattering.scan_sigma11(params, grid, energies,
                                         method=args.method,
                                         richardson=not args.no_richardson)
    e_mhz = internal_to_mhz(energies - th[0])
    p1 = np.sqrt((energies - th[0]) / scattering.kinetic_constant(params))
    csv_path = out_dir / "scatter.csv"
    report.emit_csv(
        csv_path,
        ["E_MHz", "P1_1e-22_g_cm_s", "sigma11_cm2", "S11_abs", "S11_re", "S11_im"],
        [e_mhz, report.momentum_cgs_1e22(p1), sigma,
         np.abs(s11), np.real(s11), np.imag(s11)],
    )
    outputs = [csv_path]
    sigma_lossy = None
    if args.loss > 0.0:
        sigma_lossy = scattering.lossy_convolve(energies, sigma,
                                                mhz_to_internal(args.loss))
        lossy_path = out_dir / "scatter_lossy.csv"
        report.emit_csv(lossy_path, ["E_MHz", "sigma11_cm2"], [e_mhz, sigma_lossy])
        outputs.append(lossy_path)
    if not args.no_figure:
        fig_path = out_dir / "scatter.png"
        report.figure_scatter(fig_path, e_mhz, sigma, sigma_lossy, args.loss or None)
        outputs.append(fig_path)
    outputs.append(_manifest(out_dir, args, config, outputs, t0))
    return EXIT_OK


def cmd_resonances(args) -> int:
    t0 = time.time()
    params, grid, out_dir, config = _setup(args)
    curves, _ = nonadiabatic.tables_for(params, grid)
    th = curves.thresholds
    window = None
    if args.window is not None:
        lo, hi = (th[0] + mhz_to_internal(args.window[0]),
                  th[0] + mhz_to_internal(args.window[1]))
        if not hi > lo:
            raise ValidationError("empty resonance window")
        window = (lo, min(hi, th[1] - 1e-9 * (th[1] - th[0])))
    seeds = resonance.closed_channel_levels(params, grid, e_window=window)
    if len(seeds) > args.max_seeds:
        seeds = seeds[-args.max_seeds:]
    poles = resonance.find_poles(params, grid, seeds)
    rows = [{"e_r_MHz": internal_to_mhz(r.e_r - th[0]),
             "gamma_r_MHz": internal_to_mhz(r.gamma_r),
             "kind": r.kind} for r in poles]
    json_path = out_dir / "resonances.json"
    report.write_json(json_path, rows)
    outputs = [json_path]
    conv = [r for r in poles if r.kind == "complex-pole"]
    print(f"{len(conv)} converged poles of {len(poles)} seeds")
    if not args.no_figure:
        fig_path = out_dir / "resonances.png"
        report.figure_resonances(
            fig_path,
            [internal_to_mhz(r.e_r - th[0]) for r in conv],
            [internal_to_mhz(r.gamma_r) for r in conv])
        outputs.append(fig_path)
    outputs.append(_manifest(out_dir, args, config, outputs, t0))
    return EXIT_OK


def cmd_levels(args) -> int:
    t0 = time.time()
    params, grid, out_dir, config = _setup(args)
    thetas = np.linspace(0.0, np.pi, args.theta_points + 1)
    rows = {"theta_rad": [], "v": [], "e_v_MHz": [], "shift_MHz": [], "width_MHz": []}
    for theta in thetas:
        _, _, levels = bound_states.levels_for_orientation(
            params, grid, float(theta), args.symmetry)
        for lev in levels:
            rows["theta_rad"].append(theta)
            rows["v"].append(float(lev.v))
            rows["e_v_MHz"].append(internal_to_mhz(lev.e_v))
            rows["shift_MHz"].append(internal_to_mhz(lev.lzs_shift))
            rows["width_MHz"].append(internal_to_mhz(lev.lzs_width))
    csv_path = out_dir / f"levels_{args.symmetry}.csv"
    report.emit_csv(csv_path, list(rows),
                    [np.asarray(rows[k], dtype=float) for k in rows])
    outputs = [csv_path]
    if not args.no_figure:
        fig_path = out_dir / f"levels_{args.symmetry}.png"
        report.figure_levels(fig_path, np.asarray(rows["theta_rad"]),
                             np.asarray(rows["e_v_MHz"]), args.symmetry)
        outputs.append(fig_path)
    outputs.append(_manifest(out_dir, args, config, outputs, t0))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    t0 = time.time()
    params, grid, out_dir, config = _setup(args)
    if args.gamma_eff <= 0.0:
        raise ValidationError(f"gamma-eff must be positive, got {args.gamma_eff}")
    g = bound_states.levels_grid(grid)
    curves = adiabatic.diagonalize_curves(params, g, check_flatness=False)
    well = adiabatic.characterize_well(curves)
    if well is None:
        raise ValidationError("the omega_2 curve holds no well for these parameters")
    intensities = {}
    cfg = None
    for sym in ("sigma", "pi"):
        cfg = spectrum.default_config(params, sym, mhz_to_internal(args.gamma_eff),
                                      well.depth, n_theta=args.theta_points,
                                      n_omega=args.omega_points)
        intensities[sym] = spectrum.spectrum_for(params, grid, cfg).intensity
    omega_mhz = report.mhz(cfg.omega_grid)
    csv_path = out_dir / "spectrum.csv"
    report.emit_csv(csv_path, ["omega_MHz_rel", "I_sigma", "I_pi"],
                    [omega_mhz, intensities["sigma"], intensities["pi"]])
    outputs = [csv_path]
    if not args.no_figure:
        fig_path = out_dir / "spectrum.png"
        report.figure_spectrum(fig_path, omega_mhz, intensities["sigma"],
                               intensities["pi"])
        outputs.append(fig_path)
    outputs.append(_manifest(out_dir, args, config, outputs, t0))
    return EXIT_OK


def cmd_validate(args) -> int:
    t0 = time.time()
    params, grid, out_dir, config = _setup(args)
    checks = []

    curves = adiabatic.diagonalize_curves(
        params, RadialGrid(grid.r_wall, grid.r_infinity, 8193))
    limits = adiabatic.check_limits(params, curves)
    ok = (limits["omega2_small_r"] < limits["tol_small_r"]
          and limits["omega2_large_r"] < limits["tol_large_r"])
    checks.append(("analytic small/large separation limits", ok))

    trace = np.max(np.abs(curves.omega.sum(axis=0)
                          - (params.omega_A + params.omega_B + params.omega_c)))
    checks.append(("trace preservation", trace < 1e-10 * params.omega_A))

    overlaps = np.einsum("kji,kji->ki", curves.chi[1:], curves.chi[:-1])
    checks.append(("eigenvector phase continuity", bool(np.all(overlaps > 0.0))))

    curves_full, tabs = nonadiabatic.tables_for(params, grid)
    well = adiabatic.characterize_well(curves_full)
    checks.append(("omega_2 well exists", well is not None))
    if well is not None:
        th = curves_full.thresholds
        e_mid = th[0] + 0.5 * (th[1] - th[0] + well.min_value
                               + params.omega_A - th[0])
        sm = scattering.solve_at_energy(e_mid, curves_full, tabs.w, grid)
        checks.append(("open-block unitarity at mid-well energy",
                       scattering.unitarity_defect(sm.s_open) < 1e-6))

    failed = [name for name, ok in checks if not ok]
    for name, ok in checks:
        print(f"[{'ok' if ok else 'FAIL'}] {name}")
    _manifest(out_dir, args, config, [], t0)
    if failed:
        raise NumericalError(f"validation failed: {failed}")
    print(f"all {len(checks)} checks passed in {time.time() - t0:.1f}s")
    return EXIT_OK


_HANDLERS = {
    "potentials": cmd_potentials,
    "sweep-kappa": cmd_sweep_kappa,
    "sweep-detuning": cmd_sweep_detuning,
    "scatter": cmd_scatter,
    "resonances": cmd_resonances,
    "levels": cmd_levels,
    "spectrum": cmd_spectrum,
    "validate": cmd_validate,
}


def run(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())
