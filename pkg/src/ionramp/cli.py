"""Command-line front end.

Subcommands
-----------
modes       normal-mode table for the configured chain
design      build (and for kind=shooting, optimize) a ramp, write its CSV
verify      integrate the full chain through the ramp, score excitation
sweep       excitation versus ramp duration for the configured protocol
reproduce   canned sweep bundles (fig1 | fig4 | fig7 data sets)

All output files are CSV with '#'-prefixed metadata headers and fixed
number formatting, so identical configs give byte-identical files.

Exit codes: 0 success, 2 optimizer stopped before convergence,
3 protocol invalid (trap would invert), 4 configuration error,
1 any other simulation failure.
"""

import argparse
import math
import os
import sys

from . import __version__
from .config import config_hash, load_config, parse_config, with_overrides
from .chain_model import Chain, normal_mode_basis
from .errors import ConfigError, InvalidProtocolError, IonRampError
from .protocol_design import (
    BoundarySpec,
    cosine_protocol,
    export_protocol_csv,
    linear_protocol,
    make_smoothstep_ansatz,
    omega_from_rho,
)
from .auxiliary_dynamics import (
    harmonic_excitation,
    optimize_free_params,
    report_text,
)
from .lab_dynamics import make_protocol_family, simulate_protocol, sweep_tf

DEFAULT_CONFIG = """\
[chain]
species = Ca40
count = 2

[trap]
omega0_mhz = 1.2
gamma_squared = 3.0

[protocol]
kind = smoothstep
tf_us = 5.0
"""

# default duration grids [us] for the reproduce bundles, overridable
# via tf_sweep_us in the config
REPRODUCE_GRIDS = {
    "fig1": (2.0, 2.5, 3.5, 5.0, 8.0),
    "fig4": (3.0, 4.4, 6.0, 9.0, 14.0, 20.0),
    "fig7": (2.0, 2.5, 3.5, 5.0, 10.0, 20.0),
}


def _header(cfg, extra=None):
    lines = ["# ionramp %s" % __version__,
             "# config_hash: %s" % config_hash(cfg)]
    for key in sorted(extra or {}):
        lines.append("# %s: %s" % (key, (extra or {})[key]))
    return lines


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_csv(path, header_lines, column_names, rows):
    lines = list(header_lines)
    lines.append(",".join(column_names))
    lines.extend(rows)
    _write_text(path, "\n".join(lines) + "\n")


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def _build_protocol(cfg, tf):
    """Protocol for one duration; shooting returns (protocol, result)."""
    boundary = BoundarySpec.from_gamma_squared(cfg.omega0, cfg.gamma_squared,
                                               tf)
    if cfg.kind == "linear":
        return linear_protocol(boundary), None
    if cfg.kind == "cosine":
        return cosine_protocol(boundary), None
    chain = cfg.chain()
    basis = normal_mode_basis(chain, cfg.omega0)
    a_ref = basis.frequency_ratios[cfg.design_mode]
    if cfg.kind == "smoothstep":
        ansatz = make_smoothstep_ansatz(boundary.gamma)
        return omega_from_rho(ansatz, boundary, a_ref), None
    result = optimize_free_params(
        chain, basis, boundary, cfg.order, design_mode=cfg.design_mode,
        center_variant=cfg.energy_center, rtol=cfg.rtol, atol=cfg.atol,
        maxiter=cfg.max_iterations, maxfev=cfg.max_evaluations,
        xatol=cfg.xatol,
    )
    return result.protocol, result


def _require_single_tf(cfg, command):
    if cfg.tf is None:
        raise ConfigError("[protocol] tf_us is required for '%s' "
                          "(tf_sweep_us only drives sweeps)" % command)
    return cfg.tf


def cmd_modes(cfg, out_dir, threads):
    chain = cfg.chain()
    basis = normal_mode_basis(chain, cfg.omega0)
    ratios = basis.frequency_ratios
    freqs_mhz = ratios * cfg.omega0 / (2e6 * math.pi)

    print("normal modes, chain = %s, omega0/2pi = %g MHz"
          % (", ".join(cfg.species), cfg.omega0_mhz))
    print("%4s  %18s  %14s  eigenvector" % ("mode", "freq ratio", "freq [MHz]"))
    for m in range(chain.n):
        vec = "  ".join("%+.6f" % v for v in basis.vectors[m])
        print("%4d  %18.12f  %14.9f  %s" % (m, ratios[m], freqs_mhz[m], vec))

    columns = ["mode", "frequency_ratio", "frequency_mhz"]
    columns += ["vec_%d" % i for i in range(chain.n)]
    rows = []
    for m in range(chain.n):
        cells = ["%d" % m, "%.12e" % ratios[m], "%.12e" % freqs_mhz[m]]
        cells += ["%.12e" % v for v in basis.vectors[m]]
        rows.append(",".join(cells))
    path = os.path.join(out_dir, "modes.csv")
    _write_csv(path, _header(cfg, {"chain": " ".join(cfg.species)}),
               columns, rows)
    print("wrote %s" % path)
    return 0


def cmd_design(cfg, out_dir, threads):
    tf = _require_single_tf(cfg, "design")
    protocol, result = _build_protocol(cfg, tf)

    csv_path = os.path.join(out_dir, "protocol.csv")
    export_protocol_csv(protocol, csv_path, samples=cfg.protocol_samples,
                        metadata={"config_hash": config_hash(cfg)})
    print("wrote %s" % csv_path)

    report_path = os.path.join(out_dir, "design_report.txt")
    if result is not None:
        _write_text(report_path, report_text(result))
        print("wrote %s" % report_path)
        print("objective: %.6e quanta (converged: %s)"
              % (result.objective_quanta, result.converged))
        if not result.converged:
            print("optimizer stopped before convergence; best point kept",
                  file=sys.stderr)
            return 2
    else:
        text = ("design report\n  kind: %s\n  omega0/2pi [MHz]: %.6f\n"
                "  gamma^2: %.6f\n  tf [us]: %.6f\n  free parameters: none\n"
                % (cfg.kind, cfg.omega0_mhz, cfg.gamma_squared, tf * 1e6))
        _write_text(report_path, text)
        print("wrote %s" % report_path)
    return 0


def cmd_verify(cfg, out_dir, threads):
    tf = _require_single_tf(cfg, "verify")
    protocol, result = _build_protocol(cfg, tf)
    chain = cfg.chain()
    traj, report = simulate_protocol(chain, protocol, rtol=cfg.rtol,
                                     atol=cfg.atol, n_samples=cfg.samples)

    n = chain.n
    columns = ["t_s"] + ["q%d_m" % i for i in range(n)] \
        + ["p%d_kgms" % i for i in range(n)]
    rows = []
    for k in range(traj.t.size):
        cells = ["%.12e" % traj.t[k]]
        cells += ["%.12e" % v for v in traj.q[k]]
        cells += ["%.12e" % v for v in traj.p[k]]
        rows.append(",".join(cells))
    traj_path = os.path.join(out_dir, "trajectory.csv")
    _write_csv(traj_path, _header(cfg, {"kind": cfg.kind,
                                        "tf_us": "%.6f" % (tf * 1e6)}),
               columns, rows)

    exc_path = os.path.join(out_dir, "excitation.csv")
    meta = {
        "kind": cfg.kind,
        "tf_us": "%.6f" % (tf * 1e6),
        "total_quanta": "%.12e" % report.total_quanta,
        "total_excess_j": "%.12e" % report.total_excess,
        "anharmonic_residual_j": "%.12e" % report.residual,
        "energy_error": "%.3e" % traj.energy_error,
    }
    rows = ["%d,%.12e,%.12e" % (m, report.mode_frequencies[m] / (2e6 * math.pi),
                                report.per_mode_quanta[m])
            for m in range(n)]
    _write_csv(exc_path, _header(cfg, meta),
               ["mode", "frequency_mhz", "quanta"], rows)

    report_path = os.path.join(out_dir, "verify_report.txt")
    lines = ["verification report",
             "  kind: %s" % cfg.kind,
             "  tf [us]: %.6f" % (tf * 1e6),
             "  total excitation [quanta]: %.6e" % report.total_quanta,
             "  total excess [J]: %.6e" % report.total_excess,
             "  anharmonic residual [J]: %.6e" % report.residual,
             "  work-energy residual (relative): %.3e" % traj.energy_error]
    for m in range(n):
        lines.append("  mode %d: %.6e quanta at %.6f MHz"
                     % (m, report.per_mode_quanta[m],
                        report.mode_frequencies[m] / (2e6 * math.pi)))
    if result is not None:
        lines.append("  shooting free parameters: %s"
                     % ", ".join("%.9e" % v for v in result.free_params))
    _write_text(report_path, "\n".join(lines) + "\n")

    for path in (traj_path, exc_path, report_path):
        print("wrote %s" % path)
    print("total excitation: %.6e quanta" % report.total_quanta)
    if result is not None and not result.converged:
        return 2
    return 0


def _sweep_rows_csv(cfg, rows, n_modes):
    columns = ["tf_us", "total_quanta"]
    columns += ["mode%d_quanta" % m for m in range(n_modes)]
    columns += ["free_params", "error"]
    out = []
    for row in rows:
        cells = ["%.6f" % (row.tf * 1e6)]
        if row.error is None:
            cells.append("%.12e" % row.total_quanta)
            cells += ["%.12e" % q for q in row.per_mode_quanta]
        else:
            cells.append("")
            cells += [""] * n_modes
        cells.append(";".join("%.9e" % v for v in row.free_params))
        cells.append("" if row.error is None else
                     row.error.replace(",", ";"))
        out.append(",".join(cells))
    return columns, out


def cmd_sweep(cfg, out_dir, threads):
    if not cfg.tf_sweep_us:
        raise ConfigError("[protocol] tf_sweep_us is required for 'sweep'")
    chain = cfg.chain()
    family = make_protocol_family(
        cfg.kind, chain, cfg.omega0, cfg.gamma_squared, order=cfg.order,
        design_mode=cfg.design_mode,
        optimizer_opts=dict(center_variant=cfg.energy_center,
                            rtol=cfg.rtol, atol=cfg.atol,
                            maxiter=cfg.max_iterations,
                            maxfev=cfg.max_evaluations, xatol=cfg.xatol)
        if cfg.kind == "shooting" else None,
    )
    rows = sweep_tf(chain, family, cfg.tf_values(), rtol=cfg.rtol,
                    atol=cfg.atol, threads=threads)
    columns, csv_rows = _sweep_rows_csv(cfg, rows, chain.n)
    path = os.path.join(out_dir, "sweep_%s.csv" % cfg.kind)
    _write_csv(path, _header(cfg, {"kind": cfg.kind}), columns, csv_rows)
    print("wrote %s" % path)
    for row in rows:
        if row.error is None:
            print("  tf=%.3f us: %.6e quanta" % (row.tf * 1e6,
                                                 row.total_quanta))
        else:
            print("  tf=%.3f us: %s" % (row.tf * 1e6, row.error))
    return 0


def _reproduce_grid(cfg, figure):
    if cfg.tf_sweep_us:
        return cfg.tf_values()
    return [tf * 1e-6 for tf in REPRODUCE_GRIDS[figure]]


def cmd_reproduce(cfg, out_dir, threads, figure):
    grid = _reproduce_grid(cfg, figure)
    written = []

    if figure == "fig7":
        chain = cfg.chain()
        for kind in ("shooting", "linear", "cosine"):
            opts = dict(center_variant=cfg.energy_center, rtol=cfg.rtol,
                        atol=cfg.atol, maxiter=cfg.max_iterations,
                        maxfev=cfg.max_evaluations, xatol=cfg.xatol) \
                if kind == "shooting" else None
            family = make_protocol_family(kind, chain, cfg.omega0,
                                          cfg.gamma_squared, order=cfg.order,
                                          design_mode=cfg.design_mode,
                                          optimizer_opts=opts)
            rows = sweep_tf(chain, family, grid, rtol=cfg.rtol,
                            atol=cfg.atol, threads=threads)
            columns, csv_rows = _sweep_rows_csv(cfg, rows, chain.n)
            path = os.path.join(out_dir, "reproduce_fig7_%s.csv" % kind)
            _write_csv(path, _header(cfg, {"curve": kind}), columns, csv_rows)
            written.append(path)

    elif figure == "fig4":
        base = cfg.chain().species[0]
        for n in (2, 4, 8):
            chain = Chain(tuple([base] * n))
            family = make_protocol_family("smoothstep", chain, cfg.omega0,
                                          cfg.gamma_squared,
                                          design_mode=cfg.design_mode)
            rows = sweep_tf(chain, family, grid, rtol=cfg.rtol,
                            atol=cfg.atol, threads=threads)
            columns, csv_rows = _sweep_rows_csv(cfg, rows, n)
            path = os.path.join(out_dir, "reproduce_fig4_n%d.csv" % n)
            _write_csv(path, _header(cfg, {"curve": "N=%d" % n}),
                       columns, csv_rows)
            written.append(path)

    elif figure == "fig1":
        chain = cfg.chain()
        basis = normal_mode_basis(chain, cfg.omega0)
        shoot_rows = []
        for tf in grid:
            boundary = BoundarySpec.from_gamma_squared(cfg.omega0,
                                                       cfg.gamma_squared, tf)
            result = optimize_free_params(
                chain, basis, boundary, cfg.order,
                design_mode=cfg.design_mode,
                center_variant=cfg.energy_center, rtol=cfg.rtol,
                atol=cfg.atol, maxiter=cfg.max_iterations,
                maxfev=cfg.max_evaluations, xatol=cfg.xatol)
            harm = harmonic_excitation(chain, basis, result.protocol,
                                       center_variant=cfg.energy_center,
                                       rtol=cfg.rtol, atol=cfg.atol,
                                       analytic_design_mode=cfg.design_mode)
            _, rep = simulate_protocol(chain, result.protocol, rtol=cfg.rtol,
                                       atol=cfg.atol, n_samples=cfg.samples)
            shoot_rows.append((tf, harm["total_quanta"], rep.total_quanta))
        path = os.path.join(out_dir, "reproduce_fig1_shooting.csv")
        rows = ["%.6f,%.12e,%.12e" % (tf * 1e6, h, c)
                for tf, h, c in shoot_rows]
        _write_csv(path, _header(cfg, {"curve": "shooting"}),
                   ["tf_us", "harmonic_quanta", "classical_quanta"], rows)
        written.append(path)

        family = make_protocol_family("smoothstep", chain, cfg.omega0,
                                      cfg.gamma_squared,
                                      design_mode=cfg.design_mode)
        srows = sweep_tf(chain, family, grid, rtol=cfg.rtol, atol=cfg.atol,
                         threads=threads)
        columns, csv_rows = _sweep_rows_csv(cfg, srows, chain.n)
        path = os.path.join(out_dir, "reproduce_fig1_smoothstep.csv")
        _write_csv(path, _header(cfg, {"curve": "smoothstep"}),
                   columns, csv_rows)
        written.append(path)

    for path in written:
        print("wrote %s" % path)
    return 0


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="INI config file (defaults to a built-in "
                             "two-ion Ca40 example)")
    common.add_argument("--out", metavar="DIR",
                        help="output directory (default: config [output] dir)")
    common.add_argument("--threads", type=int, metavar="N",
                        help="sweep worker threads (default: config value)")

    parser = argparse.ArgumentParser(
        prog="ionramp",
        description="Design and verify fast excitation-free trap ramps "
                    "for ion chains.")
    parser.add_argument("--version", action="version",
                        version="ionramp %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("modes", parents=[common],
                   help="normal-mode table for the configured chain")
    sub.add_parser("design", parents=[common],
                   help="build or optimize a ramp and export it")
    sub.add_parser("verify", parents=[common],
                   help="full classical verification of the configured ramp")
    sub.add_parser("sweep", parents=[common],
                   help="excitation versus ramp duration")
    rep = sub.add_parser("reproduce", parents=[common],
                         help="canned data-set bundles")
    rep.add_argument("figure", choices=sorted(REPRODUCE_GRIDS))
    return parser


_COMMANDS = {
    "modes": cmd_modes,
    "design": cmd_design,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = parse_config(DEFAULT_CONFIG)
        if args.out:
            cfg = with_overrides(cfg, out_dir=args.out)
        if args.threads:
            cfg = with_overrides(cfg, threads=args.threads)
        out_dir = _ensure_out(cfg.out_dir)
        if args.command == "reproduce":
            return cmd_reproduce(cfg, out_dir, cfg.threads, args.figure)
        return _COMMANDS[args.command](cfg, out_dir, cfg.threads)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 4
    except InvalidProtocolError as exc:
        print("invalid protocol: %s" % exc, file=sys.stderr)
        return 3
    except IonRampError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
