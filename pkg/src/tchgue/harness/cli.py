"""Command-line interface.

Subcommands: phase | density | correlate | kernel-eval | mc | verify |
converge.  Exit codes: 0 success, 1 configuration error, 2 numerical
conditioning failure, 3 verification-suite failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from .. import __version__
from .. import finitekernel as fk
from .. import microkernel as mk
from .. import montecarlo as mc
from .. import verify as verify_mod
from ..errors import (
    ConditioningError,
    ConfigError,
    DomainError,
    IllConditionedSpectrumError,
    IntegrationFailureError,
    PhaseError,
    TchgueError,
)
from ..phase import Phase, PhaseInfo, condensate, critical_value
from . import config as cfg
from . import report
from .presets import parse_spectrum
from .table import ResultTable


def _grid(config):
    g = config["grid"]
    return np.linspace(float(g["zeta_min"]), float(g["zeta_max"]), int(g["zeta_points"]))


def _model_params(config, n=None, with_temperature=True, masses=None):
    model = config["model"]
    n = int(n if n is not None else model["N"])
    temp = None
    if with_temperature and model["spectrum"]:
        temp = parse_spectrum(str(model["spectrum"]), n)
    return fk.FiniteEnsembleParams(
        N=n,
        nu=int(model["nu"]),
        masses=tuple(masses if masses is not None else model["masses"]),
        temperature=temp,
    )


def _micro_params(config):
    model = config["model"]
    return mk.MicroParams(nu=int(model["nu"]), mu=tuple(model["masses"]))


def cmd_phase(config) -> ResultTable:
    scan = config["scan"]
    model = config["model"]
    problems = []
    cfg.validate_model(config, problems, need_spectrum=scan["variable"] is None)
    cfg.finish_validation(problems)
    n = int(model["N"])
    tol = float(model["tol"])
    rows = []
    if scan["variable"] is not None:
        if scan["variable"] != "uniform_a":
            raise ConfigError(f"phase scan supports variable 'uniform_a', got {scan['variable']!r}")
        lo, hi, pts = float(scan["from"]), float(scan["to"]), int(scan["points"])
        values = (
            np.geomspace(lo, hi, pts) if scan["scale"] == "log" else np.linspace(lo, hi, pts)
        )
        for a in values:
            spec = parse_spectrum(f"uniform({float(a)!r})", n)
            info = condensate(spec, tol=tol)
            rows.append((float(a), info.t_c, info.xi, info.phase.value))
        return ResultTable(["a", "t_c", "xi", "phase"], rows)
    spec = parse_spectrum(str(model["spectrum"]), n)
    info = condensate(spec, tol=tol)
    rows.append((0, info.t_c, info.xi, info.phase.value))
    return ResultTable(["index", "t_c", "xi", "phase"], rows)


def cmd_density(config) -> ResultTable:
    problems = []
    cfg.validate_model(config, problems)
    cfg.finish_validation(problems)
    model = config["model"]
    zetas = _grid(config)
    micro = _micro_params(config)
    columns = ["zeta", "density_limit"]
    series = [[mk.density(micro, float(z)) for z in zetas]]
    n_list = cfg.parse_int_list(config["grid"]["n_list"])
    if n_list and not model["spectrum"]:
        raise ConfigError("finite-N density columns need model.spectrum")
    for n in n_list:
        params = _model_params(config, n=n, masses=())
        info = condensate(params.temperature, tol=float(model["tol"]))
        if info.phase is not Phase.BROKEN:
            raise ConfigError(
                f"spectrum is not in the broken phase at N={n}: t_c = {info.t_c}"
            )
        series.append(
            [
                fk.micro_density_finite(params, info, float(z), mu=tuple(model["masses"]))
                for z in zetas
            ]
        )
        columns.append(f"density_N{n}")
    rows = [tuple([float(z)] + [s[i] for s in series]) for i, z in enumerate(zetas)]
    return ResultTable(columns, rows)


def cmd_correlate(config) -> ResultTable:
    problems = []
    cfg.validate_model(config, problems)
    cfg.finish_validation(problems)
    pts_block = config["points"]
    tuples = cfg.parse_tuples(pts_block["tuples"])
    if not tuples:
        raise ConfigError("correlate needs point tuples (points.tuples or --points)")
    k = len(tuples[0])
    if any(len(t) != k for t in tuples):
        raise ConfigError("all point tuples must have the same length")
    mode = pts_block["mode"]
    if mode == "micro":
        if k > 4:
            raise ConfigError(f"limiting correlations support k <= 4, got {k}")
        micro = _micro_params(config)
        evaluate = lambda t: mk.rho_k(micro, t)
        r1 = lambda z: mk.density(micro, z)
    elif mode == "finite":
        if k > 6:
            raise ConfigError(f"finite-N correlations support k <= 6, got {k}")
        params = _model_params(config)
        evaluate = lambda t: fk.correlation_finite(params, t)
        r1 = lambda z: fk.correlation_finite(params, [z])
    else:
        raise ConfigError(f"points.mode must be 'micro' or 'finite', got {mode!r}")
    columns = [f"x{i+1}" for i in range(k)] + ["R_k"]
    connected = k == 2
    if connected:
        columns.append("connected")
    rows = []
    for t in tuples:
        value = evaluate(t)
        row = list(t) + [value]
        if connected:
            row.append(value - r1(t[0]) * r1(t[1]))
        rows.append(tuple(row))
    return ResultTable(columns, rows)


def cmd_kernel_eval(config) -> ResultTable:
    problems = []
    cfg.validate_model(config, problems)
    cfg.finish_validation(problems)
    pts_block = config["points"]
    tuples = cfg.parse_tuples(pts_block["tuples"])
    if not tuples or any(len(t) != 2 for t in tuples):
        raise ConfigError("kernel-eval needs pairs 'x,y;x,y;...'")
    mode = pts_block["mode"]
    rows = []
    if mode == "micro":
        micro = _micro_params(config)
        for zeta, eta in tuples:
            small = abs(zeta - eta) <= 1e-6 * max(zeta, eta)
            kz = mk.density(micro, zeta) if small else mk.kernel_zero_temp(micro, zeta, eta)
            rows.append((zeta, eta, mk.kernel_unquenched(micro, zeta, eta), kz))
        return ResultTable(["zeta", "eta", "kernel_bordered", "kernel_zero_temp"], rows)
    if mode != "finite":
        raise ConfigError(f"points.mode must be 'micro' or 'finite', got {mode!r}")
    params = _model_params(config)
    if params.temperature is None:
        for x, y in tuples:
            rows.append(
                (x, y, fk.massive_kernel_zero_temp(params, x, y), fk.massive_kernel_alt(params, x, y))
            )
        return ResultTable(["x", "y", "kernel", "kernel_alt"], rows)
    kernel = fk.quenched_kernel_temp if params.n_f == 0 else fk.unquenched_kernel_temp
    for x, y in tuples:
        rows.append((x, y, kernel(params, x, y)))
    return ResultTable(["x", "y", "kernel"], rows)


def _mc_phase_info(params, tol=1e-14) -> PhaseInfo:
    if params.temperature is None:
        return PhaseInfo(t_c=math.inf, xi=1.0, phase=Phase.BROKEN)
    return condensate(params.temperature, tol=tol)


def _analytic_bin_density(params, info, edges, microscopic, masses_micro):
    """Simpson 3-point average of the analytic density on each bin."""
    out = np.empty(len(edges) - 1)

    def rho(z):
        if z <= 0.0:
            return 0.0
        if not microscopic:
            return fk.correlation_finite(params, [z])
        if params.temperature is None:
            # zero temperature: Xi = 1, hard-edge map x = z^2 / (4N)
            x = z * z / (4.0 * params.N)
            return 2.0 * z / (4.0 * params.N) * fk.correlation_finite(params, [x])
        quenched = fk.FiniteEnsembleParams(
            N=params.N, nu=params.nu, temperature=params.temperature
        )
        return fk.micro_density_finite(quenched, info, z, mu=masses_micro)

    for i in range(len(out)):
        lo, hi = edges[i], edges[i + 1]
        mid = 0.5 * (lo + hi)
        out[i] = (rho(lo) + 4.0 * rho(mid) + rho(hi)) / 6.0
    return out


def cmd_mc(config) -> ResultTable:
    problems = []
    cfg.validate_model(config, problems)
    mc_block = config["mc"]
    if int(mc_block["samples"]) < 1:
        problems.append("mc.samples must be >= 1")
    cfg.finish_validation(problems)
    params = _model_params(config)
    sampler = mc.SamplerConfig(
        params=params,
        n_samples=int(mc_block["samples"]),
        seed=int(mc_block["seed"]),
        workers=int(mc_block["workers"]),
    )
    microscopic = bool(mc_block["microscopic"])
    info = _mc_phase_info(params, tol=float(config["model"]["tol"]))
    scaling = None
    if microscopic:
        if info.phase is not Phase.BROKEN:
            raise PhaseError(f"microscopic binning needs the broken phase, t_c = {info.t_c}")
        scaling = (fk.ScalingMap(N=params.N, xi=info.xi), info)
        edges = np.linspace(0.0, 12.0, int(mc_block["bins"]) + 1)
    else:
        edges = None
    hist = mc.density_histogram(sampler, edges=edges, scaling=scaling)
    columns = ["bin_lo", "bin_hi", "density", "stderr", "n_eff"]
    density = hist.density
    data = [
        hist.edges[:-1],
        hist.edges[1:],
        density,
        hist.stderr,
        hist.n_eff,
    ]
    meta_extra = {
        "n_samples": hist.n_samples,
        "discard_rate": hist.n_discarded / sampler.n_samples,
        "weight_total": hist.weight_total,
        "truncated_mass": hist.truncated_mass,
        "histogram_mass": hist.mass,
    }
    if bool(mc_block["overlay"]):
        # Reweighted runs: the sampler masses are raw; the analytic overlay
        # for microscopic binning needs them in microscopic units.
        masses_micro = tuple(
            2.0 * m * math.sqrt(params.N * info.xi) for m in params.masses
        )
        analytic = _analytic_bin_density(params, info, hist.edges, microscopic, masses_micro)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(hist.stderr > 0, (density - analytic) / hist.stderr, 0.0)
        columns += ["analytic", "zscore"]
        data += [analytic, z]
        meta_extra["fraction_within_3sigma"] = float(
            np.mean(np.abs(z[hist.stderr > 0]) <= 3.0)
        )
    rows = [tuple(float(col[i]) for col in data) for i in range(len(hist.edges) - 1)]
    table = ResultTable(columns, rows)
    table.metadata.update(meta_extra)
    return table


def cmd_verify(config) -> ResultTable:
    overrides = config["verify"]["tolerances"] or {}
    results = verify_mod.run_suite()
    rows = []
    failures = 0
    for res in results:
        tol = float(overrides.get(res.name, res.tolerance))
        passed = res.max_deviation <= tol
        if not passed:
            failures += 1
        rows.append(
            (res.name, res.max_deviation, tol, "pass" if passed else "FAIL", round(res.seconds, 3))
        )
    table = ResultTable(
        ["identity", "max_deviation", "tolerance", "status", "seconds"], rows
    )
    table.metadata["n_checks"] = len(rows)
    table.metadata["n_failed"] = failures
    return table


def cmd_converge(config) -> ResultTable:
    problems = []
    cfg.validate_model(config, problems, need_spectrum=True)
    n_list = cfg.parse_int_list(config["grid"]["n_list"]) or [16, 32, 64, 128]
    cfg.finish_validation(problems)
    zetas = _grid(config)
    micro = _micro_params(config)
    limit = np.array([mk.density(micro, float(z)) for z in zetas])
    rows = []
    previous = None
    monotone = True
    for n in n_list:
        params = _model_params(config, n=n, masses=())
        info = condensate(params.temperature, tol=float(config["model"]["tol"]))
        if info.phase is not Phase.BROKEN:
            raise ConfigError(f"spectrum not in the broken phase at N={n}: t_c={info.t_c}")
        finite = np.array(
            [
                fk.micro_density_finite(params, info, float(z), mu=tuple(config["model"]["masses"]))
                for z in zetas
            ]
        )
        err = float(np.max(np.abs(finite - limit)))
        if previous is not None and err >= previous:
            monotone = False
        previous = err
        rows.append((n, err))
    table = ResultTable(["N", "sup_norm_error"], rows)
    table.metadata["monotone_decreasing"] = monotone
    return table


_COMMANDS = {
    "phase": cmd_phase,
    "density": cmd_density,
    "correlate": cmd_correlate,
    "kernel-eval": cmd_kernel_eval,
    "mc": cmd_mc,
    "verify": cmd_verify,
    "converge": cmd_converge,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--seed", type=int, help="RNG seed (mc)")
    common.add_argument("--workers", type=int, help="worker processes (mc)")
    common.add_argument("--tol", type=float, help="condensate bisection tolerance")
    common.add_argument("--N", type=int, dest="n_size", help="matrix size N")
    common.add_argument("--nu", type=int, help="topology index")
    common.add_argument("--masses", help="comma-separated flavour masses")
    common.add_argument("--spectrum", help="temperature spectrum preset or list")
    common.add_argument("--no-plot", action="store_true", help="skip the PNG report")

    parser = argparse.ArgumentParser(
        prog="tchgue",
        description="Finite-temperature chiral random-matrix spectra: kernels, "
        "limits, Monte Carlo and identity verification.",
    )
    parser.add_argument("--version", action="version", version=f"tchgue {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase", parents=[common], help="critical value and condensate")
    p.add_argument("--scan-from", type=float)
    p.add_argument("--scan-to", type=float)
    p.add_argument("--scan-points", type=int)
    p.add_argument("--scan-scale", choices=("linear", "log"))

    p = sub.add_parser("density", parents=[common], help="microscopic densities")
    _grid_flags(p)

    p = sub.add_parser("correlate", parents=[common], help="k-point correlations")
    p.add_argument("--points", help="tuples 'a,b;c,d'")
    p.add_argument("--mode", choices=("micro", "finite"))

    p = sub.add_parser("kernel-eval", parents=[common], help="kernel values")
    p.add_argument("--points", help="pairs 'x,y;x,y'")
    p.add_argument("--mode", choices=("micro", "finite"))

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo sampling")
    p.add_argument("--samples", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--raw-bins", action="store_true", help="bin in raw x instead of zeta")
    p.add_argument("--overlay", action="store_true", help="add the analytic density column")

    sub.add_parser("verify", parents=[common], help="identity and equivalence suite")

    p = sub.add_parser("converge", parents=[common], help="finite-N convergence study")
    _grid_flags(p)

    return parser


def _grid_flags(p):
    p.add_argument("--zeta-min", type=float)
    p.add_argument("--zeta-max", type=float)
    p.add_argument("--zeta-points", type=int)
    p.add_argument("--n-list", help="comma-separated finite sizes")


def _resolve(args) -> dict:
    config = cfg.load_config(args.config)
    cfg.apply_flag(config, "model", "N", args.n_size)
    cfg.apply_flag(config, "model", "nu", args.nu)
    if args.masses is not None:
        config["model"]["masses"] = cfg.parse_float_list(args.masses)
    cfg.apply_flag(config, "model", "spectrum", args.spectrum)
    cfg.apply_flag(config, "output", "path", args.out)
    cfg.apply_flag(config, "output", "format", args.format)
    if args.no_plot:
        config["output"]["plot"] = False
    cfg.apply_flag(config, "model", "tol", args.tol)
    cfg.apply_flag(config, "mc", "seed", args.seed)
    cfg.apply_flag(config, "mc", "workers", args.workers)
    for name, block, key in (
        ("scan_from", "scan", "from"),
        ("scan_to", "scan", "to"),
        ("scan_points", "scan", "points"),
        ("scan_scale", "scan", "scale"),
        ("zeta_min", "grid", "zeta_min"),
        ("zeta_max", "grid", "zeta_max"),
        ("zeta_points", "grid", "zeta_points"),
        ("samples", "mc", "samples"),
        ("bins", "mc", "bins"),
        ("mode", "points", "mode"),
    ):
        if hasattr(args, name):
            cfg.apply_flag(config, block, key, getattr(args, name))
    if getattr(args, "n_list", None) is not None:
        config["grid"]["n_list"] = cfg.parse_int_list(args.n_list)
    if getattr(args, "points", None) is not None:
        config["points"]["tuples"] = cfg.parse_tuples(args.points)
    if getattr(args, "overlay", False):
        config["mc"]["overlay"] = True
    if getattr(args, "raw_bins", False):
        config["mc"]["microscopic"] = False
    if getattr(args, "scan_from", None) is not None:
        config["scan"]["variable"] = "uniform_a"
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        config = _resolve(args)
        table = _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, PhaseError) as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return 1
    except (ConditioningError, IllConditionedSpectrumError, IntegrationFailureError) as exc:
        print(f"numerical conditioning failure: {exc}", file=sys.stderr)
        return 2
    except TchgueError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 2

    metadata = {
        "tool": f"tchgue {__version__}",
        "command": args.command,
        "config": cfg.resolved_json(config, args.command),
    }
    metadata.update(table.metadata)
    metadata["wall_seconds"] = round(time.perf_counter() - started, 3)
    table.metadata = metadata

    out_path = config["output"]["path"]
    fmt = config["output"]["format"]
    table.write(out_path, fmt)
    if out_path and config["output"]["plot"]:
        png = os.path.splitext(out_path)[0] + ".png"
        if report.render(args.command, table, png):
            print(f"wrote {out_path} and {png}", file=sys.stderr)

    if args.command == "verify" and table.metadata.get("n_failed"):
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
