"""Configuration-driven command line front end.

Subcommands build models, run the Lanczos pipeline, propagate chain
dynamics, extract structure functions, and sweep parameter grids. Every
run writes full-precision CSV tables, JSON reports, rendered PNG figures,
and a manifest listing each artifact with its checksum.
"""

from __future__ import annotations

import argparse
import sys
import warnings as _warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import plotting
from .analysis import build_report, growth_rate_bound, predict_alpha
from .config import ConfigError, RunConfig, build_model, load_config
from .core import ThermalEnsemble
from .dynamics import correlation_function, krylov_complexity, propagate_chain
from .lanczos import lanczos_run
from .output import ManifestWriter, write_csv, write_json, write_matrix_csv
from .spinchain import extract_structure_function


def _lanczos_options(cfg: RunConfig) -> dict:
    lz = cfg.lanczos
    return {
        "reorthogonalize": lz["reorthogonalize"],
        "precision": lz["precision"],
        "termination_tol": lz["termination_tol"],
        "floor_policy": lz["floor_policy"],
    }


def _build(cfg: RunConfig, manifest: ManifestWriter):
    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always")
        spectrum, op, declared = build_model(cfg.model, cfg.seed)
    for w in caught:
        manifest.warn(f"model: {w.message}")
    return spectrum, op, declared


def _window(cfg: RunConfig):
    win = cfg.analysis["window"]
    return tuple(int(x) for x in win) if win is not None else None


def _run_lanczos(cfg: RunConfig, spectrum, op):
    ens = ThermalEnsemble.from_spectrum(spectrum, cfg.beta)
    seq = lanczos_run(op, spectrum, ens, cfg.lanczos["n_max"], **_lanczos_options(cfg))
    return ens, seq


def cmd_model(cfg: RunConfig, out: Path, plot: bool, jobs: int) -> int:
    manifest = ManifestWriter(out, cfg.echo())
    spectrum, op, _ = _build(cfg, manifest)
    manifest.add(write_csv(
        out / "spectrum.csv",
        ["index", "energy"],
        ((i, e) for i, e in enumerate(spectrum.energies)),
    ))
    manifest.add(write_matrix_csv(out / "operator.csv", op.elements))
    if op.below_floor is not None and np.any(op.below_floor):
        ll, kk = np.nonzero(op.below_floor)
        manifest.add(write_csv(out / "operator_floor.csv", ["l", "k"], zip(ll, kk)))
        manifest.warn(f"{ll.size} matrix elements below the precision floor")
    if plot:
        manifest.add(plotting.render_model(out / "fig_model.png", spectrum, op))
    manifest.write()
    return 0


def cmd_lanczos(cfg: RunConfig, out: Path, plot: bool, jobs: int) -> int:
    manifest = ManifestWriter(out, cfg.echo())
    spectrum, op, declared = _build(cfg, manifest)
    _, seq = _run_lanczos(cfg, spectrum, op)
    b = seq.effective_coefficients
    manifest.add(write_csv(out / "lanczos.csv", ["n", "b_n"], ((n + 1, x) for n, x in enumerate(b))))
    if seq.terminated_at is not None:
        manifest.warn(f"sequence terminated at n = {seq.terminated_at} (Krylov space exhausted)")
    report = build_report(seq, declared, cfg.beta, _window(cfg))
    manifest.add(write_json(out / "growth_report.json", report.to_dict()))
    manifest.warn(*seq.warnings)
    if plot:
        manifest.add(plotting.render_lanczos(out / "fig_lanczos.png", b, report))
    manifest.write()
    return 0


def cmd_dynamics(cfg: RunConfig, out: Path, plot: bool, jobs: int) -> int:
    manifest = ManifestWriter(out, cfg.echo())
    spectrum, op, _ = _build(cfg, manifest)
    ens, seq = _run_lanczos(cfg, spectrum, op)
    dyn = cfg.dynamics
    times = np.linspace(0.0, dyn["t_max"], dyn["t_points"])
    wf = propagate_chain(
        seq,
        times,
        method=dyn["method"],
        auto_extend=dyn["auto_extend"],
        boundary_tol=dyn["boundary_tol"],
    )
    manifest.warn(*wf.warnings)
    ck = krylov_complexity(wf)
    corr = correlation_function(op, spectrum, ens, times,
                                floor_policy=cfg.lanczos["floor_policy"])
    manifest.add(write_csv(out / "complexity.csv", ["t", "C_K"], zip(times, ck)))
    manifest.add(write_csv(out / "correlation.csv", ["t", "C"], zip(times, corr)))
    drift = float(np.max(np.abs(wf.norms() - 1.0)))
    manifest.extra["norm_drift"] = drift
    if drift > 1e-8:
        manifest.warn(f"chain norm drift {drift:.2e} exceeds 1e-8")
    if plot:
        manifest.add(plotting.render_dynamics(out / "fig_dynamics.png", times, corr, ck))
    manifest.write()
    return 0


def cmd_structure(cfg: RunConfig, out: Path, plot: bool, jobs: int) -> int:
    manifest = ManifestWriter(out, cfg.echo())
    spectrum, op, _ = _build(cfg, manifest)
    ana = cfg.analysis
    fit = extract_structure_function(
        op,
        spectrum,
        ebar_window=tuple(ana["ebar_window"]) if ana["ebar_window"] else None,
        bin_width=ana["bin_width"],
        omega_range=tuple(ana["omega_range"]) if ana["omega_range"] else None,
        min_pairs=ana["min_pairs"],
    )
    manifest.warn(*fit.warnings)
    manifest.add(write_csv(
        out / "structure_function.csv",
        ["omega_center", "amplitude", "count"],
        zip(fit.omega_centers, fit.amplitudes, fit.counts),
    ))
    alpha_pred = predict_alpha(fit, cfg.beta)
    manifest.add(write_json(out / "growth_report.json", {
        "classification": {
            "decay_class": fit.classified,
            "params": fit.params,
            "fit_quality": fit.fit_quality,
            "window": list(fit.window),
            "bin_width": fit.bin_width,
            "flank": list(fit.flank) if fit.flank else None,
        },
        "alpha_predicted": alpha_pred,
        "alpha_bound": growth_rate_bound(cfg.beta),
    }))
    if plot:
        manifest.add(plotting.render_structure(out / "fig_structure.png", fit))
    manifest.write()
    return 0


def _sweep_apply(cfg: RunConfig, parameter: str, value) -> RunConfig:
    echo = cfg.echo()
    if parameter == "beta":
        echo["beta"] = value
    else:
        key = parameter.removeprefix("model.")
        if key not in echo["model"]:
            raise ConfigError(f"sweep parameter {parameter!r} not present in the model config")
        echo["model"][key] = value
    from .config import validate_config

    return validate_config(echo)


def _sweep_point(payload):
    idx, echo, parameter, value = payload
    from .config import validate_config

    cfg = _sweep_apply(validate_config(echo), parameter, value)
    spectrum, op, declared = build_model(cfg.model, cfg.seed)
    _, seq = _run_lanczos(cfg, spectrum, op)
    report = build_report(seq, declared, cfg.beta, _window(cfg))
    return idx, value, report, seq.terminated_at


def cmd_sweep(cfg: RunConfig, out: Path, plot: bool, jobs: int) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep command requires a 'sweep' config section")
    manifest = ManifestWriter(out, cfg.echo())
    parameter = cfg.sweep["parameter"]
    values = cfg.sweep["values"]
    payloads = [(i, cfg.echo(), parameter, v) for i, v in enumerate(values)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = sorted(pool.map(_sweep_point, payloads))
    else:
        results = [_sweep_point(p) for p in payloads]

    rows = []
    alphas, bounds = [], []
    for _, value, report, terminated in results:
        rows.append((
            value,
            report.alpha_fit,
            report.alpha_stderr,
            report.alpha_bound,
            report.saturation_ratio,
            report.exponent,
            terminated if terminated is not None else "",
        ))
        alphas.append(report.alpha_fit)
        bounds.append(report.alpha_bound)
    manifest.add(write_csv(
        out / "sweep.csv",
        [parameter, "alpha_fit", "alpha_stderr", "alpha_bound", "saturation_ratio",
         "exponent", "terminated_at"],
        rows,
    ))
    if plot:
        manifest.add(plotting.render_sweep(out / "fig_sweep.png", values, alphas, bounds, parameter))
    manifest.write()
    return 0


_COMMANDS = {
    "model": cmd_model,
    "lanczos": cmd_lanczos,
    "dynamics": cmd_dynamics,
    "structure": cmd_structure,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opgrowth",
        description="Operator growth pipelines: models, Lanczos coefficients, "
        "Krylov dynamics, structure functions, parameter sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", default=None, help="output directory (default: runs/<command>)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
        p.add_argument(
            "--precision",
            choices=("double", "extended"),
            default=None,
            help="override lanczos.precision",
        )
        p.add_argument(
            "--no-plot",
            dest="plot",
            action="store_false",
            help="skip figure rendering",
        )
        p.set_defaults(plot=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.precision is not None:
            cfg.lanczos["precision"] = args.precision
        out = Path(args.out or cfg.output_dir or Path("runs") / args.command)
        return _COMMANDS[args.command](cfg, out, args.plot, max(1, args.jobs))
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
