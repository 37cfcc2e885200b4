"""Command-line entry points and run-artifact persistence.

Subcommands: run | sweep | oracle | inequalities | gevrey.  Each accepts
--config PATH (INI-style sections named after the subcommand) with every key
overridable by a command-line flag (flag wins).  All outputs are deterministic
for a fixed config: CSV files start with comment headers recording the
resolved configuration and a schema version, and reruns are byte-identical.

Exit codes: 0 success, 1 tolerance/assertion failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .discretize import BoundaryCondition, Grid
from .harness import (
    ResolutionPolicy,
    crossover_check,
    extended_box_run,
    fit_exponent,
    measure_efold,
    measure_tail_rate,
    run_sweep,
)
from .norms import (
    SpaceTimeField,
    bump_family,
    calibrate_gevrey_d0,
    fractional_poincare_check,
    gevrey_monitor,
    random_band_family,
    rescale_family,
    verify_bracket_inequality,
    verify_interpolation_inequality,
    verify_sample_subelliptic,
)
from .oracle import CouetteSpec, bump_profile_data, couette_exact_physical, expm_mode
from .profiles import builtin_profile, predicted_exponent
from .solver import build_mode_operator, default_initial_data, evolve, step_crank_nicolson

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2


class ConfigError(Exception):
    pass


def _load_config(path: str | None, section: str) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    if not parser.has_section(section):
        return {}
    return dict(parser.items(section))


def _resolve(args: argparse.Namespace, file_cfg: dict, spec: dict) -> dict:
    """Merge defaults < config file < explicit flags, with typed parsing."""
    out = {}
    for key, (cast, default) in spec.items():
        value = default
        if key in file_cfg:
            try:
                value = cast(file_cfg[key])
            except ValueError:
                raise ConfigError(f"bad value for {key!r} in config: {file_cfg[key]!r}")
        flag = getattr(args, key, None)
        if flag is not None:
            value = flag
        out[key] = value
    return out


def _positive(cfg: dict, keys) -> None:
    for key in keys:
        if not cfg[key] > 0:
            raise ConfigError(f"{key} must be positive, got {cfg[key]}")


def _nu_list(text: str) -> list[float]:
    vals = [float(v) for v in text.replace(",", " ").split()]
    if not vals:
        raise ValueError("empty nu list")
    return vals


def _header_lines(cfg: dict, kind: str) -> list[str]:
    items = ",".join(f"{k}={cfg[k]}" for k in sorted(cfg))
    return [f"# shearscalar {kind} schema={SCHEMA_VERSION}", f"# config: {items}"]


def _write_csv(path: str, header: list[str], columns: list[str], rows) -> None:
    with open(path, "w") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_json(path: str, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_resolved_config(path: str, section: str, cfg: dict) -> None:
    parser = configparser.ConfigParser()
    parser[section] = {k: str(v) for k, v in sorted(cfg.items())}
    with open(path, "w") as fh:
        fh.write(f"# resolved shearscalar config, schema={SCHEMA_VERSION}\n")
        parser.write(fh)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

RUN_SPEC = {
    "profile": (str, "couette"),
    "bc": (str, "dirichlet"),
    "nu": (float, 1e-3),
    "n_y": (int, 256),
    "m_max": (int, 4),
    "dt": (float, 0.0),  # 0 -> advective limit
    "t_end": (float, 0.0),  # 0 -> 6 nu^-alpha
    "seed": (int, 0),
    "record_snapshots": (lambda s: s.lower() in ("1", "true", "yes"), False),
    "include_x_diffusion": (lambda s: s.lower() in ("1", "true", "yes"), False),
}


def cmd_run(args) -> int:
    cfg = _resolve(args, _load_config(args.config, "run"), RUN_SPEC)
    profile = builtin_profile(cfg["profile"])
    bc = BoundaryCondition.parse(cfg["bc"])
    _positive(cfg, ["nu", "n_y", "m_max"])
    alpha = predicted_exponent(profile.flatness)
    if cfg["dt"] <= 0:
        cfg["dt"] = min(0.25 / (2 * math.pi * cfg["m_max"] * max(profile.b_max, 1e-12)),
                        0.02 * cfg["nu"] ** -alpha / 1000.0)
    if cfg["t_end"] <= 0:
        cfg["t_end"] = 6.0 * cfg["nu"] ** -alpha

    grid = Grid(n_y=cfg["n_y"], bc=bc)
    data = default_initial_data(grid, cfg["m_max"], cfg["seed"])
    sample_every = max(1, int(np.ceil(cfg["t_end"] / cfg["dt"] / 800.0)))
    traj = evolve(
        data, profile, cfg["nu"], cfg["t_end"], cfg["dt"],
        sample_every=sample_every,
        record_snapshots=cfg["record_snapshots"],
        include_x_diffusion=cfg["include_x_diffusion"],
    )
    efold = measure_efold(traj)
    rate, rate_status = measure_tail_rate(traj)

    os.makedirs(args.out, exist_ok=True)
    header = _header_lines(cfg, "run")
    mode_cols = [f"mode_{m}" for m in traj.mode_numbers]
    rows = [
        [t, l2, h1, *pm]
        for t, l2, h1, pm in zip(traj.sample_times, traj.l2_norms,
                                 traj.h1y_history, traj.per_mode_norms)
    ]
    _write_csv(os.path.join(args.out, "trajectory.csv"), header,
               ["time", "l2", "h1y", *mode_cols], rows)
    _write_json(os.path.join(args.out, "summary.json"), {
        "config": {k: cfg[k] for k in sorted(cfg)},
        "tau_efold": efold.tau,
        "efold_status": efold.status,
        "tail_rate": rate,
        "tail_rate_status": rate_status,
        "final_norm_ratio": float(traj.l2_norms[-1] / traj.initial_norm),
    })
    _write_resolved_config(os.path.join(args.out, "config_resolved.cfg"), "run", cfg)
    if cfg["record_snapshots"]:
        _dump_snapshots(args.out, traj, header)
    return EXIT_OK


def _dump_snapshots(out_dir: str, traj, header: list[str]) -> None:
    """One CSV per snapshot: rows (m, j, re, im) with grid metadata up top."""
    grid = traj.grid
    meta = header + [
        f"# grid: n_y={grid.n_y} bc={grid.bc.value} y_lo={grid.y_lo} y_hi={grid.y_hi}",
    ]
    for idx, t in enumerate(traj.sample_times):
        rows = []
        for im, m in enumerate(traj.mode_numbers):
            amp = traj.snapshots[idx, im]
            rows.extend([int(m), j, amp[j].real, amp[j].imag] for j in range(grid.n_y))
        _write_csv(os.path.join(out_dir, f"snapshot_{idx:05d}.csv"),
                   meta + [f"# t={t!r}"], ["m", "j", "re", "im"], rows)


SWEEP_SPEC = {
    "profile": (str, "couette"),
    "bc": (str, "dirichlet"),
    "nu_list": (_nu_list, [10 ** (-6 + 3 * i / 7) for i in range(8)]),
    "seed": (int, 0),
    "m_max": (int, 4),
    "gate": (lambda s: s.lower() in ("1", "true", "yes"), True),
}


def cmd_sweep(args) -> int:
    cfg = _resolve(args, _load_config(args.config, "sweep"), SWEEP_SPEC)
    profile = builtin_profile(cfg["profile"])
    policy = ResolutionPolicy(m_max=cfg["m_max"], seed=cfg["seed"])
    records, meta = run_sweep(
        cfg["profile"], cfg["bc"], cfg["nu_list"],
        policy=policy, threads=args.threads or os.cpu_count(),
        grid_independence_gate=cfg["gate"],
    )
    os.makedirs(args.out, exist_ok=True)
    cfg_echo = dict(cfg, nu_list=" ".join(repr(v) for v in cfg["nu_list"]))
    header = _header_lines(cfg_echo, "sweep")
    columns = ["profile", "bc", "nu", "n_y", "m_max", "dt",
               "tau_efold", "tail_rate", "fit_t_lo", "fit_t_hi", "status"]
    rows = [[r.profile, r.bc, r.nu, r.n_y, r.m_max, r.dt,
             r.tau_efold, r.tail_rate, r.fit_t_lo, r.fit_t_hi, r.status]
            for r in records]
    _write_csv(os.path.join(args.out, "sweep.csv"), header, columns, rows)

    try:
        fit = fit_exponent(records)
    except ValueError as exc:
        _write_json(os.path.join(args.out, "fit.json"),
                    {"error": str(exc), "gate": meta["gate"]})
        print(f"sweep fit failed: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    payload = fit.to_dict(cfg["profile"], cfg["bc"], profile.flatness)
    payload["gate"] = meta["gate"]
    _write_json(os.path.join(args.out, "fit.json"), payload)
    print(f"{cfg['profile']}/{cfg['bc']}: alpha_hat={fit.slope:.4f} "
          f"(predicted {payload['alpha_predicted']:.4f})")
    return EXIT_OK


ORACLE_SPEC = {
    "nu": (float, 1e-3),
    "n_ext": (int, 1024),
    "half_width": (float, 8.0),
    "seed": (int, 0),
    "tol_couette": (float, 1e-3),
    "n_y": (int, 64),
    "nu_expm": (float, 1e-2),
    "t_expm": (float, 1.0),
    "dt_expm": (float, 0.01),
    "tol_expm": (float, 1e-3),
}


def cmd_oracle(args) -> int:
    cfg = _resolve(args, _load_config(args.config, "oracle"), ORACLE_SPEC)
    _positive(cfg, ["nu", "n_ext", "half_width", "tol_couette", "n_y"])

    # solver vs exact Couette evolution on the extended box
    t_final = cfg["nu"] ** (-1.0 / 3.0)
    traj = extended_box_run(builtin_profile("couette"), cfg["nu"], t_final,
                            n_ext=cfg["n_ext"], half_width=cfg["half_width"],
                            seed=cfg["seed"], record_snapshots=True)
    spec = CouetteSpec(nu=cfg["nu"], k=2.0 * np.pi, half_width=cfg["half_width"],
                       phi_in=bump_profile_data(cfg["n_ext"], cfg["half_width"], cfg["seed"]))
    exact = couette_exact_physical(spec, t_final)
    numeric = traj.snapshots[-1][0]
    grid = traj.grid
    err_couette = grid.l2_norm(numeric - exact) / grid.l2_norm(spec.phi_in)

    # Crank-Nicolson vs dense exponential on the channel
    cgrid = Grid(n_y=cfg["n_y"], bc=BoundaryCondition.DIRICHLET)
    op = build_mode_operator(builtin_profile("couette"), cgrid, 2.0 * np.pi, cfg["nu_expm"])
    state = default_initial_data(cgrid, 1, cfg["seed"]).amplitudes[0]
    ref = expm_mode(op, state, cfg["t_expm"])
    steps = int(round(cfg["t_expm"] / cfg["dt_expm"]))
    cn = step_crank_nicolson(state, op, cfg["t_expm"] / steps, steps)
    err_expm = float(np.sqrt(np.sum(np.abs(cn - ref) ** 2) / np.sum(np.abs(ref) ** 2)))

    os.makedirs(args.out, exist_ok=True)
    passed = err_couette <= cfg["tol_couette"] and err_expm <= cfg["tol_expm"]
    _write_json(os.path.join(args.out, "oracle_report.json"), {
        "config": {k: cfg[k] for k in sorted(cfg)},
        "couette_rel_error": float(err_couette),
        "couette_tolerance": cfg["tol_couette"],
        "expm_rel_error": err_expm,
        "expm_tolerance": cfg["tol_expm"],
        "passed": passed,
    })
    print(f"couette error {err_couette:.3e} (tol {cfg['tol_couette']:g}), "
          f"expm error {err_expm:.3e} (tol {cfg['tol_expm']:g})")
    return EXIT_OK if passed else EXIT_TOLERANCE


INEQ_SPEC = {
    "calibration_seed": (int, 0),
    "independent_seed": (int, 1),
    "calibration_factor": (float, 2.0),
    "s": (float, 1.0 / 3.0),
    "s_prime": (float, 0.2),
}


def cmd_inequalities(args) -> int:
    cfg = _resolve(args, _load_config(args.config, "inequalities"), INEQ_SPEC)
    calibration = bump_family() + random_band_family(cfg["calibration_seed"])
    independent = rescale_family() + random_band_family(cfg["independent_seed"])

    checks = [verify_sample_subelliptic, verify_bracket_inequality,
              verify_interpolation_inequality]
    report = {"families": [], "passed": True}
    for check in checks:
        cal = check(calibration)
        c_cal = cfg["calibration_factor"] * cal.max_ratio
        ind = check(independent)
        ok = bool(ind.max_ratio <= c_cal and ind.max_ratio > 0)
        report["families"].append({
            **ind.to_dict(),
            "calibration_constant": c_cal,
            "calibration_max": cal.max_ratio,
            "pass": ok,
        })
        report["passed"] = report["passed"] and ok

    # fractional Poincare on seeded synthetic mode trajectories
    poincare = _poincare_trials(cfg["s"], cfg["s_prime"])
    report["fractional_poincare"] = poincare
    report["passed"] = report["passed"] and poincare["pass"]

    os.makedirs(args.out, exist_ok=True)
    _write_json(os.path.join(args.out, "inequalities.json"),
                {"config": {k: cfg[k] for k in sorted(cfg)}, **report})
    for fam in report["families"]:
        print(f"{fam['family']}: max ratio {fam['max']:.4g} "
              f"(C_cal {fam['calibration_constant']:.4g}) "
              f"{'PASS' if fam['pass'] else 'FAIL'}")
    print(f"fractional_poincare: max ratio {poincare['max_ratio']:.6f} "
          f"(bound {poincare['bound']:.6f}) {'PASS' if poincare['pass'] else 'FAIL'}")
    return EXIT_OK if report["passed"] else EXIT_TOLERANCE


def _poincare_trials(s: float, s_prime: float, trials: int = 12) -> dict:
    grid = Grid(n_y=32, bc=BoundaryCondition.DIRICHLET)
    rng = np.random.default_rng(0)
    worst = 0.0
    bound = 0.0
    for _ in range(trials):
        m_max = int(rng.integers(3, 20))
        n_t = int(rng.integers(4, 12))
        snaps = rng.standard_normal((n_t, m_max, grid.n_y)) \
            + 1j * rng.standard_normal((n_t, m_max, grid.n_y))
        u = SpaceTimeField(grid, np.arange(1, m_max + 1),
                           np.linspace(0.0, 1.0, n_t), snaps)
        rep = fractional_poincare_check(u, s, s_prime)
        worst = max(worst, rep.ratio_l2)
        bound = rep.bound_l2
    return {"max_ratio": worst, "bound": bound, "s": s, "s_prime": s_prime,
            "pass": bool(worst <= bound)}


GEVREY_SPEC = {
    "nu": (float, 1e-4),
    "p": (float, 1.6),
    "d0": (float, 0.0),  # 0 -> calibrate by bisection
    "bound": (float, 10.0),
    "t_mult": (float, 5.0),
    "n_y": (int, 512),
    "m_max": (int, 4),
    "seed": (int, 0),
}


def cmd_gevrey(args) -> int:
    cfg = _resolve(args, _load_config(args.config, "gevrey"), GEVREY_SPEC)
    profile = builtin_profile("couette")
    _positive(cfg, ["nu", "p", "bound", "t_mult", "n_y", "m_max"])
    t_star = cfg["nu"] ** (-1.0 / 3.0)
    grid = Grid(n_y=cfg["n_y"], bc=BoundaryCondition.DIRICHLET)
    data = default_initial_data(grid, cfg["m_max"], cfg["seed"])
    dt = 0.25 / (2 * math.pi * cfg["m_max"] * profile.b_max)
    traj = evolve(data, profile, cfg["nu"], cfg["t_mult"] * t_star, dt,
                  sample_every=max(1, int(cfg["t_mult"] * t_star / dt / 800)))

    d0 = cfg["d0"]
    calibrated = False
    if d0 <= 0.0:
        d0 = calibrate_gevrey_d0(traj, cfg["nu"], 0, cfg["p"], cfg["bound"])
        calibrated = True
    report = gevrey_monitor(traj, cfg["nu"], 0, cfg["p"], d0, cfg["bound"])

    os.makedirs(args.out, exist_ok=True)
    header = _header_lines(dict(cfg, d0=d0), "gevrey")
    rows = list(zip(report.times, report.amplification))
    _write_csv(os.path.join(args.out, "gevrey.csv"), header,
               ["time", "amplification"], rows)
    _write_json(os.path.join(args.out, "gevrey.json"), {
        "config": {k: cfg[k] for k in sorted(cfg)},
        "d0": d0,
        "calibrated": calibrated,
        "sup_amplification": report.sup,
        "passed": report.passed,
        "reason": report.reason,
    })
    print(f"gevrey: d0={d0:.4g} sup A={report.sup:.4g} "
          f"{'PASS' if report.passed else 'FAIL ' + report.reason}")
    return EXIT_OK if report.passed else EXIT_TOLERANCE


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="INI config file")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="RNG seed override")
    sub.add_argument("--threads", type=int,
                     default=int(os.environ.get("SHEARSCALAR_THREADS", "0")),
                     help="worker threads for sweeps (0 = all cores)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shearscalar",
        description="Passive-scalar decay in shear flows: solver, sweeps, and norm checks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="single decay run -> trajectory CSV + summary JSON")
    for key in ("profile", "bc"):
        p_run.add_argument(f"--{key}", default=None)
    for key in ("nu", "dt", "t_end"):
        p_run.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float, default=None)
    for key in ("n_y", "m_max"):
        p_run.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int, default=None)
    p_run.add_argument("--record-snapshots", dest="record_snapshots",
                       action="store_true", default=None)
    p_run.add_argument("--include-x-diffusion", dest="include_x_diffusion",
                       action="store_true", default=None)
    _add_common(p_run)

    p_sweep = subs.add_parser("sweep", help="viscosity sweep -> sweep CSV + fit JSON")
    p_sweep.add_argument("--profile", default=None)
    p_sweep.add_argument("--bc", default=None)
    p_sweep.add_argument("--nu-list", dest="nu_list", type=_nu_list, default=None)
    p_sweep.add_argument("--m-max", dest="m_max", type=int, default=None)
    p_sweep.add_argument("--no-gate", dest="gate", action="store_false", default=None)
    _add_common(p_sweep)

    p_oracle = subs.add_parser("oracle", help="solver-vs-oracle comparisons")
    p_oracle.add_argument("--nu", type=float, default=None)
    p_oracle.add_argument("--dt-expm", dest="dt_expm", type=float, default=None)
    p_oracle.add_argument("--tol-couette", dest="tol_couette", type=float, default=None)
    p_oracle.add_argument("--tol-expm", dest="tol_expm", type=float, default=None)
    _add_common(p_oracle)

    p_ineq = subs.add_parser("inequalities", help="quotient-norm inequality suite")
    p_ineq.add_argument("--calibration-factor", dest="calibration_factor",
                        type=float, default=None)
    _add_common(p_ineq)

    p_gev = subs.add_parser("gevrey", help="Gevrey smoothing monitor")
    p_gev.add_argument("--nu", type=float, default=None)
    p_gev.add_argument("--p", type=float, default=None)
    p_gev.add_argument("--d0", type=float, default=None)
    p_gev.add_argument("--bound", type=float, default=None)
    _add_common(p_gev)
    return parser


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "inequalities": cmd_inequalities,
    "gevrey": cmd_gevrey,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
