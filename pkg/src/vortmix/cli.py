"""Command line front end.

Every subcommand reads a JSON config, consumes randomness only through
streams derived from --seed, and writes its outputs plus a key=value
manifest into --out.  Outputs are deterministic: rerunning with the
same config and seed reproduces every file byte for byte, whatever
--workers is set to (workers only sizes the FFT thread pool).

Exit codes: 0 on success, 1 for configuration or usage errors, 2 when
a run blew up numerically, 3 when a verification ran and failed.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np
import scipy.fft

from . import __version__
from .diagnostics import (
    diagnostic_series,
    ensemble_balance_residuals,
    ensemble_unit_stats,
    exp_moment_check,
    tail_probability_check,
    tail_sum_check,
)
from .forcing import spec_from_file, uniform_spec
from .girsanov import reweighted_expectation
from .integrator import simulate
from .mixing import couple, stationary_sample
from .partition import (
    PartitionParams,
    classify,
    read_kvector,
    verify_concatenation,
    verify_small_large,
    write_partition,
)
from .reduction import contraction_report, extract_s_path, semigroup_check, solve_l
from .seeding import derive_rng
from .spectral import (
    SpectralGrid,
    VorticityField,
    l2sq_array,
    read_snapshot,
    sample_gaussian_field,
    write_snapshot,
    zero_field,
)
from .util import batch_means_se


class ConfigError(Exception):
    pass


class CheckFailed(Exception):
    """A verification ran and reported failure; results still get written."""

    def __init__(self, message, results):
        super().__init__(message)
        self.results = results


# -- config schema ---------------------------------------------------------

_GRID = {
    "kmax": {"type": int, "required": True},
    "n_force": {"type": int, "required": True},
}

_FORCING = {
    "total_r": {"type": float, "required": False},
    "path": {"type": str, "required": False},
}

_INITIAL = {
    "kind": {"type": str, "required": True, "values": ("zero", "random", "file")},
    "amplitude": {"type": float, "required": False, "default": 1.0},
    "decay": {"type": float, "required": False, "default": 0.0},
    "path": {"type": str, "required": False},
}

_BASE = {
    "grid": {"schema": _GRID, "required": True},
    "forcing": {"schema": _FORCING, "required": True},
    "dt": {"type": float, "required": True},
    "t_final": {"type": float, "required": True},
    "initial": {"schema": _INITIAL, "required": True},
}

SCHEMAS = {
    "simulate": {
        **_BASE,
        "record": {
            "type": str,
            "required": False,
            "default": "unit",
            "values": ("unit", "dense", "none"),
        },
    },
    "couple": {
        **_BASE,
        "initial_2": {"schema": _INITIAL, "required": True},
    },
    "reduce-check": {
        **_BASE,
        "perturbation": {
            "schema": {
                "amplitude": {"type": float, "required": False, "default": 1.0},
                "decay": {"type": float, "required": False, "default": 0.0},
            },
            "required": False,
        },
        "rate": {"type": float, "required": False},
        "slack": {"type": float, "required": False, "default": 1e-3},
    },
    "girsanov-check": {
        **_BASE,
        "n_paths": {"type": int, "required": True},
        "chunk": {"type": int, "required": False, "default": 512},
        "observable": {
            "type": str,
            "required": False,
            "default": "enstrophy",
            "values": ("enstrophy", "band_energy"),
        },
        "se_factor": {"type": float, "required": False, "default": 3.0},
    },
    "diagnostics": {
        **_BASE,
        "max_abs_residual": {"type": float, "required": False},
        "ensemble": {
            "schema": {
                "n_members": {"type": int, "required": False, "default": 0},
                "n_boot": {"type": int, "required": False, "default": 400},
            },
            "required": False,
        },
    },
    "partition": {
        "t_block": {"type": int, "required": True},
        "beta": {"type": float, "required": True},
        "beta_prime": {"type": float, "required": True},
        "kvector": {"type": str, "required": True},
        "splits": {"type": list, "required": False},
    },
    "mixing": {
        **_BASE,
        "initial_2": {"schema": _INITIAL, "required": True},
        "stationary": {
            "schema": {
                "n_samples": {"type": int, "required": False, "default": 0},
                "burn_in": {"type": int, "required": False, "default": 20},
                "gap": {"type": int, "required": False, "default": 5},
            },
            "required": False,
        },
    },
}


def _coerce(value, typ, where):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {where}: expected a number")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {where}: expected an integer")
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"config key {where}: expected a string")
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError(f"config key {where}: expected a list")
        return value
    raise AssertionError(typ)


def validate_config(cfg, schema, prefix=""):
    """Recursively validate cfg against schema; returns a filled copy."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"config section {prefix or '<root>'} must be an object")
    out = {}
    for key in cfg:
        if key not in schema:
            raise ConfigError(f"unknown config key: {prefix}{key}")
    for key, spec in schema.items():
        where = f"{prefix}{key}"
        if key not in cfg:
            if spec.get("required"):
                raise ConfigError(f"missing config key: {where}")
            if "schema" in spec:
                out[key] = validate_config({}, spec["schema"], where + ".")
            elif "default" in spec:
                out[key] = spec["default"]
            continue
        if "schema" in spec:
            out[key] = validate_config(cfg[key], spec["schema"], where + ".")
        else:
            value = _coerce(cfg[key], spec["type"], where)
            if "values" in spec and value not in spec["values"]:
                allowed = ", ".join(map(str, spec["values"]))
                raise ConfigError(f"config key {where}: must be one of {allowed}")
            out[key] = value
    return out


def config_schema():
    """JSON-serializable description of every subcommand's config."""

    def describe(schema):
        out = {}
        for key, spec in schema.items():
            if "schema" in spec:
                entry = {
                    "type": "object",
                    "required": bool(spec.get("required")),
                    "keys": describe(spec["schema"]),
                }
            else:
                entry = {
                    "type": spec["type"].__name__,
                    "required": bool(spec.get("required")),
                }
                if "default" in spec:
                    entry["default"] = spec["default"]
                if "values" in spec:
                    entry["values"] = list(spec["values"])
            out[key] = entry
        return out

    return {name: describe(schema) for name, schema in SCHEMAS.items()}


# -- shared construction ---------------------------------------------------


def _build_grid(cfg):
    try:
        return SpectralGrid(cfg["grid"]["kmax"], cfg["grid"]["n_force"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_forcing(grid, cfg):
    fc = cfg["forcing"]
    has_r = fc.get("total_r") is not None
    has_path = fc.get("path") is not None
    if has_r == has_path:
        raise ConfigError("config key forcing: set exactly one of total_r, path")
    try:
        if has_r:
            return uniform_spec(grid, fc["total_r"])
        return spec_from_file(fc["path"], grid)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"forcing: {exc}") from exc


def _build_initial(grid, section, seed, component):
    kind = section["kind"]
    if kind == "zero":
        return zero_field(grid)
    if kind == "random":
        rng = derive_rng(seed, component)
        return sample_gaussian_field(
            grid, section["amplitude"], rng, decay=section["decay"]
        )
    if section.get("path") is None:
        raise ConfigError("initial state of kind 'file' needs a path")
    try:
        return read_snapshot(section["path"], grid)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"initial: {exc}") from exc


def _check_dt(cfg, allow_zero=False):
    dt = cfg["dt"]
    if dt <= 0:
        raise ConfigError("config key dt: must be positive")
    n = round(1.0 / dt)
    if n < 1 or abs(n * dt - 1.0) > 1e-9:
        raise ConfigError("config key dt: 1/dt must be an integer")
    t = cfg["t_final"]
    least = 0 if allow_zero else 1
    if t != int(t) or t < least:
        kind = "nonnegative" if allow_zero else "positive"
        raise ConfigError(f"config key t_final: must be a {kind} integer")


# -- output helpers --------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12e}"
    return str(value)


def _write_manifest(out_dir, command, seed, config_bytes, results):
    digest = hashlib.sha256(config_bytes).hexdigest()
    lines = [
        f"command={command}",
        f"version={__version__}",
        f"seed={seed}",
        f"config_sha256={digest}",
    ]
    lines.extend(f"{k}={_fmt(v)}" for k, v in results.items())
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- subcommands -----------------------------------------------------------


def _coupling_rows(report):
    return [
        [
            f"{report.times[i]:.6f}",
            f"{report.d_full[i]:.12e}",
            f"{report.d_band[i]:.12e}",
            f"{report.d_high[i]:.12e}",
        ]
        for i in range(len(report.times))
    ]


def _cmd_simulate(cfg, seed, out_dir):
    _check_dt(cfg, allow_zero=True)
    grid = _build_grid(cfg)
    fspec = _build_forcing(grid, cfg)
    field = _build_initial(grid, cfg["initial"], seed, "initial")
    header = ["t", "enstrophy", "h1", "d_running"]
    if cfg["t_final"] == 0:
        rows = [["0.000000", f"{0.5 * l2sq_array(field.coeffs):.12e}",
                 f"{0.0:.12e}", f"{0.0:.12e}"]]
        _write_csv(out_dir / "series.csv", header, rows)
        write_snapshot(out_dir / "final.vort1", field)
        return {
            "t_final": 0,
            "final_enstrophy": 0.5 * l2sq_array(field.coeffs),
            "max_interval_d": 0.0,
        }
    rng = derive_rng(seed, "noise")
    traj = simulate(field, fspec, cfg["t_final"], cfg["dt"], rng, record=cfg["record"])
    d_running = np.concatenate([[0.0], np.cumsum(traj.unit_dn)])
    enstrophy = np.concatenate(
        [[0.5 * l2sq_array(traj.states[0])], 0.5 * traj.unit_l2sq]
    )
    times = np.concatenate([[0.0], traj.unit_times])
    rows = [
        [
            f"{times[i]:.6f}",
            f"{enstrophy[i]:.12e}",
            f"{traj.h1_integral[i]:.12e}",
            f"{d_running[i]:.12e}",
        ]
        for i in range(len(times))
    ]
    _write_csv(out_dir / "series.csv", header, rows)
    write_snapshot(out_dir / "final.vort1", traj.final_field)
    return {
        "t_final": cfg["t_final"],
        "final_enstrophy": 0.5 * traj.unit_l2sq[-1],
        "max_interval_d": float(traj.unit_dn.max()),
    }


def _cmd_couple(cfg, seed, out_dir):
    _check_dt(cfg)
    grid = _build_grid(cfg)
    fspec = _build_forcing(grid, cfg)
    f1 = _build_initial(grid, cfg["initial"], seed, "initial")
    f2 = _build_initial(grid, cfg["initial_2"], seed, "initial_2")
    rng = derive_rng(seed, "noise")
    report = couple(f1, f2, fspec, cfg["t_final"], cfg["dt"], rng)
    _write_csv(
        out_dir / "coupling.csv",
        ["t", "d_full", "d_band", "d_high"],
        _coupling_rows(report),
    )
    return {
        "fit_rate": report.fit_rate,
        "rate_ci_low": report.rate_ci_low,
        "rate_ci_high": report.rate_ci_high,
        "fit_window_start": report.fit_window[0],
        "fit_window_end": report.fit_window[1],
        "coalesce_time": -1.0 if report.coalesce_time is None else report.coalesce_time,
        "contracting": report.contracting,
    }


def _cmd_reduce_check(cfg, seed, out_dir):
    _check_dt(cfg)
    grid = _build_grid(cfg)
    fspec = _build_forcing(grid, cfg)
    field = _build_initial(grid, cfg["initial"], seed, "initial")
    rng = derive_rng(seed, "noise")
    traj = simulate(field, fspec, cfg["t_final"], cfg["dt"], rng, record="dense")
    spath = extract_s_path(traj)

    l0 = np.where(grid.low_mask, 0.0 + 0.0j, traj.states[0])
    lpath = solve_l(spath, l0)
    true_high = np.where(grid.low_mask, 0.0 + 0.0j, traj.states)
    recon_err = float(np.max(np.abs(lpath.values - true_high)))

    mid = spath.n_steps // 2
    comp_err = semigroup_check(spath, l0, mid)

    pert = cfg["perturbation"]
    prng = derive_rng(seed, "perturbation")
    bump = sample_gaussian_field(grid, pert["amplitude"], prng, decay=pert["decay"])
    l2_0 = np.where(grid.low_mask, 0.0 + 0.0j, l0 + bump.coeffs)
    report = contraction_report(
        spath, l0, l2_0, rate=cfg.get("rate"), slack=cfg["slack"]
    )
    rows = [
        [
            f"{report.times[i]:.6f}",
            f"{report.lhs[i]:.12e}",
            f"{report.rhs[i]:.12e}",
            f"{report.lhs[i] / report.rhs[i]:.12e}" if report.rhs[i] > 0 else "",
        ]
        for i in range(len(report.times))
    ]
    _write_csv(out_dir / "contraction.csv", ["t", "lhs", "rhs", "ratio"], rows)
    results = {
        "reconstruction_error": recon_err,
        "composition_error": comp_err,
        "contraction_rate": report.rate,
        "contraction_ok": report.ok,
        "contraction_ok_alt": report.ok_alt,
        "max_ratio": report.max_ratio,
    }
    if not (recon_err <= 1e-12 and comp_err <= 1e-12 and report.ok):
        raise CheckFailed("reduction checks failed", results)
    return results


def _cmd_girsanov_check(cfg, seed, out_dir):
    _check_dt(cfg)
    grid = _build_grid(cfg)
    fspec = _build_forcing(grid, cfg)
    field = _build_initial(grid, cfg["initial"], seed, "initial")
    rng = derive_rng(seed, "paths")

    if cfg["observable"] == "enstrophy":

        def func(w):
            return 0.5 * l2sq_array(w)

    else:

        def func(w):
            return 0.5 * l2sq_array(np.where(grid.low_mask, w, 0))

    est = reweighted_expectation(
        fspec,
        field,
        cfg["t_final"],
        cfg["dt"],
        func,
        cfg["n_paths"],
        rng,
        chunk=cfg["chunk"],
    )
    log_w = est["log_weights"]
    rows = [[str(i), f"{log_w[i]:.12e}", ""] for i in range(len(log_w))]
    rows.append(["summary", f"{est['mean_weight']:.12e}", f"{est['ess']:.12e}"])
    _write_csv(out_dir / "weights.csv", ["path", "log_density", "ess"], rows)
    # the weight mean is exactly 1 in expectation; accept within
    # se_factor Monte Carlo standard errors
    dev = abs(est["mean_weight"] - 1.0)
    ok = dev <= cfg["se_factor"] * est["se_weight"]
    results = {
        "mean_weight": est["mean_weight"],
        "mean_weight_deviation": dev,
        "se_weight": est["se_weight"],
        "ess": est["ess"],
        "low_ess": est["low_ess"],
        "estimate": est["estimate"],
        "reference_estimate": est["reference_estimate"],
        "normalization_ok": ok,
    }
    if not ok:
        raise CheckFailed("weight normalization failed", results)
    return results


def _cmd_diagnostics(cfg, seed, out_dir):
    _check_dt(cfg)
    grid = _build_grid(cfg)
    fspec = _build_forcing(grid, cfg)
    field = _build_initial(grid, cfg["initial"], seed, "initial")
    rng = derive_rng(seed, "noise")
    traj = simulate(field, fspec, cfg["t_final"], cfg["dt"], rng)
    series = diagnostic_series(traj, fspec)
    header, rows = series.rows()
    _write_csv(out_dir / "diagnostics.csv", header, rows)
    worst = float(np.max(np.abs(series.residual)))
    results = {
        "max_abs_residual": worst,
        "final_enstrophy": float(series.enstrophy[-1]),
        "mean_interval_d": float(series.dn.mean()),
    }
    checks = []
    all_ok = True
    bound = cfg.get("max_abs_residual")
    if bound is not None:
        ok = worst <= bound
        results["residual_ok"] = ok
        checks.append(["max_abs_residual", f"{worst:.12e}", f"{bound:.12e}",
                       "pass" if ok else "fail"])
        all_ok = all_ok and ok

    n_members = cfg["ensemble"]["n_members"]
    if n_members > 0:
        r_total = fspec.total_r
        t_final = int(cfg["t_final"])
        l2sq_0 = l2sq_array(field.coeffs)
        stats = ensemble_unit_stats(
            field, fspec, cfg["t_final"], cfg["dt"], seed, n_members
        )
        boot = derive_rng(seed, "bootstrap")
        n_boot = cfg["ensemble"]["n_boot"]
        for n in range(1, t_final + 1):
            em = exp_moment_check(
                stats["l2sq"][:, n], r_total, float(n), l2sq_0, n_boot, boot
            )
            ok = em["ok_ci"]
            checks.append([f"exp_moment_t{n}", f"{em['estimate']:.12e}",
                           f"{em['bound']:.12e}", "pass" if ok else "fail"])
            all_ok = all_ok and ok
        for row in tail_probability_check(
            stats["l2sq"][:, -1], r_total, float(t_final), l2sq_0,
            np.array([4.0, 8.0, 16.0]) * r_total,
        ):
            checks.append([f"tail_p_d{row['d']:g}", f"{row['freq']:.12e}",
                           f"{row['bound']:.12e}", "pass" if row["ok"] else "fail"])
            all_ok = all_ok and row["ok"]
        ts = tail_sum_check(stats["dn"], r_total, n_boot=n_boot, rng=boot)
        checks.append(["tail_sum_slope", f"{ts['slope']:.12e}",
                       f"{0.0:.12e}", "pass" if ts["ok"] else "fail"])
        all_ok = all_ok and ts["ok"]
        res = ensemble_balance_residuals(stats, fspec, l2sq_0)[:, -1]
        mean_res = float(res.mean())
        se = float(res.std(ddof=1) / np.sqrt(n_members))
        ok = abs(mean_res) <= 3.0 * se
        checks.append(["balance_mean", f"{mean_res:.12e}", f"{3.0 * se:.12e}",
                       "pass" if ok else "fail"])
        all_ok = all_ok and ok
        results.update(
            {
                "ensemble_members": n_members,
                "exp_moment_final": em["estimate"],
                "tail_sum_slope": ts["slope"],
                "balance_mean": mean_res,
                "balance_se": se,
            }
        )
    _write_csv(out_dir / "checks.csv", ["check", "value", "bound", "result"], checks)
    results["checks_ok"] = all_ok
    if not all_ok:
        raise CheckFailed("diagnostic checks failed", results)
    return results


def _cmd_partition(cfg, seed, out_dir):
    try:
        params = PartitionParams(cfg["t_block"], cfg["beta"], cfg["beta_prime"])
        kv = read_kvector(cfg["kvector"])
        part = classify(kv, params)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    write_partition(out_dir / "partition.txt", part)
    structure = verify_small_large(kv, params)
    results = {
        "length": len(kv),
        "n_blocks": part.n_blocks,
        "n_large": len(part.large_components()),
        "n_small": len(part.small_components()),
        "structure_ok": structure["ok"],
    }
    ok = structure["ok"]
    splits = cfg.get("splits")
    if splits:
        try:
            check = verify_concatenation(kv, splits, params)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        results.update(
            {
                "split_admissible": check.admissible,
                "junction_quiet": check.junction_quiet,
                "pieces_match": check.pieces_match,
                "locality_ok": check.ok,
            }
        )
        ok = ok and check.ok
    if not ok:
        raise CheckFailed("partition checks failed", results)
    return results


def _cmd_mixing(cfg, seed, out_dir):
    _check_dt(cfg)
    grid = _build_grid(cfg)
    fspec = _build_forcing(grid, cfg)
    f1 = _build_initial(grid, cfg["initial"], seed, "initial")
    f2 = _build_initial(grid, cfg["initial_2"], seed, "initial_2")
    rng = derive_rng(seed, "noise")
    report = couple(f1, f2, fspec, cfg["t_final"], cfg["dt"], rng)
    _write_csv(
        out_dir / "coupling.csv",
        ["t", "d_full", "d_band", "d_high"],
        _coupling_rows(report),
    )
    results = {
        "fit_rate": report.fit_rate,
        "rate_ci_low": report.rate_ci_low,
        "rate_ci_high": report.rate_ci_high,
        "coalesce_time": -1.0 if report.coalesce_time is None else report.coalesce_time,
        "contracting": report.contracting,
    }
    st = cfg["stationary"]
    if st["n_samples"] > 0:
        srng = derive_rng(seed, "stationary")
        samples = stationary_sample(
            f1,
            fspec,
            st["n_samples"],
            cfg["dt"],
            srng,
            burn_in=st["burn_in"],
            gap=st["gap"],
        )
        ens = 0.5 * l2sq_array(samples)
        results["stationary_mean_enstrophy"] = float(ens.mean())
        results["stationary_se"] = float(
            batch_means_se(ens, n_batches=min(20, max(2, len(ens) // 5)))
        )
    if not report.contracting:
        raise CheckFailed("coupling distance did not contract", results)
    return results


_COMMANDS = {
    "simulate": _cmd_simulate,
    "couple": _cmd_couple,
    "reduce-check": _cmd_reduce_check,
    "girsanov-check": _cmd_girsanov_check,
    "diagnostics": _cmd_diagnostics,
    "partition": _cmd_partition,
    "mixing": _cmd_mixing,
}


def _parser():
    parser = argparse.ArgumentParser(
        prog="vortmix",
        description="Spectral laboratory for forced two-dimensional vorticity dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--workers",
            type=int,
            default=os.cpu_count() or 1,
            help="FFT worker threads (default: all processors); outputs "
            "do not depend on it",
        )
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        try:
            config_bytes = Path(args.config).read_bytes()
            raw = json.loads(config_bytes.decode("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        cfg = validate_config(raw, SCHEMAS[args.command])
        try:
            with scipy.fft.set_workers(args.workers):
                results = _COMMANDS[args.command](cfg, args.seed, out_dir)
        except CheckFailed as exc:
            _write_manifest(out_dir, args.command, args.seed, config_bytes, exc.results)
            print(f"check failed: {exc}", file=sys.stderr)
            return 3
        _write_manifest(out_dir, args.command, args.seed, config_bytes, results)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FloatingPointError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
