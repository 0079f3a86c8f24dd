"""Command-line front end: JSON experiment configs in, CSV/JSON results out.

Subcommands:

- ``validate``    thermodynamic-consistency check of a relaxation model
- ``fano-sweep``  dimensionless Fano/bound table over an (x, y) grid
- ``cgf``         K(eta) samples with the fluctuation-theorem defect column
- ``cumulants``   full work-statistics report for one configuration
- ``oracle``      exact-quantum validation suite for a named system

Every output starts with comment lines carrying the library version and the
SHA-256 of the canonicalized config, so identical config + seed reproduce
byte-identical files.  Exit codes: 0 success, 1 a validation or acceptance
check failed, 2 usage or config errors.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .exceptions import WorkstatsError
from .oracle import (
    lrt_benchmark,
    renyi_cgf,
    system_from_spec,
    tpm_cgf,
    tpm_distribution,
)
from .protocols import linear, protocol_from_dict
from .relaxation import model_from_dict, validate
from .work_statistics import (
    ThermalParams,
    build_report,
    cgf,
    fano_sweep,
    sweep_point,
)

USAGE_ERROR = 2
CHECK_FAILED = 1


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise SystemExit(_usage(f"config file not found: {path}"))
    except json.JSONDecodeError as exc:
        raise SystemExit(_usage(f"config is not valid JSON: {exc}"))
    if "schema_version" not in cfg:
        raise SystemExit(_usage("config missing required field: schema_version"))
    seed_env = os.environ.get("WORKSTATS_SEED")
    if seed_env is not None:
        cfg["seed"] = int(seed_env)
    return cfg


def _usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return USAGE_ERROR


def _config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _header_lines(cfg: dict) -> list[str]:
    return [f"# workstats {__version__}", f"# config_sha256={_config_hash(cfg)}"]


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: str, cfg: dict, header: str, rows) -> None:
    lines = _header_lines(cfg) + [header]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path: str, cfg: dict, payload: dict) -> None:
    payload = {
        "workstats_version": __version__,
        "config_sha256": _config_hash(cfg),
        **payload,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _thermal(cfg: dict) -> ThermalParams:
    thermal = cfg.get("thermal", {})
    return ThermalParams(beta=float(thermal.get("beta", 1.0)),
                         hbar=float(thermal.get("hbar", 1.0)))


def _rel_tol(cfg: dict, args) -> float:
    if getattr(args, "tol", None) is not None:
        return float(args.tol)
    return float(cfg.get("tolerances", {}).get("rel", 1e-10))


# -- subcommands -----------------------------------------------------------------

def cmd_validate(cfg: dict, args) -> int:
    try:
        model = model_from_dict(cfg["model"])
    except KeyError as exc:
        return _usage(f"config missing required field: {exc.args[0]}")
    except ValueError as exc:
        return _usage(str(exc))
    grid = cfg.get("omega_grid")
    if grid is None:
        scale = model.frequency_scale
        grid = np.linspace(0.0, 12.0 * scale, 481).tolist()
    report = validate(model, np.asarray(grid, dtype=float))
    print(report)
    if args.out:
        _write_json(args.out, cfg, {
            "passed": report.passed,
            "time_symmetric": report.time_symmetric,
            "freq_nonnegative": report.freq_nonnegative,
            "first_violation": report.first_violation,
        })
    return 0 if report.passed else CHECK_FAILED


def _sweep_task(payload):
    model_cfg, x, y, alpha, hbar, rel_tol = payload
    model = model_from_dict(model_cfg)
    return sweep_point(model, x, y, alpha=alpha, hbar=hbar, rel_tol=rel_tol)


def cmd_fano_sweep(cfg: dict, args) -> int:
    try:
        model_cfg = cfg["model"]
        model_from_dict(model_cfg)
        sweep = cfg["sweep"]
        xs = [float(x) for x in sweep["x"]]
        ys = [float(y) for y in sweep["y"]]
    except KeyError as exc:
        return _usage(f"config missing required field: {exc.args[0]}")
    except ValueError as exc:
        return _usage(str(exc))
    hbar = _thermal(cfg).hbar
    alpha = float(cfg.get("protocol", {}).get("alpha", 1.0))
    rel_tol = _rel_tol(cfg, args)

    tasks = [(model_cfg, x, y, alpha, hbar, rel_tol) for x in xs for y in ys]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]

    csv_rows = [
        (r.x, r.y, r.beta_fano, r.beta_jensen_bound, r.beta_avg_rescaled,
         r.err_estimate, int(r.failed))
        for r in rows
    ]
    _write_csv(args.out, cfg,
               "x,y,beta_fano,beta_jensen_bound,beta_avg_rescaled,err_est,flag",
               csv_rows)
    failures = sum(r.failed for r in rows)
    if failures:
        print(f"warning: {failures} of {len(rows)} sweep points failed",
              file=sys.stderr)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_cgf(cfg: dict, args) -> int:
    try:
        model = model_from_dict(cfg["model"])
        protocol = protocol_from_dict(cfg["protocol"])
    except KeyError as exc:
        return _usage(f"config missing required field: {exc.args[0]}")
    except ValueError as exc:
        return _usage(str(exc))
    params = _thermal(cfg)
    etas = [float(e) for e in cfg.get("eta_grid",
                                      [i / 10 for i in range(11)])]
    rel_tol = _rel_tol(cfg, args)
    rows = []
    for eta in etas:
        k = cgf(eta, model, protocol, params, rel_tol=rel_tol)
        k_mirror = cgf(1.0 - eta, model, protocol, params, rel_tol=rel_tol)
        rows.append((eta, k, k_mirror, abs(k - k_mirror)))
    _write_csv(args.out, cfg, "eta,K,K_mirror,defect", rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_cumulants(cfg: dict, args) -> int:
    try:
        model = model_from_dict(cfg["model"])
        protocol = protocol_from_dict(cfg["protocol"])
    except KeyError as exc:
        return _usage(f"config missing required field: {exc.args[0]}")
    except ValueError as exc:
        return _usage(str(exc))
    params = _thermal(cfg)
    orders = cfg.get("cumulant_orders", [1, 2, 3, 4])
    report = build_report(model, protocol, params,
                          max_order=max(orders),
                          eta_grid=cfg.get("eta_grid"),
                          rel_tol=_rel_tol(cfg, args))
    if args.out.endswith(".csv"):
        rows = [(k, v, e, flag) for (k, v, e, flag) in report.cumulants
                if k in orders]
        _write_csv(args.out, cfg, "order,value,err_estimate,flag", rows)
    else:
        _write_json(args.out, cfg, report.to_dict())
    print(f"wrote report to {args.out}")
    return 0


def cmd_oracle(cfg: dict, args) -> int:
    oracle_cfg = cfg.get("oracle", {})
    system_spec = oracle_cfg.get("system", "qubit-sx")
    if isinstance(system_spec, str) and ":auto:" in system_spec:
        seed = int(cfg.get("seed", 0))
        system_spec = system_spec.replace(":auto:", f":{seed}:")
    try:
        sys_obj = system_from_spec(system_spec)
    except (KeyError, ValueError) as exc:
        return _usage(str(exc))
    params = _thermal(cfg)
    tau = float(oracle_cfg.get("tau", 1.0))
    alphas = [float(a) for a in oracle_cfg.get("alphas", [0.2, 0.1, 0.05, 0.02])]
    etas = [float(e) for e in oracle_cfg.get("eta_grid", [0.25, 0.5, 0.75])]

    identity_rows = []
    dist = tpm_distribution(sys_obj, linear(alphas[0], tau), params)
    for eta in etas:
        lhs = tpm_cgf(dist, params, eta)
        rhs = renyi_cgf(sys_obj, linear(alphas[0], tau), params, eta)
        identity_rows.append({"eta": eta, "tpm": lhs, "renyi": rhs,
                              "abs_diff": abs(lhs - rhs)})
    identity_ok = all(r["abs_diff"] <= 1e-10 for r in identity_rows)

    report = lrt_benchmark(sys_obj, lambda a: linear(a, tau), params, alphas)
    payload = {
        "system": system_spec if isinstance(system_spec, str) else "custom",
        "commuting": sys_obj.commuting,
        "identity_checks": identity_rows,
        "identity_ok": identity_ok,
        "benchmark": {
            "rows": [
                {"alpha": r.alpha, "exact": list(r.exact),
                 "predicted": list(r.predicted),
                 "rel_errors": list(r.rel_errors),
                 "es_defect": r.es_defect,
                 "es_unmatched_probability": r.es_unmatched_probability}
                for r in report.rows
            ],
            "error_ratios": [list(t) for t in report.error_ratios],
            "errors_decreasing": report.errors_decreasing,
            "ratio_window_ok": report.ratio_window_ok,
            "smallest_error": report.smallest_error,
            "gaussian_skew_ratio": report.gaussian_skew_ratio,
            "gaussian_fdr_defect": report.gaussian_fdr_defect,
        },
    }
    if args.out:
        _write_json(args.out, cfg, payload)
        print(f"wrote oracle report to {args.out}")
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if identity_ok else CHECK_FAILED


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="workstats",
        description="dissipated-work statistics in the weak-driving regime")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, needs_out):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=needs_out, default=None,
                       help="output path")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for sweeps")
        p.add_argument("--tol", type=float, default=None,
                       help="override relative quadrature tolerance")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, needs_out=False)
    add("fano-sweep", cmd_fano_sweep, needs_out=True)
    add("cgf", cmd_cgf, needs_out=True)
    add("cumulants", cmd_cumulants, needs_out=True)
    add("oracle", cmd_oracle, needs_out=False)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already
        return int(exc.code or 0)

    try:
        cfg = _load_config(args.config)
    except SystemExit as exc:
        return int(exc.code or USAGE_ERROR)

    try:
        return args.func(cfg, args)
    except WorkstatsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
