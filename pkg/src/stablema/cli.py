"""Command line interface.

Subcommands: ``simulate`` writes a path CSV, ``estimate`` fits a path CSV
and prints/writes JSON, ``mc-study`` runs a Monte Carlo study from a JSON
config or a built-in table preset, ``cf-check`` runs the closed-form
oracle suite, ``clt-check`` compares Monte Carlo and series covariances,
``grid-dump`` writes quadrature node/weight tables for audit.

Exit codes: 0 success, 2 configuration/validation error, 3 numeric
failure.
"""

import argparse
import json
import sys

import numpy as np

from . import checks, clt, estimator, study
from .charfn import CovSeriesSpec
from .errors import ModelError, NumericError, ParameterError
from .kernels import FAMILIES, get_family
from .simulate import (SimConfig, derive_rng, load_path_csv, save_path_csv,
                       simulate_path)

CONFIG_ERROR, NUMERIC_ERROR = 2, 3


def _parse_floats(text):
    return tuple(float(v) for v in text.split(","))


def _parse_fixed(items):
    fixed = {}
    for item in items or ():
        name, _, value = item.partition("=")
        if not _:
            raise ValueError(f"--fixed expects name=value, got {item!r}")
        fixed[name] = float(value)
    return fixed


def _add_family_arg(parser):
    parser.add_argument(
        "--family", required=True, choices=sorted(FAMILIES),
        help="kernel family id",
    )
    parser.add_argument(
        "--k", type=int, default=2,
        help="increment order for the lfsm family (default 2)",
    )


def _get_model(args):
    if args.family == "lfsm":
        return get_family("lfsm", k=args.k)
    return get_family(args.family)


def _cmd_simulate(args):
    model = _get_model(args)
    cfg = SimConfig(
        grid_step=args.grid_step, truncation=args.truncation, seed=args.seed
    )
    path = simulate_path(model, _parse_floats(args.xi), args.n, cfg,
                         derive_rng(args.seed))
    save_path_csv(path, args.out)
    print(f"wrote {args.n} observations to {args.out}")
    return 0


def _cmd_estimate(args):
    model = _get_model(args)
    path = load_path_csv(args.input)
    fixed = _parse_fixed(args.fixed)
    nu = args.nu if args.nu is not None else model.default_nu
    nodes = args.nodes if args.nodes is not None else model.default_nodes
    grid = estimator.build_grid(
        args.m, nodes, estimator.WeightSpec(nu=nu, m=args.m)
    )
    result = estimator.estimate(
        path, model, args.m, grid, _parse_floats(args.start), fixed=fixed
    )
    payload = {
        "family": model.family_id,
        "param_names": list(model.param_names),
        "xi_hat": [float(v) for v in result.xi_hat],
        "free_names": list(result.free_names),
        "contrast": result.contrast_value,
        "iterations": result.iterations,
        "converged": result.converged,
        "simplex_diameter": result.simplex_diameter,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _table_configs(table, full, reps, seed):
    """Built-in study presets mirroring the simulation-study tables.

    The default is a small spotlight subset per table; ``--full`` expands
    to the whole published grid (long runtime).
    """
    configs = []

    def add(family, xi0, m, n_list, nu, nodes, start, fixed=None):
        configs.append(study.StudyConfig(
            family=family, xi0=xi0, m=m, n_list=n_list, reps=reps, nu=nu,
            nodes_per_dim=nodes, start=start, seed=seed, fixed=fixed or {},
        ))

    lfsm_cells = [(0.8, 1.8)] if not full else [
        (0.6, 1.8), (0.7, 1.6), (0.7, 1.8), (0.8, 1.4), (0.8, 1.6), (0.8, 1.8),
    ]
    ou_sub_cells = [(1.8, 1.0), (1.8, 1.25)] if not full else [
        (b, lam)
        for b in (1.2, 1.4, 1.6, 1.8)
        for lam in (0.25, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5)
    ]
    ou_full_cells = [
        (b, 0.75, s) for b in (1.4, 1.6) for s in (0.9, 1.0)
    ] if not full else [
        (b, lam, s)
        for b in (1.4, 1.6) for lam in (0.25, 0.75) for s in (0.9, 1.0)
    ]
    gen_cells = [
        (b, lam) for b in (1.8, 1.2) for lam in (1.25, 1.5)
    ] if not full else [
        (b, lam) for b in (1.8, 1.2) for lam in (0.5, 0.75, 1.25, 1.5)
    ]

    if table in (1, 2):
        n = 1000 if table == 1 else 10000
        for hurst, beta in lfsm_cells:
            add("lfsm", (beta, hurst, 0.3), 3, (n,), 10.0, 12,
                (1.5, 0.5, 2.0))
    elif table in (3, 4):
        m = 1 if table == 3 else 2
        for beta, lam in ou_sub_cells:
            add("ou", (beta, 1.0, lam), m, (1000, 10000), 1.0, 20,
                (1.5, 0.5), fixed={"sigma": 1.0})
    elif table == 5:
        for beta, lam, sig in ou_full_cells:
            add("ou", (beta, sig, lam), 2, (10000,), 1.0, 20,
                (1.5, 1.1, 0.5))
    elif table in (6, 7):
        sig = 0.5 if table == 6 else 2.0
        for beta, lam in gen_cells:
            add("gen-modulated-ou", (beta, lam, sig), 2, (10000,), 0.1, 20,
                (1.5, 1.0, 1.0))
    else:
        raise ValueError(f"no preset for table {table}; use 1-7")
    return configs


def _cmd_mc_study(args):
    if (args.config is None) == (args.table is None):
        raise ValueError("provide exactly one of --config or --table")
    if args.config is not None:
        configs = [study.StudyConfig.from_json(args.config)]
        if args.reps is not None:
            configs = [study.StudyConfig(
                **{**json.loads(configs[0].to_json()), "reps": args.reps}
            )]
    else:
        configs = _table_configs(
            args.table, args.full, args.reps or 200, args.seed
        )
    rows, flagged = [], []
    for config in configs:
        report = study.run_study(config, workers=args.workers)
        rows.extend(report.rows)
        flagged.extend(report.flagged)
    merged = study.MonteCarloReport(rows=rows, flagged=flagged)
    text = merged.to_csv(args.out)
    if args.out:
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        print(text, end="")
    for note in flagged:
        print(f"warning: {note}", file=sys.stderr)
    return 0


def _cmd_cf_check(args):
    results = checks.closed_form_check(rounds=args.rounds, seed=args.seed)
    failed = False
    for name, err in results.items():
        status = "ok" if err <= checks.CLOSED_FORM_TOL else "FAIL"
        if status == "FAIL":
            failed = True
        print(f"{name:22s} worst rel err {err:.3e}  {status}")
    return NUMERIC_ERROR if failed else 0


def _cmd_clt_check(args):
    model = _get_model(args)
    u_values = _parse_floats(args.u)
    u_points = np.array([[u] * args.m for u in u_values])
    report = clt.verify_clt(
        model, _parse_floats(args.xi), u_points, args.m, args.n, args.reps,
        CovSeriesSpec(lag_cut=args.lag_cut), seed=args.seed,
    )
    if args.out:
        report.to_csv(args.out)
        print(f"wrote covariance table to {args.out}")
    for i, u in enumerate(u_values):
        print(
            f"u={u}: mc {report.mc_cov[i, i]:.5f} vs series "
            f"{report.series_cov[i, i]:.5f} "
            f"(gap {report.relative_gap[i, i]:.3f})"
        )
    return 0


def _cmd_grid_dump(args):
    grid = estimator.build_grid(
        args.m, args.nodes, estimator.WeightSpec(nu=args.nu, m=args.m)
    )
    grid.to_csv(args.out)
    print(
        f"wrote {grid.size} nodes to {args.out} "
        f"(orthant mass error {grid.orthant_mass_error:.2e})"
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stablema",
        description="Heavy-tailed moving average simulation and estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a path to CSV")
    _add_family_arg(p)
    p.add_argument("--xi", required=True, help="comma-separated (beta,...)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--truncation", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate parameters from a path CSV")
    _add_family_arg(p)
    p.add_argument("--input", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--start", required=True,
                   help="comma-separated start for the free parameters")
    p.add_argument("--fixed", action="append", metavar="NAME=VALUE",
                   help="pin a parameter (repeatable)")
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("mc-study", help="run a Monte Carlo study")
    p.add_argument("--config", default=None, help="StudyConfig JSON file")
    p.add_argument("--table", type=int, default=None,
                   help="built-in preset (1-7)")
    p.add_argument("--full", action="store_true",
                   help="full published grid instead of the spotlight subset")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: STABLEMA_WORKERS or 1)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_mc_study)

    p = sub.add_parser("cf-check", help="closed forms vs numeric integration")
    p.add_argument("--rounds", type=int, default=50)
    p.add_argument("--seed", type=int, default=1234)
    p.set_defaults(func=_cmd_cf_check)

    p = sub.add_parser("clt-check", help="MC vs series covariance of V_n")
    _add_family_arg(p)
    p.add_argument("--xi", required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--u", default="0.5,1.0",
                   help="comma-separated frequency magnitudes")
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--lag-cut", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_clt_check)

    p = sub.add_parser("grid-dump", help="write a quadrature grid CSV")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_grid_dump)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return CONFIG_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ParameterError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (NumericError, ModelError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_ERROR


if __name__ == "__main__":
    sys.exit(main())
