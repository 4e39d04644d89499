"""Command line interface.

Subcommands:
    run            ancestor search on a dataset CSV
    sample-dag     draw one random graph and print its edge list
    oracle-lowdim, oracle-highdim, finite-sample, max-mi, ablate
                   the simulation studies (CSV output)
    summarize      per-cell aggregates of a study CSV

Exit codes: 0 success, 2 configuration error, 3 partial results (a
sampler or enumeration budget failed in some cell).
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import IasKitError
from .experiments import EXPERIMENTS, ExperimentConfig, default_config, run_experiment, summarize
from .graph import dag_to_edgelist
from .invariance import DecisionConfig
from .rng import make_rng
from .sampling import GraphSamplerConfig, sample_dag
from .scm import Dataset
from .search import ias_search

_TUPLE_FIELDS = {
    "d_list",
    "densities",
    "interventions",
    "n_list",
    "m_list",
    "alpha0_list",
    "correction_list",
    "strength_list",
    "density_prior",
    "interventions_prior",
}

_ABLATION_KINDS = {
    "alpha0": "alpha0_sweep",
    "correction": "correction_ablation",
    "weak": "weak_interventions",
}


class ConfigError(Exception):
    pass


def _load_config_file(path: str) -> dict:
    try:
        if path.endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            with open(path, "rb") as fh:
                return tomllib.load(fh)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def _build_experiment_config(experiment: str, args) -> ExperimentConfig:
    params = {}
    if args.config:
        params.update(_load_config_file(args.config))
    file_experiment = params.pop("experiment", None)
    if file_experiment is not None and file_experiment != experiment:
        raise ConfigError(
            f"config file is for {file_experiment!r}, command expects {experiment!r}"
        )
    for key in list(params):
        if key in _TUPLE_FIELDS:
            params[key] = _tuplify(params[key])
    if args.seed is not None:
        params["seed"] = args.seed
    if args.out is not None:
        params["out"] = args.out
    if getattr(args, "timing", False):
        params["timing"] = True
    try:
        return default_config(experiment, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _add_experiment_parser(sub, name: str, **extra):
    parser = sub.add_parser(name, help=f"run the {name} study")
    parser.add_argument("--config", help="TOML or JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output CSV path")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--resume", action="store_true")
    parser.add_argument("--timing", action="store_true", help="add a wall_time column")
    for flag, kwargs in extra.items():
        parser.add_argument(flag, **kwargs)
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ias-kit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="ancestor search on a dataset CSV")
    run_p.add_argument("--data", required=True, help="CSV with header E,X1..Xd,Y")
    run_p.add_argument("--alpha", type=float, default=0.05)
    run_p.add_argument("--alpha0", type=float, default=1e-6)
    run_p.add_argument("--alpha1", type=float, default=None)
    run_p.add_argument("--correction", default="auto")
    run_p.add_argument("--m", type=int, default=None)
    run_p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    dag_p = sub.add_parser("sample-dag", help="draw one random graph")
    dag_p.add_argument("--d", type=int, required=True)
    dag_p.add_argument("--density", default="sparse", help="sparse, dense, or a probability")
    dag_p.add_argument("--n-interventions", type=int, default=1)
    dag_p.add_argument("--seed", type=int, default=None)
    dag_p.add_argument("--mode", default="exogenous", choices=("exogenous", "nonexogenous"))
    dag_p.add_argument("--out", default=None)

    for name in ("oracle-lowdim", "oracle-highdim", "finite-sample", "max-mi"):
        _add_experiment_parser(sub, name)
    ablate_p = _add_experiment_parser(sub, "ablate")
    ablate_p.add_argument(
        "--kind",
        choices=sorted(_ABLATION_KINDS),
        default=None,
        help="which parameter to sweep (may also come from the config file)",
    )

    sum_p = sub.add_parser("summarize", help="aggregate a study CSV per cell")
    sum_p.add_argument("--in", dest="in_path", required=True)
    sum_p.add_argument("--out", default=None)
    sum_p.add_argument("--by", default=None, help="comma-separated grouping columns")
    return parser


def _cmd_run(args) -> int:
    try:
        with open(args.data) as fh:
            data = Dataset.from_csv(fh.read())
        config = DecisionConfig(
            alpha=args.alpha,
            alpha0=args.alpha0,
            alpha1=args.alpha1,
            correction=_parse_correction(args.correction),
            m=args.m,
        )
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = ias_search(data, config)
    payload = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def _parse_correction(raw: str):
    try:
        return float(raw)
    except ValueError:
        return raw


def _cmd_sample_dag(args) -> int:
    try:
        density = args.density
        if density not in ("sparse", "dense"):
            density = float(density)
        config = GraphSamplerConfig(
            d=args.d,
            density=density,
            n_interventions=args.n_interventions,
            mode=args.mode,
            rng_seed=args.seed,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    dag = sample_dag(config, make_rng(args.seed))
    text = dag_to_edgelist(dag)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_experiment(experiment: str, args) -> int:
    try:
        config = _build_experiment_config(experiment, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = run_experiment(config, jobs=args.jobs, resume=args.resume)
    for failure in result.cells_failed:
        print(f"cell failed: {failure}", file=sys.stderr)
    print(
        f"{experiment}: {result.cells_done} cells computed, "
        f"{result.cells_skipped} resumed, {len(result.cells_failed)} failed -> {result.path}"
    )
    return result.exit_code


def _cmd_ablate(args) -> int:
    experiment = None
    if args.kind:
        experiment = _ABLATION_KINDS[args.kind]
    elif args.config:
        experiment = _load_config_file(args.config).get("experiment")
    if experiment not in EXPERIMENTS or experiment in ("oracle_lowdim", "oracle_highdim", "finite_sample", "max_mi"):
        print("error: ablate needs --kind or a config file naming an ablation experiment", file=sys.stderr)
        return 2
    return _cmd_experiment(experiment, args)


def _cmd_summarize(args) -> int:
    by = args.by.split(",") if args.by else None
    try:
        table = summarize(args.in_path, by=by)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        table.to_csv(args.out, index=False)
    else:
        print(table.to_string(index=False))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    try:
        if command == "run":
            return _cmd_run(args)
        if command == "sample-dag":
            return _cmd_sample_dag(args)
        if command == "summarize":
            return _cmd_summarize(args)
        if command == "ablate":
            return _cmd_ablate(args)
        return _cmd_experiment(command.replace("-", "_"), args)
    except IasKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
