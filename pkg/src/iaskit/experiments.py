"""Simulation studies at configurable (desk) scale, emitting tidy CSV.

Five studies are provided:

* ``oracle_lowdim``   -- how often the invariant-ancestry identifier is
  strictly larger than the ICP identifier across random graphs.
* ``oracle_highdim``  -- size of the size-capped ancestry identifier
  versus Markov-boundary-restricted ICP in large sparse graphs.
* ``finite_sample``   -- Jaccard similarity of the estimated sets to the
  true ancestors on simulated linear SCMs.
* ``max_mi``          -- empirical maximum of the minimally-invariant
  family size over graphs drawn from priors.
* ablations           -- finite_sample re-runs sweeping the empty-set
  level, the correction factor, or the intervention strength.

Every study is cut into cells; cells are processed in a fixed order
with per-cell RNG substreams, so output is deterministic for a given
config and seed regardless of the worker count, and interrupted runs
can be resumed at cell granularity.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field

from .errors import BudgetExceededError, SamplingError
from .invariance import DecisionConfig
from .oracle import ias_set, icp_set, icp_set_mb, markov_boundary, minimally_invariant_sets
from .rng import substream
from .sampling import GraphSamplerConfig, sample_dag
from .scm import sample_scm, simulate
from .search import ias_search, icp_search, screen_markov_boundary
from .varset import jaccard

EXPERIMENTS = (
    "oracle_lowdim",
    "oracle_highdim",
    "finite_sample",
    "max_mi",
    "alpha0_sweep",
    "weak_interventions",
    "correction_ablation",
)

_ABLATION_BASE = ("alpha0_sweep", "weak_interventions", "correction_ablation")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment grid.

    Use :func:`default_config` to start from the per-study desk-scale
    defaults and override selectively.
    """

    experiment: str
    seed: int = 0
    out: str = "results.csv"
    timing: bool = False
    # oracle studies
    d_list: tuple[int, ...] = (6,)
    densities: tuple[str, ...] = ("sparse",)
    interventions: tuple = (1,)          # ints or (lo, hi) tuples
    graphs_per_cell: int = 5000
    m_list: tuple[int, ...] = (1,)
    budget: int | None = None
    # finite-sample studies
    n_list: tuple[int, ...] = (100, 1000, 10000, 100000)
    n_scms: int = 20
    datasets_per_scm: int = 20
    strength: float = 1.0
    alpha: float = 0.05
    alpha0: float = 1e-6
    alpha1: float | None = None
    correction: str | float = "auto"
    m: int | None = None
    screen: int = 10                     # ICP candidate cap for wide data
    # ablation sweeps
    alpha0_list: tuple[float, ...] = (0.05, 1e-6, 1e-12)
    correction_list: tuple = ("heuristic_3pow", "full_2d")
    strength_list: tuple[float, ...] = (0.5,)
    # max_mi
    batches: int = 10000
    batch_chunk: int = 500
    patience: int | None = None
    density_prior: tuple[float, float] | None = (0.0, 1.0)
    interventions_prior: tuple[int, int] | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        for count in (self.graphs_per_cell, self.n_scms, self.datasets_per_scm, self.batches):
            if count < 1:
                raise ValueError("replication counts must be >= 1")


_DEFAULTS = {
    "oracle_lowdim": dict(
        d_list=(4, 8, 12, 16, 20),
        densities=("sparse", "dense"),
        interventions=(),  # filled per d below
        graphs_per_cell=5000,
    ),
    "oracle_highdim": dict(
        d_list=(100,),
        densities=("sparse",),
        interventions=((1, 10),),
        graphs_per_cell=1000,
        m_list=(1, 2),
    ),
    "finite_sample": dict(d_list=(6,)),
    "max_mi": dict(d_list=(6,)),
    "alpha0_sweep": dict(d_list=(6,), n_list=(100, 1000, 10000)),
    "weak_interventions": dict(d_list=(6,)),
    "correction_ablation": dict(d_list=(6,)),
}


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    """Desk-scale defaults for a study, with keyword overrides."""
    params = dict(_DEFAULTS.get(experiment, {}))
    params.update(overrides)
    return ExperimentConfig(experiment=experiment, **params)


def _lowdim_interventions(config: ExperimentConfig, d: int) -> tuple[int, ...]:
    if config.interventions:
        return tuple(n for n in config.interventions if isinstance(n, tuple) or n <= d)
    return tuple(sorted({1, max(1, d // 4), max(1, d // 2), d}))


# -- cells -------------------------------------------------------------------


def list_cells(config: ExperimentConfig) -> list[dict]:
    """The ordered cell specifications for a config."""
    cells = []
    if config.experiment == "oracle_lowdim":
        for d in config.d_list:
            for density in config.densities:
                for n_int in _lowdim_interventions(config, d):
                    cells.append({"d": d, "density": density, "n_interventions": n_int})
    elif config.experiment == "oracle_highdim":
        for d in config.d_list:
            for density in config.densities:
                for n_int in config.interventions:
                    cells.append({"d": d, "density": density, "n_interventions": n_int})
    elif config.experiment in ("finite_sample",) + _ABLATION_BASE:
        for d in config.d_list:
            for scm_index in range(config.n_scms):
                cells.append({"d": d, "scm": scm_index})
    elif config.experiment == "max_mi":
        for d in config.d_list:
            start = 0
            while start < config.batches:
                stop = min(start + config.batch_chunk, config.batches)
                cells.append({"d": d, "batch_start": start, "batch_stop": stop})
                start = stop
    return cells


def cell_id(spec: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in spec.items())


def expected_rows(config: ExperimentConfig, spec: dict) -> int:
    if config.experiment == "oracle_lowdim":
        return config.graphs_per_cell
    if config.experiment == "oracle_highdim":
        return config.graphs_per_cell * len(config.m_list)
    if config.experiment == "max_mi":
        return spec["batch_stop"] - spec["batch_start"]
    n_variants = len(_variants(config))
    return n_variants * len(config.n_list) * config.datasets_per_scm * 2


def columns(config: ExperimentConfig) -> list[str]:
    if config.experiment == "oracle_lowdim":
        cols = [
            "cell", "d", "density", "n_interventions", "rep",
            "size_icp", "size_ias", "size_an",
            "icp_strict_subset", "icp_equal_ias",
        ]
    elif config.experiment == "oracle_highdim":
        cols = [
            "cell", "d", "density", "rep", "n_interventions", "m",
            "size_ias_m", "size_icp_mb", "size_mb",
        ]
    elif config.experiment == "max_mi":
        cols = ["cell", "d", "batch", "mi_count"]
    else:
        cols = [
            "cell", "d", "scm", "variant", "n", "dataset", "method",
            "jaccard_an", "subset_an", "is_empty", "size", "oracle_equal",
        ]
    if config.timing:
        cols.append("wall_time")
    return cols


# -- per-cell computation ----------------------------------------------------


def _variants(config: ExperimentConfig) -> list[dict]:
    """The decision/strength variants swept inside finite-sample cells."""
    base = dict(
        alpha=config.alpha,
        alpha0=config.alpha0,
        alpha1=config.alpha1,
        correction=config.correction,
        strength=config.strength,
    )
    if config.experiment == "finite_sample":
        return [dict(base, variant="base")]
    if config.experiment == "alpha0_sweep":
        return [dict(base, variant=f"alpha0={a0:g}", alpha0=a0) for a0 in config.alpha0_list]
    if config.experiment == "weak_interventions":
        return [dict(base, variant=f"strength={s:g}", strength=s) for s in config.strength_list]
    if config.experiment == "correction_ablation":
        return [dict(base, variant=f"C={c}", correction=c) for c in config.correction_list]
    raise ValueError(config.experiment)


def run_cell(config: ExperimentConfig, cell_index: int, spec: dict) -> list[dict]:
    """Compute the rows of one cell.  Deterministic in (config, cell_index)."""
    if config.experiment == "oracle_lowdim":
        return _oracle_lowdim_cell(config, cell_index, spec)
    if config.experiment == "oracle_highdim":
        return _oracle_highdim_cell(config, cell_index, spec)
    if config.experiment == "max_mi":
        return _max_mi_cell(config, cell_index, spec)
    return _finite_sample_cell(config, cell_index, spec)


def _oracle_lowdim_cell(config, cell_index, spec) -> list[dict]:
    ident = cell_id(spec)
    sampler = GraphSamplerConfig(
        d=spec["d"], density=spec["density"], n_interventions=spec["n_interventions"]
    )
    rows = []
    for rep in range(config.graphs_per_cell):
        rng = substream(config.seed, cell_index, rep)
        started = time.perf_counter()
        dag = sample_dag(sampler, rng)
        s_icp = icp_set(dag)
        s_ias = ias_set(dag, budget=config.budget)
        an = dag.ancestors_of_response()
        assert s_icp <= s_ias <= an
        row = {
            "cell": ident,
            "d": spec["d"],
            "density": spec["density"],
            "n_interventions": spec["n_interventions"],
            "rep": rep,
            "size_icp": len(s_icp),
            "size_ias": len(s_ias),
            "size_an": len(an),
            "icp_strict_subset": int(s_icp < s_ias),
            "icp_equal_ias": int(s_icp == s_ias),
        }
        if config.timing:
            row["wall_time"] = time.perf_counter() - started
        rows.append(row)
    return rows


def _oracle_highdim_cell(config, cell_index, spec) -> list[dict]:
    ident = cell_id(spec)
    sampler = GraphSamplerConfig(
        d=spec["d"], density=spec["density"], n_interventions=spec["n_interventions"]
    )
    rows = []
    for rep in range(config.graphs_per_cell):
        rng = substream(config.seed, cell_index, rep)
        started = time.perf_counter()
        dag = sample_dag(sampler, rng)
        n_int = len(dag.children(0))
        mb = markov_boundary(dag)
        s_icp_mb = icp_set_mb(dag)
        an = dag.ancestors_of_response()
        for m in config.m_list:
            s_m = ias_set(dag, max_size=m, budget=config.budget)
            assert s_m <= an
            row = {
                "cell": ident,
                "d": spec["d"],
                "density": spec["density"],
                "rep": rep,
                "n_interventions": n_int,
                "m": m,
                "size_ias_m": len(s_m),
                "size_icp_mb": len(s_icp_mb),
                "size_mb": len(mb),
            }
            if config.timing:
                row["wall_time"] = time.perf_counter() - started
            rows.append(row)
    return rows


def _max_mi_cell(config, cell_index, spec) -> list[dict]:
    ident = cell_id(spec)
    d = spec["d"]
    interventions = config.interventions_prior or (1, d)
    sampler = GraphSamplerConfig(
        d=d,
        n_interventions=interventions,
        density_prior=config.density_prior,
    )
    rows = []
    for batch in range(spec["batch_start"], spec["batch_stop"]):
        rng = substream(config.seed, d, batch)
        started = time.perf_counter()
        dag = sample_dag(sampler, rng)
        count = len(minimally_invariant_sets(dag, budget=config.budget))
        row = {"cell": ident, "d": d, "batch": batch, "mi_count": count}
        if config.timing:
            row["wall_time"] = time.perf_counter() - started
        rows.append(row)
    return rows


def _finite_sample_cell(config, cell_index, spec) -> list[dict]:
    ident = cell_id(spec)
    d = spec["d"]
    scm_index = spec["scm"]
    if d <= 20:
        sampler = GraphSamplerConfig(d=d, density="sparse", n_interventions=1)
        m = config.m
    else:
        sampler = GraphSamplerConfig(
            d=d, density="sparse", n_interventions=(1, max(1, d // 10))
        )
        m = 1 if config.m is None else config.m
    rng = substream(config.seed, cell_index, 0)
    dag = sample_dag(sampler, rng)
    an = dag.ancestors_of_response()
    oracle_icp = icp_set(dag)
    oracle_ias = ias_set(dag)
    oracle_equal = int(oracle_icp == oracle_ias)
    rows = []
    for v_idx, variant in enumerate(_variants(config)):
        scm = sample_scm(dag, strength=variant["strength"], rng=substream(config.seed, cell_index, 1))
        decision = DecisionConfig(
            alpha=variant["alpha"],
            alpha0=variant["alpha0"],
            alpha1=variant["alpha1"],
            correction=variant["correction"],
            m=m,
        )
        for n_idx, n in enumerate(config.n_list):
            for ds in range(config.datasets_per_scm):
                data = simulate(scm, n, substream(config.seed, cell_index, 2, v_idx, n_idx, ds))
                started = time.perf_counter()
                report = ias_search(data, decision)
                ias_time = time.perf_counter() - started
                started = time.perf_counter()
                if d <= 20:
                    icp_hat = icp_search(data, alpha=variant["alpha"])
                else:
                    candidates = screen_markov_boundary(data, config.screen)
                    icp_hat = icp_search(data, candidates, alpha=variant["alpha"])
                icp_time = time.perf_counter() - started
                for method, s_hat, wall in (
                    ("ias", report.s_hat, ias_time),
                    ("icp", icp_hat, icp_time),
                ):
                    row = {
                        "cell": ident,
                        "d": d,
                        "scm": scm_index,
                        "variant": variant["variant"],
                        "n": n,
                        "dataset": ds,
                        "method": method,
                        "jaccard_an": jaccard(s_hat, an),
                        "subset_an": int(s_hat <= an),
                        "is_empty": int(not s_hat),
                        "size": len(s_hat),
                        "oracle_equal": oracle_equal,
                    }
                    if config.timing:
                        row["wall_time"] = wall
                    rows.append(row)
    return rows


# -- driver ------------------------------------------------------------------


@dataclass
class RunResult:
    path: str
    cells_done: int
    cells_skipped: int
    cells_failed: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 3 if self.cells_failed else 0


def _read_complete_cells(path: str, config: ExperimentConfig) -> dict[str, list[dict]]:
    if not os.path.exists(path):
        return {}
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    by_cell: dict[str, list[dict]] = {}
    for row in rows:
        by_cell.setdefault(row["cell"], []).append(row)
    complete = {}
    for spec in list_cells(config):
        ident = cell_id(spec)
        got = by_cell.get(ident, [])
        if len(got) == expected_rows(config, spec):
            complete[ident] = got
    return complete


def run_experiment(config: ExperimentConfig, jobs: int = 1, resume: bool = False) -> RunResult:
    """Run all cells, writing (and flushing) the CSV one cell at a time.

    With ``resume`` the output file is scanned first and cells that are
    already complete are kept as-is.  Cells whose sampler or budget
    fails are dropped entirely and reported through the exit code.
    """
    cells = list_cells(config)
    done = _read_complete_cells(config.out, config) if resume else {}
    cols = columns(config)
    result = RunResult(path=config.out, cells_done=0, cells_skipped=len(done))

    out_dir = os.path.dirname(os.path.abspath(config.out))
    os.makedirs(out_dir, exist_ok=True)

    def compute(args):
        index, spec = args
        ident = cell_id(spec)
        if ident in done:
            return ident, None
        try:
            return ident, run_cell(config, index, spec)
        except (SamplingError, BudgetExceededError) as exc:
            return ident, exc

    tasks = list(enumerate(cells))
    if jobs > 1:
        import multiprocessing

        pool = multiprocessing.Pool(jobs)
        outcomes = pool.imap(_CellWorker(config, set(done)), tasks)
    else:
        outcomes = map(compute, tasks)

    with open(config.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for ident, outcome in outcomes:
            if outcome is None:
                for row in done[ident]:
                    writer.writerow({k: v for k, v in row.items() if k in cols})
            elif isinstance(outcome, Exception):
                result.cells_failed.append(f"{ident}: {outcome}")
            else:
                for row in outcome:
                    writer.writerow(row)
                result.cells_done += 1
            fh.flush()
    if jobs > 1:
        pool.close()
        pool.join()
    return result


class _CellWorker:
    """Picklable per-cell task for multiprocessing pools."""

    def __init__(self, config: ExperimentConfig, done: set[str]):
        self.config = config
        self.done = done

    def __call__(self, args):
        index, spec = args
        ident = cell_id(spec)
        if ident in self.done:
            return ident, None
        try:
            return ident, run_cell(self.config, index, spec)
        except (SamplingError, BudgetExceededError) as exc:
            return ident, exc


# -- summaries ---------------------------------------------------------------

_ID_COLS = {"cell", "rep", "scm", "dataset", "batch", "wall_time"}


def summarize(in_path: str, by: list[str] | None = None) -> "pandas.DataFrame":
    """Per-cell means, medians and binomial confidence intervals.

    Groups by the identifier columns (everything non-metric except
    replication indices) unless ``by`` is given, and reports
    mean/median/count for each numeric metric plus a normal-approx 95%
    CI half-width for binary metrics.
    """
    import numpy as np
    import pandas as pd

    frame = pd.read_csv(in_path)
    metrics = [
        c
        for c in frame.columns
        if c not in _ID_COLS and pd.api.types.is_numeric_dtype(frame[c])
    ]
    if by is None:
        by = [c for c in frame.columns if c not in _ID_COLS and c not in metrics]
        # numeric grid identifiers (d, n, m, ...) are group keys, not metrics
        for c in ("d", "n", "m", "n_interventions", "oracle_equal"):
            if c in metrics:
                metrics.remove(c)
                by.append(c)
    else:
        metrics = [c for c in metrics if c not in by]
    grouped = frame.groupby(by, sort=True)
    pieces = {}
    for metric in metrics:
        agg = grouped[metric].agg(["mean", "median", "count"])
        is_binary = frame[metric].dropna().isin((0, 1)).all()
        if is_binary:
            p = agg["mean"]
            agg["ci95_half_width"] = 1.96 * np.sqrt(p * (1 - p) / agg["count"])
        pieces[metric] = agg
    out = pd.concat(pieces, axis=1)
    out.columns = ["_".join(col) for col in out.columns]
    return out.reset_index()
