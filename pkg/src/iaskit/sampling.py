"""Random DAG generation for the simulation studies.

Graphs over (X, Y) are Erdos-Renyi with respect to a uniformly random
causal order: each forward pair gets an edge independently with
probability p.  The sparse setting uses p = 2/d (expected d+1 edges
among the d+1 non-environment nodes), the dense setting p = 0.75.  The
response is drawn uniformly among non-root nodes, the environment is
attached with a fixed number of predictor children, and the whole draw
is rejected until Y is a descendant of E.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SamplingError
from .graph import ENV, Dag
from .oracle import minimally_invariant_sets
from .rng import make_rng

MAX_ATTEMPTS = 100_000


@dataclass(frozen=True)
class GraphSamplerConfig:
    """Sampler settings.

    density: "sparse", "dense", or an explicit edge probability.
    n_interventions: number of environment children among the
        predictors; a (lo, hi) pair draws it uniformly per graph.
    density_prior: optional (lo, hi); when set, the edge probability is
        drawn uniformly from the interval for every graph, overriding
        ``density``.
    """

    d: int
    density: float | str = "sparse"
    n_interventions: int | tuple[int, int] = 1
    mode: str = "exogenous"
    rng_seed: int | None = None
    density_prior: tuple[float, float] | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if isinstance(self.density, str):
            if self.density not in ("sparse", "dense"):
                raise ValueError(f"unknown density {self.density!r}")
        elif not 0.0 <= self.density <= 1.0:
            raise ValueError("explicit edge probability must be in [0, 1]")
        lo, hi = self._intervention_bounds()
        if not 1 <= lo <= hi <= self.d:
            raise ValueError("n_interventions must lie in 1..d")
        if self.mode not in ("exogenous", "nonexogenous"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.density_prior is not None:
            lo, hi = self.density_prior
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError("density_prior bounds must lie in [0, 1]")

    def _intervention_bounds(self) -> tuple[int, int]:
        if isinstance(self.n_interventions, tuple):
            return self.n_interventions
        return self.n_interventions, self.n_interventions

    def edge_probability(self, rng: np.random.Generator) -> float:
        if self.density_prior is not None:
            lo, hi = self.density_prior
            return float(rng.uniform(lo, hi))
        if self.density == "sparse":
            return min(1.0, 2.0 / self.d)
        if self.density == "dense":
            return 0.75
        return float(self.density)

    def draw_interventions(self, rng: np.random.Generator) -> int:
        lo, hi = self._intervention_bounds()
        if lo == hi:
            return lo
        return int(rng.integers(lo, hi + 1))


def _forward_edges(n: int, p: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Edges over anonymous nodes 0..n-1 along a random causal order."""
    perm = rng.permutation(n)
    draws = rng.random(n * (n - 1) // 2)
    edges = []
    t = 0
    for i in range(n):
        for j in range(i + 1, n):
            if draws[t] < p:
                edges.append((int(perm[i]), int(perm[j])))
            t += 1
    return edges


def _reaches(edges: list[tuple[int, int]], src: int, dst: int, n: int) -> bool:
    children: list[list[int]] = [[] for _ in range(n)]
    for p, c in edges:
        children[p].append(c)
    stack = [src]
    seen = {src}
    while stack:
        v = stack.pop()
        if v == dst:
            return True
        for c in children[v]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False


def sample_dag(config: GraphSamplerConfig, rng: np.random.Generator | None = None) -> Dag:
    """Draw one DAG satisfying the sampler's validity conditions.

    Guaranteed on return: Y is not a root among the (X, Y) nodes, the
    environment has exactly the configured number of predictor children
    (never Y), and Y is a descendant of E.  Raises
    :class:`~iaskit.errors.SamplingError` if rejection sampling does not
    succeed within the attempt budget.
    """
    if rng is None:
        rng = make_rng(config.rng_seed)
    d = config.d
    for _ in range(MAX_ATTEMPTS):
        p = config.edge_probability(rng)
        anon_edges = _forward_edges(d + 1, p, rng)
        has_parent = [False] * (d + 1)
        for _, c in anon_edges:
            has_parent[c] = True
        non_roots = [v for v in range(d + 1) if has_parent[v]]
        if not non_roots:
            continue
        y_anon = int(rng.choice(non_roots))
        # remaining anonymous nodes become X1..Xd in ascending id order
        final = {}
        k = 1
        for v in range(d + 1):
            if v == y_anon:
                final[v] = d + 1
            else:
                final[v] = k
                k += 1
        edges = [(final[a], final[b]) for a, b in anon_edges]
        n_int = config.draw_interventions(rng)
        if config.mode == "exogenous":
            targets = rng.choice(np.arange(1, d + 1), size=n_int, replace=False)
            edges.extend((ENV, int(t)) for t in targets)
        else:
            edges = _attach_nonexogenous_env(edges, d, p, n_int, rng)
            if edges is None:
                continue
        if not _reaches(edges, ENV, d + 1, d + 2):
            continue
        return Dag(d, edges, mode=config.mode)
    raise SamplingError(f"no valid graph found in {MAX_ATTEMPTS} attempts for {config}")


def _attach_nonexogenous_env(edges, d, p, n_int, rng):
    """Insert E at a random slot of the causal order over the predictors:
    earlier predictors may become parents of E (each with probability p),
    and E gets n_int children among the later predictors."""
    order = _causal_order_of_predictors(edges, d)
    slot = int(rng.integers(0, d + 1))
    before = order[:slot]
    after = [v for v in order[slot:] if v != d + 1]
    if len(after) < n_int:
        return None
    new_edges = list(edges)
    for v in before:
        if v != d + 1 and rng.random() < p:
            new_edges.append((v, ENV))
    targets = rng.choice(np.array(after), size=n_int, replace=False)
    new_edges.extend((ENV, int(t)) for t in targets)
    return new_edges


def _causal_order_of_predictors(edges, d) -> list[int]:
    n = d + 2
    children: list[list[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    present = set()
    for pnode, c in edges:
        children[pnode].append(c)
        indeg[c] += 1
        present.add(pnode)
        present.add(c)
    present.update(range(1, d + 2))  # isolated predictors participate too
    order = [v for v in sorted(present) if indeg[v] == 0]
    out = []
    queue = list(order)
    while queue:
        v = queue.pop(0)
        out.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return out


def simulate_max_mi_count(
    config: GraphSamplerConfig,
    batches: int,
    patience: int | None = None,
    rng: np.random.Generator | None = None,
) -> int:
    """Largest number of minimally invariant sets seen over sampled graphs.

    Draws ``batches`` graphs from the config's priors and returns the
    maximum family size; with ``patience`` set, stops early once the
    maximum has not improved for that many consecutive draws.  The
    result is an empirical lower bound on the worst case for the given
    priors, nothing more.
    """
    if batches < 1:
        raise ValueError("batches must be >= 1")
    if rng is None:
        rng = make_rng(config.rng_seed)
    best = 0
    stale = 0
    for _ in range(batches):
        dag = sample_dag(config, rng)
        count = len(minimally_invariant_sets(dag))
        if count > best:
            best = count
            stale = 0
        else:
            stale += 1
            if patience is not None and stale >= patience:
                break
    return best
