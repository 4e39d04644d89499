"""Population (graph-oracle) algorithms for invariant sets.

Everything here takes the causal DAG as ground truth: a predictor set is
invariant iff it d-separates the environment node from the response.
The module computes the intersection of all invariant sets (the ICP
identifier), the family of minimally invariant sets, and their union
(the invariant-ancestry identifier), with two interchangeable
enumeration backends:

* ``bruteforce`` scans subsets of the response's ancestors in order of
  increasing size, pruning supersets of already-accepted sets.
* ``separators`` enumerates minimal vertex separators between E and Y
  in the moralized ancestral graph, walking the separator lattice from
  the separator closest to E via neighbor-absorption moves.

Both return the same family; the second has polynomial delay per set
and is dramatically faster on dense graphs with many ancestors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

from .errors import BudgetExceededError
from .graph import ENV, Dag, UndirectedGraph, _bits, moral_ancestral_graph
from .varset import VarSet

DEFAULT_BUDGET = 10_000_000


def _check_varset(dag: Dag, s: VarSet) -> None:
    if s.mask & ~dag.predictor_mask():
        raise ValueError(f"{s} contains indices outside 1..{dag.d}")


def is_invariant(dag: Dag, s: VarSet) -> bool:
    """True iff conditioning on ``s`` d-separates E from Y."""
    _check_varset(dag, s)
    return dag.d_separated_masks(ENV, dag.response, s.mask)


def is_minimally_invariant(dag: Dag, s: VarSet) -> bool:
    """True iff ``s`` is invariant and dropping any single member breaks it.

    The one-element-removal check suffices: an invariant set has an
    invariant strict subset iff it has one of size |s| - 1.
    """
    _check_varset(dag, s)
    if not dag.d_separated_masks(ENV, dag.response, s.mask):
        return False
    for j in s:
        if dag.d_separated_masks(ENV, dag.response, s.mask & ~(1 << j)):
            return False
    return True


@dataclass(frozen=True)
class MinimalInvariantFamily:
    """All minimally invariant sets of one DAG, sorted by (size, indices)."""

    sets: tuple[VarSet, ...]
    dag_fingerprint: str

    def __post_init__(self):
        masks = [s.mask for s in self.sets]
        for i, a in enumerate(masks):
            for b in masks[i + 1:]:
                if a & b == a or a & b == b:
                    raise ValueError("family is not an antichain")

    def __iter__(self) -> Iterator[VarSet]:
        return iter(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    def __contains__(self, s: VarSet) -> bool:
        return s in self.sets

    def union(self, max_size: int | None = None) -> VarSet:
        """Union of the member sets, optionally only those of size <= max_size."""
        mask = 0
        for s in self.sets:
            if max_size is None or len(s) <= max_size:
                mask |= s.mask
        return VarSet.from_mask(mask)

    def intersection(self) -> VarSet:
        """Intersection of the member sets; empty when the family is empty."""
        if not self.sets:
            return VarSet.empty()
        mask = self.sets[0].mask
        for s in self.sets[1:]:
            mask &= s.mask
        return VarSet.from_mask(mask)

    @property
    def min_size(self) -> int | None:
        return len(self.sets[0]) if self.sets else None

    @property
    def max_size(self) -> int | None:
        return len(self.sets[-1]) if self.sets else None

    def to_jsonl(self) -> str:
        """One set per line as a sorted JSON index array."""
        return "".join(json.dumps(list(s.indices())) + "\n" for s in self.sets)

    @classmethod
    def from_jsonl(cls, text: str, dag_fingerprint: str = "") -> "MinimalInvariantFamily":
        sets = tuple(
            VarSet(json.loads(line))
            for line in text.splitlines()
            if line.strip()
        )
        return cls(_sort_family(sets), dag_fingerprint)


def _sort_family(sets) -> tuple[VarSet, ...]:
    return tuple(sorted(sets, key=lambda s: (len(s), s.indices())))


class _Budget:
    __slots__ = ("left",)

    def __init__(self, budget: int | None):
        self.left = DEFAULT_BUDGET if budget is None else budget

    def spend(self, found) -> None:
        self.left -= 1
        if self.left < 0:
            raise BudgetExceededError(
                "enumeration budget exhausted", [VarSet.from_mask(m) for m in found]
            )


def iter_minimally_invariant_sets(
    dag: Dag,
    max_size: int | None = None,
    budget: int | None = None,
    backend: str = "auto",
    candidates: VarSet | None = None,
) -> Iterator[VarSet]:
    """Lazily yield every minimally invariant set, each exactly once.

    ``candidates`` restricts the search to subsets of the given
    predictors (e.g. the observed variables when some are latent).
    Yield order depends on the backend; use
    :func:`minimally_invariant_sets` for the canonical sorted family.
    """
    if backend == "auto":
        backend = "bruteforce" if max_size is not None else "separators"
    cand_mask = dag.predictor_mask()
    if candidates is not None:
        _check_varset(dag, candidates)
        cand_mask &= candidates.mask
    if backend == "bruteforce":
        return _iter_bruteforce(dag, max_size, _Budget(budget), cand_mask)
    if backend == "separators":
        return _iter_separators(dag, max_size, _Budget(budget), cand_mask)
    raise ValueError(f"unknown backend {backend!r}")


def minimally_invariant_sets(
    dag: Dag,
    max_size: int | None = None,
    budget: int | None = None,
    backend: str = "auto",
    candidates: VarSet | None = None,
) -> MinimalInvariantFamily:
    """The full family of minimally invariant sets (size <= max_size if given)."""
    sets = list(iter_minimally_invariant_sets(dag, max_size, budget, backend, candidates))
    return MinimalInvariantFamily(_sort_family(sets), dag.fingerprint())


def _iter_bruteforce(dag: Dag, max_size, budget: _Budget, cand_mask: int):
    # Minimally invariant sets only contain ancestors of Y, so the scan
    # is restricted to them.
    response = dag.response
    base = dag.ancestor_mask(response) & cand_mask
    idx = list(_bits(base))
    top = len(idx) if max_size is None else min(max_size, len(idx))
    accepted: list[int] = []
    for size in range(top + 1):
        for combo in combinations(idx, size):
            mask = 0
            for j in combo:
                mask |= 1 << j
            skip = False
            for acc in accepted:
                if acc & mask == acc:
                    skip = True
                    break
            if skip:
                continue
            budget.spend(accepted)
            if dag.d_separated_masks(ENV, response, mask):
                accepted.append(mask)
                yield VarSet.from_mask(mask)


def _iter_separators(dag: Dag, max_size, budget: _Budget, cand_mask: int):
    graph = moral_ancestral_graph(dag, ENV, dag.response)
    hidden = graph.nodes_mask & ~(1 << ENV) & ~(1 << dag.response) & ~cand_mask
    if hidden:
        graph = _contract(graph, hidden)
    for mask in _minimal_separators(graph, ENV, dag.response, budget):
        if max_size is None or bin(mask).count("1") <= max_size:
            yield VarSet.from_mask(mask)


def _contract(graph: UndirectedGraph, remove_mask: int) -> UndirectedGraph:
    """Remove nodes that may not appear in a separator, short-circuiting
    paths through them by connecting their neighborhoods into cliques."""
    adj = list(graph.adj)
    nodes = graph.nodes_mask
    for h in _bits(remove_mask & nodes):
        nodes &= ~(1 << h)
        nb = adj[h] & nodes
        for v in _bits(nb):
            adj[v] = (adj[v] | nb) & ~(1 << v) & ~(1 << h)
    for v in _bits(nodes):
        adj[v] &= nodes
    return UndirectedGraph(nodes, adj)


def _neighborhood(graph: UndirectedGraph, comp: int) -> int:
    out = 0
    adj = graph.adj
    for v in _bits(comp):
        out |= adj[v]
    return out & graph.nodes_mask & ~comp


def _minimize(graph: UndirectedGraph, a: int, b: int, sep: int) -> int:
    """Shrink a separator to a minimal one: keep only vertices adjacent to
    the b-side component, then only those adjacent to the a-side one."""
    s1 = _neighborhood(graph, graph.component(b, sep))
    return _neighborhood(graph, graph.component(a, s1))


def _minimal_separators(graph: UndirectedGraph, a: int, b: int, budget: _Budget):
    """All inclusion-minimal (a, b) vertex separators.

    Starts from the separator closest to ``a`` and explores the
    separator lattice: absorbing a separator vertex into the a-side
    component and re-minimizing yields a new minimal separator, and
    every minimal separator is reachable this way.
    """
    if graph.adj[a] >> b & 1:
        return
    if graph.separated(a, b, 0):
        yield 0
        return
    adj = graph.adj
    found: list[int] = []
    budget.spend(found)
    start = _minimize(graph, a, b, adj[a] & graph.nodes_mask)
    seen = {start}
    found.append(start)
    stack = [start]
    yield start
    while stack:
        sep = stack.pop()
        comp_a = graph.component(a, sep)
        for v in _bits(sep):
            if adj[v] >> b & 1:
                continue
            budget.spend(found)
            absorbed = comp_a | (1 << v)
            candidate = _neighborhood(graph, absorbed)
            nxt = _minimize(graph, a, b, candidate)
            if nxt not in seen:
                seen.add(nxt)
                found.append(nxt)
                stack.append(nxt)
                yield nxt


# -- closed forms and derived identifiers -----------------------------------


def ias_set(
    dag: Dag,
    max_size: int | None = None,
    budget: int | None = None,
    backend: str = "auto",
    candidates: VarSet | None = None,
) -> VarSet:
    """Union of all minimally invariant sets of size <= max_size.

    This identifies ancestors of the response: the union is always a
    subset of AN(Y), and with no size cap it is itself invariant
    whenever E is not a parent of Y.  Empty when no set is invariant.
    """
    family = minimally_invariant_sets(dag, max_size, budget, backend, candidates)
    return family.union()


def icp_set(dag: Dag) -> VarSet:
    """Intersection of all invariant predictor sets.

    For an exogenous environment that is not a parent of Y, the result
    has the closed form PA(Y) & (CH(E) | PA(AN(Y) & CH(E))).  Otherwise
    it falls back to intersecting the enumerated minimally invariant
    family, which equals the intersection over all invariant sets.
    """
    response = dag.response
    pred = dag.predictor_mask()
    if dag.mode == "exogenous" and not dag.parent_masks[response] >> ENV & 1:
        pa_y = dag.parent_masks[response] & pred
        ch_e = dag.child_masks[ENV] & pred
        affected = dag.ancestor_mask(response) & ch_e
        pa_affected = 0
        for v in _bits(affected):
            pa_affected |= dag.parent_masks[v]
        return VarSet.from_mask(pa_y & (ch_e | (pa_affected & pred)))
    return minimally_invariant_sets(dag).intersection()


def icp_set_bruteforce(dag: Dag, max_d: int = 20) -> VarSet:
    """Reference implementation: intersect every invariant subset of 1..d.

    Enumerates all 2^d subsets, so it is guarded to small d.
    """
    if dag.d > max_d:
        raise ValueError(f"brute force limited to d <= {max_d}, got d={dag.d}")
    response = dag.response
    inter = None
    for raw in range(1 << dag.d):
        mask = raw << 1
        if dag.d_separated_masks(ENV, response, mask):
            inter = mask if inter is None else inter & mask
    return VarSet.empty() if inter is None else VarSet.from_mask(inter)


def markov_boundary(dag: Dag) -> VarSet:
    """Parents, children and co-parents of the response, among predictors."""
    response = dag.response
    mask = dag.parent_masks[response] | dag.child_masks[response]
    for c in _bits(dag.child_masks[response]):
        mask |= dag.parent_masks[c]
    return VarSet.from_mask(mask & dag.predictor_mask())


def icp_set_mb(dag: Dag, max_boundary: int = 25) -> VarSet:
    """ICP restricted to subsets of the Markov boundary of the response."""
    mb = markov_boundary(dag)
    if len(mb) > max_boundary:
        raise ValueError(
            f"Markov boundary has {len(mb)} members, exceeds limit {max_boundary}"
        )
    response = dag.response
    inter = None
    sub = mb.mask
    while True:
        if dag.d_separated_masks(ENV, response, sub):
            inter = sub if inter is None else inter & sub
        if sub == 0:
            break
        sub = (sub - 1) & mb.mask
    return VarSet.empty() if inter is None else VarSet.from_mask(inter)
