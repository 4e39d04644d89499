"""Directed acyclic graphs over an environment node, predictors and a response.

Node indexing is fixed: node 0 is the environment E, nodes 1..d are the
predictors X1..Xd, and node d+1 is the response Y.  Adjacency is stored
as one integer bitmask per node (bit i <-> node i), which keeps the
reachability and d-separation routines allocation-free in their inner
loops; these are called millions of times by the enumeration oracles and
the simulation studies.

Graphs are immutable after construction and safe to share between
concurrent workers.
"""

from __future__ import annotations

import csv
import hashlib
import io
from collections import deque
from typing import Iterable, Sequence

from .varset import VarSet

ENV = 0

_KINDS = ("parents", "children", "ancestors", "descendants")


def _bits(mask: int):
    """Iterate over the set bit positions of ``mask``."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Dag:
    """Immutable DAG over nodes {E, X1..Xd, Y}.

    Parameters
    ----------
    d : int
        Number of predictor nodes.
    edges : iterable of (int, int)
        Directed edges as (parent, child) node indices.
    mode : {"exogenous", "nonexogenous"}
        In exogenous mode E must have no parents.  In nonexogenous mode
        E may have parents but must be an ancestor of Y.
    """

    __slots__ = (
        "d",
        "mode",
        "parent_masks",
        "child_masks",
        "topological_order",
        "_anc_cache",
        "_desc_cache",
        "_moral_cache",
    )

    def __init__(self, d: int, edges: Iterable[tuple[int, int]], mode: str = "exogenous"):
        if d < 0:
            raise ValueError("d must be non-negative")
        if mode not in ("exogenous", "nonexogenous"):
            raise ValueError(f"unknown mode {mode!r}")
        n = d + 2
        parent_masks = [0] * n
        child_masks = [0] * n
        for p, c in edges:
            if not (0 <= p < n and 0 <= c < n):
                raise ValueError(f"edge ({p}, {c}) out of range for d={d}")
            if p == c:
                raise ValueError(f"self loop at node {p}")
            parent_masks[c] |= 1 << p
            child_masks[p] |= 1 << c
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "parent_masks", parent_masks)
        object.__setattr__(self, "child_masks", child_masks)
        object.__setattr__(self, "topological_order", self._toposort())
        object.__setattr__(self, "_anc_cache", {})
        object.__setattr__(self, "_desc_cache", {})
        object.__setattr__(self, "_moral_cache", {})
        if mode == "exogenous":
            if parent_masks[ENV]:
                raise ValueError("environment node must have no parents in exogenous mode")
        else:
            if not (self.ancestor_mask(self.response) >> ENV) & 1:
                raise ValueError("nonexogenous mode requires E to be an ancestor of Y")

    def __setattr__(self, name, value):
        raise AttributeError("Dag is immutable")

    # -- basic structure ------------------------------------------------

    @property
    def response(self) -> int:
        return self.d + 1

    @property
    def n_nodes(self) -> int:
        return self.d + 2

    def _toposort(self) -> tuple[int, ...]:
        n = self.n_nodes
        indeg = [bin(self.parent_masks[v]).count("1") for v in range(n)]
        queue = deque(v for v in range(n) if indeg[v] == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for c in _bits(self.child_masks[v]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != n:
            raise ValueError("graph contains a directed cycle")
        return tuple(order)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, c) for c in range(self.n_nodes) for p in _bits(self.parent_masks[c])]

    def n_edges(self) -> int:
        return sum(bin(m).count("1") for m in self.parent_masks)

    def role(self, node: int) -> str:
        self._check_node(node)
        if node == ENV:
            return "env"
        if node == self.response:
            return "response"
        return "predictor"

    def _check_node(self, node: int) -> None:
        if not (0 <= node < self.n_nodes):
            raise ValueError(f"node {node} not in graph with d={self.d}")

    def has_edge(self, p: int, c: int) -> bool:
        self._check_node(p)
        self._check_node(c)
        return bool(self.parent_masks[c] >> p & 1)

    # -- relatives -------------------------------------------------------

    def parent_mask(self, node: int) -> int:
        self._check_node(node)
        return self.parent_masks[node]

    def child_mask(self, node: int) -> int:
        self._check_node(node)
        return self.child_masks[node]

    def ancestor_mask(self, node: int) -> int:
        """Bitmask of strict ancestors of ``node`` (node itself excluded)."""
        self._check_node(node)
        cached = self._anc_cache.get(node)
        if cached is not None:
            return cached
        mask = self._reach(node, self.parent_masks)
        self._anc_cache[node] = mask
        return mask

    def descendant_mask(self, node: int) -> int:
        """Bitmask of strict descendants of ``node`` (node itself excluded)."""
        self._check_node(node)
        cached = self._desc_cache.get(node)
        if cached is not None:
            return cached
        mask = self._reach(node, self.child_masks)
        self._desc_cache[node] = mask
        return mask

    def _reach(self, node: int, step_masks: Sequence[int]) -> int:
        seen = 0
        frontier = step_masks[node]
        while frontier:
            seen |= frontier
            nxt = 0
            for v in _bits(frontier):
                nxt |= step_masks[v]
            frontier = nxt & ~seen
        return seen & ~(1 << node)

    def parents(self, node: int) -> frozenset[int]:
        return frozenset(_bits(self.parent_mask(node)))

    def children(self, node: int) -> frozenset[int]:
        return frozenset(_bits(self.child_mask(node)))

    def ancestors(self, node: int) -> frozenset[int]:
        return frozenset(_bits(self.ancestor_mask(node)))

    def descendants(self, node: int) -> frozenset[int]:
        return frozenset(_bits(self.descendant_mask(node)))

    def ancestors_of_response(self) -> VarSet:
        """Predictors that are ancestors of Y."""
        return VarSet.from_mask(self.ancestor_mask(self.response) & self.predictor_mask())

    def predictor_mask(self) -> int:
        return ((1 << self.d) - 1) << 1

    # -- d-separation ----------------------------------------------------

    def d_separated_masks(self, a: int, b: int, cond_mask: int) -> bool:
        """d-separation with the conditioning set given as a node bitmask."""
        parent_masks = self.parent_masks
        child_masks = self.child_masks
        # nodes in the conditioning set or with a descendant in it
        anc = cond_mask
        frontier = cond_mask
        while frontier:
            nxt = 0
            for v in _bits(frontier):
                nxt |= parent_masks[v]
            frontier = nxt & ~anc
            anc |= frontier
        target = 1 << b
        # Bayes-ball: (node, reached-from-child) states
        seen_up = 1 << a
        seen_down = 0
        queue = deque()
        queue.append((a, True))
        while queue:
            v, from_child = queue.popleft()
            in_cond = cond_mask >> v & 1
            if from_child:
                if not in_cond:
                    new_p = parent_masks[v] & ~seen_up
                    new_c = child_masks[v] & ~seen_down
                    if (new_p | new_c) & target:
                        return False
                    seen_up |= new_p
                    seen_down |= new_c
                    for p in _bits(new_p):
                        queue.append((p, True))
                    for c in _bits(new_c):
                        queue.append((c, False))
            else:
                if not in_cond:
                    new_c = child_masks[v] & ~seen_down
                    if new_c & target:
                        return False
                    seen_down |= new_c
                    for c in _bits(new_c):
                        queue.append((c, False))
                if anc >> v & 1:
                    new_p = parent_masks[v] & ~seen_up
                    if new_p & target:
                        return False
                    seen_up |= new_p
                    for p in _bits(new_p):
                        queue.append((p, True))
        return True

    def fingerprint(self) -> str:
        payload = f"d={self.d};mode={self.mode};" + ";".join(
            f"{p}>{c}" for p, c in sorted(self.edges())
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def __repr__(self) -> str:
        return f"Dag(d={self.d}, edges={self.n_edges()}, mode={self.mode!r})"


def relatives(dag: Dag, node: int, kind: str) -> frozenset[int]:
    """Parents, children, ancestors or descendants of a node.

    Ancestors and descendants are computed by reachability and never
    contain the node itself.
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    return getattr(dag, kind)(node)


def d_separated(dag: Dag, a: int, b: int, s: VarSet) -> bool:
    """True iff every path between nodes ``a`` and ``b`` is blocked given ``s``."""
    dag._check_node(a)
    dag._check_node(b)
    if a == b:
        raise ValueError("a and b must be distinct nodes")
    cond = s.mask
    if cond >> a & 1 or cond >> b & 1:
        raise ValueError("conditioning set must not contain a or b")
    return dag.d_separated_masks(a, b, cond)


# -- moralization --------------------------------------------------------


class UndirectedGraph:
    """Undirected graph over a subset of a Dag's nodes, with bitmask adjacency."""

    __slots__ = ("nodes_mask", "adj")

    def __init__(self, nodes_mask: int, adj: list[int]):
        self.nodes_mask = nodes_mask
        self.adj = adj

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset(_bits(self.nodes_mask))

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj[u] >> v & 1)

    def neighbors(self, v: int) -> frozenset[int]:
        return frozenset(_bits(self.adj[v]))

    def neighbor_mask(self, v: int) -> int:
        return self.adj[v]

    def component(self, start: int, blocked: int) -> int:
        """Bitmask of the connected component of ``start`` in the graph
        minus the ``blocked`` nodes.  Empty if ``start`` is blocked."""
        if blocked >> start & 1:
            return 0
        comp = 1 << start
        frontier = comp
        adj = self.adj
        allowed = self.nodes_mask & ~blocked
        while frontier:
            nxt = 0
            for v in _bits(frontier):
                nxt |= adj[v]
            frontier = nxt & allowed & ~comp
            comp |= frontier
        return comp

    def separated(self, a: int, b: int, blocked: int) -> bool:
        """True iff removing the ``blocked`` nodes disconnects ``a`` from ``b``."""
        return not (self.component(a, blocked) >> b) & 1


def moral_ancestral_graph(dag: Dag, a: int, b: int, extra: Iterable[int] = ()) -> UndirectedGraph:
    """Moralized subgraph induced on the ancestral closure of {a, b} + extra.

    Directions are dropped and parents sharing a child are connected
    ("married").  Separation of a and b in this graph, after removing a
    conditioning set drawn from the closure, coincides with d-separation
    in the DAG.  ``extra`` widens the closure when the conditioning set
    of interest is not itself ancestral to {a, b}.
    """
    dag._check_node(a)
    dag._check_node(b)
    if a == b:
        raise ValueError("a and b must be distinct nodes")
    seeds = (1 << a) | (1 << b)
    for v in extra:
        dag._check_node(v)
        seeds |= 1 << v
    key = seeds
    cached = dag._moral_cache.get(key)
    if cached is not None:
        return cached
    closure = seeds
    for v in _bits(seeds):
        closure |= dag.ancestor_mask(v)
    adj = [0] * dag.n_nodes
    for w in _bits(closure):
        pm = dag.parent_masks[w]  # ancestral closure contains all parents
        adj[w] |= pm
        for p in _bits(pm):
            adj[p] |= (1 << w) | (pm & ~(1 << p))
    graph = UndirectedGraph(closure, adj)
    if len(dag._moral_cache) < 64:
        dag._moral_cache[key] = graph
    return graph


# -- serialization ---------------------------------------------------------


def node_name(node: int, d: int) -> str:
    if node == ENV:
        return "E"
    if node == d + 1:
        return "Y"
    if 1 <= node <= d:
        return f"X{node}"
    raise ValueError(f"node {node} out of range for d={d}")


def parse_node_name(name: str, d: int | None = None) -> int:
    name = name.strip()
    if name == "E":
        return ENV
    if name == "Y":
        if d is None:
            raise ValueError("cannot resolve 'Y' without knowing d")
        return d + 1
    if name.startswith("X"):
        k = int(name[1:])
        if k < 1 or (d is not None and k > d):
            raise ValueError(f"bad predictor name {name!r}")
        return k
    raise ValueError(f"unrecognized node name {name!r}")


def dag_to_edgelist(dag: Dag) -> str:
    """One ``parent child`` pair per line, using names E, X<k>, Y."""
    lines = [
        f"{node_name(p, dag.d)} {node_name(c, dag.d)}"
        for p, c in sorted(dag.edges())
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def dag_from_edgelist(text: str, d: int | None = None, mode: str = "exogenous") -> Dag:
    """Parse the edge-list format written by :func:`dag_to_edgelist`.

    If ``d`` is omitted it is inferred as the largest predictor index
    mentioned; isolated trailing predictors then require an explicit d.
    """
    pairs = []
    max_k = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'parent child', got {line!r}")
        pairs.append(parts)
        for name in parts:
            if name.startswith("X"):
                max_k = max(max_k, int(name[1:]))
    if d is None:
        d = max_k
    edges = [(parse_node_name(p, d), parse_node_name(c, d)) for p, c in pairs]
    return Dag(d, edges, mode=mode)


def dag_to_amat_csv(dag: Dag) -> str:
    """Adjacency matrix CSV: header of node names, rows are parents."""
    names = [node_name(i, dag.d) for i in range(dag.n_nodes)]
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(names)
    for p in range(dag.n_nodes):
        writer.writerow([1 if dag.child_masks[p] >> c & 1 else 0 for c in range(dag.n_nodes)])
    return buf.getvalue()


def dag_from_amat_csv(text: str, mode: str = "exogenous") -> Dag:
    """Read the adjacency-matrix CSV produced by :func:`dag_to_amat_csv`."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise ValueError("empty adjacency matrix")
    header = [c.strip() for c in rows[0]]
    n = len(header)
    d = n - 2
    expected = ["E"] + [f"X{k}" for k in range(1, d + 1)] + ["Y"]
    if header != expected:
        raise ValueError(f"adjacency header must be {expected}, got {header}")
    if len(rows) != n + 1:
        raise ValueError(f"expected {n} matrix rows, got {len(rows) - 1}")
    edges = []
    for p, row in enumerate(rows[1:]):
        if len(row) != n:
            raise ValueError(f"row {p} has {len(row)} entries, expected {n}")
        for c, cell in enumerate(row):
            if cell.strip() not in ("0", "1"):
                raise ValueError(f"matrix entries must be 0/1, got {cell!r}")
            if cell.strip() == "1":
                edges.append((p, c))
    return Dag(d, edges, mode=mode)
