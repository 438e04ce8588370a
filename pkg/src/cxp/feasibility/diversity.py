"""Pathlet maps and pairwise min-cut path diversity.

Each joint member AS of two IXPs contributes one undirected unit-capacity
edge between them. Parallel edges are aggregated into integer capacities for
the max-flow computation (breadth-first augmenting paths) and expanded
back to individual edges when decomposing the flow into paths.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple, Optional

from cxp.errors import UnknownIxp
from cxp.feasibility.dataset import CoverageDataset


class MapEdge(NamedTuple):
    a: str
    b: str
    asn: int


@dataclass(frozen=True)
class PathletMap:
    nodes: frozenset
    edges: tuple

    def __post_init__(self):
        seen = set()
        canon = []
        for a, b, asn in self.edges:
            if a == b:
                raise ValueError(f"self-edge at {a} via AS{asn}")
            a, b = sorted((a, b))
            key = (a, b, asn)
            if key in seen:
                raise ValueError(f"duplicate edge {a}-{b} via AS{asn}")
            seen.add(key)
            canon.append(MapEdge(a, b, asn))
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        nodes = frozenset(self.nodes) | {e.a for e in canon} | {e.b for e in canon}
        object.__setattr__(self, "nodes", nodes)

    def multiplicity(self) -> dict:
        out: dict = {}
        for e in self.edges:
            out[(e.a, e.b)] = out.get((e.a, e.b), 0) + 1
        return out

    def relabel(self, mapping: dict) -> "PathletMap":
        return PathletMap(
            frozenset(mapping[n] for n in self.nodes),
            tuple(MapEdge(mapping[e.a], mapping[e.b], e.asn) for e in self.edges),
        )


def build_pathlet_map(dataset: CoverageDataset) -> PathletMap:
    """One edge per AS that is a member of both IXPs, for every IXP pair."""
    edges = []
    for a, b in combinations(dataset.ixps, 2):
        for asn in sorted(dataset.memberships[a] & dataset.memberships[b]):
            edges.append(MapEdge(a, b, asn))
    return PathletMap(frozenset(dataset.ixps), tuple(edges))


@dataclass
class FlowResult:
    source: str
    sink: str
    value: int
    net_flow: dict  # (u, v) -> positive net units from u to v
    source_side: frozenset  # residual-reachable from source


class FlowNetwork:
    """Undirected capacity graph built once from a pathlet map."""

    def __init__(self, pmap: PathletMap):
        self.pmap = pmap
        self.cap: dict = {n: {} for n in pmap.nodes}
        for (a, b), m in pmap.multiplicity().items():
            self.cap[a][b] = m
            self.cap[b][a] = m
        self._order = {n: sorted(nbrs) for n, nbrs in self.cap.items()}

    def _check(self, s, t):
        for n in (s, t):
            if n not in self.cap:
                raise UnknownIxp(n)
        if s == t:
            raise ValueError("source and sink must differ")

    def max_flow(self, s: str, t: str) -> FlowResult:
        self._check(s, t)
        flow: dict = {}  # skew-symmetric: flow[(u, v)] == -flow[(v, u)]

        def residual(u, v):
            return self.cap[u][v] - flow.get((u, v), 0)

        value = 0
        while True:
            parent = {s: None}
            queue = deque([s])
            while queue and t not in parent:
                u = queue.popleft()
                for v in self._order[u]:
                    if v not in parent and residual(u, v) > 0:
                        parent[v] = u
                        queue.append(v)
            if t not in parent:
                break
            bottleneck = None
            v = t
            while parent[v] is not None:
                u = parent[v]
                r = residual(u, v)
                bottleneck = r if bottleneck is None else min(bottleneck, r)
                v = u
            v = t
            while parent[v] is not None:
                u = parent[v]
                flow[(u, v)] = flow.get((u, v), 0) + bottleneck
                flow[(v, u)] = flow.get((v, u), 0) - bottleneck
                v = u
            value += bottleneck
        net = {arc: f for arc, f in flow.items() if f > 0}
        return FlowResult(s, t, value, net, frozenset(parent))


def min_cut_diversity(pmap: PathletMap, a: str, b: str,
                      network: Optional[FlowNetwork] = None) -> int:
    """Maximum number of edge-disjoint pathlet paths between IXPs ``a`` and ``b``."""
    network = network or FlowNetwork(pmap)
    return network.max_flow(a, b).value


def decompose(pmap: PathletMap, result: FlowResult) -> list:
    """Split a flow into ``result.value`` edge-disjoint paths of MapEdges."""
    pools: dict = {}
    for e in reversed(pmap.edges):
        pools.setdefault((e.a, e.b), []).append(e)
        pools.setdefault((e.b, e.a), pools[(e.a, e.b)])
    remaining = dict(result.net_flow)
    out_arcs: dict = {}
    for (u, v) in sorted(remaining):
        out_arcs.setdefault(u, []).append(v)
    paths = []
    for _ in range(result.value):
        parent = {result.source: None}
        queue = deque([result.source])
        while queue and result.sink not in parent:
            u = queue.popleft()
            for v in out_arcs.get(u, ()):
                if v not in parent and remaining.get((u, v), 0) > 0:
                    parent[v] = u
                    queue.append(v)
        if result.sink not in parent:
            raise RuntimeError("flow does not decompose; conservation broken")
        hops = []
        v = result.sink
        while parent[v] is not None:
            u = parent[v]
            remaining[(u, v)] -= 1
            hops.append((u, v, pools[(u, v)].pop()))
            v = u
        paths.append([edge for _, _, edge in reversed(hops)])
    return paths


def cut_edges(pmap: PathletMap, result: FlowResult) -> list:
    side = result.source_side
    return [e for e in pmap.edges if (e.a in side) != (e.b in side)]


def diversity_matrix(pmap: PathletMap, ixps: Iterable[str]) -> list:
    """Symmetric matrix of pairwise diversity; diagonal entries are None."""
    ixps = list(ixps)
    for n in ixps:
        if n not in pmap.nodes:
            raise UnknownIxp(n)
    network = FlowNetwork(pmap)
    size = len(ixps)
    matrix = [[None] * size for _ in range(size)]
    for i, j in combinations(range(size), 2):
        if ixps[i] == ixps[j]:
            raise ValueError(f"ixp {ixps[i]!r} listed twice")
        v = network.max_flow(ixps[i], ixps[j]).value
        matrix[i][j] = matrix[j][i] = v
    return matrix
