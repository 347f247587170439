"""Weighted undirected multigraph, path/cycle algebra and shortest paths.

Lengths are exact scaled integers (the instance file carries the common
denominator); every comparison in the pipeline is integer arithmetic.

Cycles here are closed walks with distinct edges (nodes may repeat).  The
pipeline needs a strict total order on cycles in which no two distinct
cycles ever compare equal.  We order by the composite weight

    W(C) = sum over edges of  l(e) * 2**m + 2**edge_id      (m = #edges)

which compares first by true length and breaks ties by the edge-id subset
sum.  Distinct edge sets always differ in the low bits, so W is a total
order, and because W is additive over edges it can be minimised directly
by shortest-path and flow computations.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass

from .errors import (
    NegativeLength,
    NodeNotOnPath,
    NoCycle,
    SelfLoop,
    Unreachable,
)


@dataclass(frozen=True)
class Edge:
    id: int
    u: str
    v: str
    length: int

    def other(self, node: str) -> str:
        if node == self.u:
            return self.v
        if node == self.v:
            return self.u
        raise ValueError(f"node {node!r} not an endpoint of edge {self.id}")

    def touches(self, node: str) -> bool:
        return node == self.u or node == self.v


class WeightedGraph:
    """Undirected multigraph with nonnegative integer lengths and a root z."""

    def __init__(self, nodes, edges, root, denominator=1):
        self.nodes = list(nodes)
        self.node_set = set(self.nodes)
        self.root = root
        self.denominator = denominator
        self.edges = []
        for spec in edges:
            if isinstance(spec, Edge):
                e = spec
            else:
                eid, u, v, length = spec
                e = Edge(int(eid), u, v, int(length))
            self.edges.append(e)
        self.edges.sort(key=lambda e: e.id)
        self.edge_by_id = {e.id: e for e in self.edges}
        if len(self.edge_by_id) != len(self.edges):
            raise ValueError("duplicate edge ids")
        if root not in self.node_set:
            raise ValueError(f"root {root!r} not among nodes")
        self.adj = {v: [] for v in self.nodes}
        for e in self.edges:
            self.adj[e.u].append(e)
            self.adj[e.v].append(e)
        for lst in self.adj.values():
            lst.sort(key=lambda e: e.id)
        # Composite-weight scale: one bit per edge id above the true length.
        self._shift = 1 << (max(self.edge_by_id, default=0) + 1)

    # -- composite weights -------------------------------------------------

    def wt(self, e: Edge) -> int:
        return e.length * self._shift + (1 << e.id)

    def weight_of(self, edge_ids) -> int:
        return sum(self.wt(self.edge_by_id[i]) for i in edge_ids)

    def length_of(self, edge_ids) -> int:
        return sum(self.edge_by_id[i].length for i in edge_ids)

    # -- serialization -----------------------------------------------------

    @classmethod
    def from_json(cls, obj) -> "WeightedGraph":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        edges = [(e["id"], e["u"], e["v"], e["len"]) for e in obj["edges"]]
        return cls(obj["nodes"], edges, obj["root"], obj.get("denominator", 1))

    def to_json(self) -> dict:
        return {
            "denominator": self.denominator,
            "nodes": list(self.nodes),
            "root": self.root,
            "edges": [
                {"id": e.id, "u": e.u, "v": e.v, "len": e.length}
                for e in self.edges
            ],
        }


class PathSeq:
    """An ordered node sequence joined by pairwise distinct edges."""

    __slots__ = ("graph", "nodes", "edges", "length", "weight")

    def __init__(self, graph: WeightedGraph, nodes, edges):
        self.graph = graph
        self.nodes = tuple(nodes)
        self.edges = tuple(edges)
        if len(self.nodes) != len(self.edges) + 1:
            raise ValueError("node/edge count mismatch")
        seen = set()
        for i, e in enumerate(self.edges):
            a, b = self.nodes[i], self.nodes[i + 1]
            if {a, b} != {e.u, e.v} and not (a == b == e.u == e.v):
                raise ValueError(f"edge {e.id} does not join {a!r}-{b!r}")
            if e.id in seen:
                raise ValueError(f"edge {e.id} repeated on path")
            seen.add(e.id)
        self.length = sum(e.length for e in self.edges)
        self.weight = sum(graph.wt(e) for e in self.edges)

    @property
    def edge_ids(self) -> frozenset:
        return frozenset(e.id for e in self.edges)

    @property
    def start(self) -> str:
        return self.nodes[0]

    @property
    def end(self) -> str:
        return self.nodes[-1]

    def is_cycle(self) -> bool:
        return len(self.nodes) > 1 and self.start == self.end

    def reverse(self) -> "PathSeq":
        return PathSeq(self.graph, self.nodes[::-1], self.edges[::-1])

    def __len__(self):
        return len(self.edges)

    def __repr__(self):
        return f"PathSeq({'-'.join(self.nodes)})"

    def node_positions(self, node: str):
        return [i for i, n in enumerate(self.nodes) if n == node]

    def subpath(self, a: str, b: str) -> "PathSeq":
        """Contiguous piece from the first occurrence of a to of b."""
        try:
            ia = self.nodes.index(a)
            ib = self.nodes.index(b)
        except ValueError as exc:
            raise NodeNotOnPath(str(exc)) from None
        if ia <= ib:
            return PathSeq(self.graph, self.nodes[ia : ib + 1], self.edges[ia:ib])
        return PathSeq(
            self.graph, self.nodes[ib : ia + 1], self.edges[ib:ia]
        ).reverse()

    def segment(self, i: int, j: int) -> "PathSeq":
        """Piece between node positions i <= j."""
        return PathSeq(self.graph, self.nodes[i : j + 1], self.edges[i:j])


def concat_paths(*paths: PathSeq) -> PathSeq:
    """Concatenate paths end-to-start.  Edges must stay distinct."""
    parts = [p for p in paths if len(p.nodes) > 0]
    nodes = list(parts[0].nodes)
    edges = list(parts[0].edges)
    for p in parts[1:]:
        if not p.edges and len(p.nodes) == 1:
            if p.nodes[0] != nodes[-1]:
                raise ValueError("concat endpoints disagree")
            continue
        if p.start == nodes[-1]:
            nodes.extend(p.nodes[1:])
            edges.extend(p.edges)
        elif p.end == nodes[-1]:
            nodes.extend(p.nodes[-2::-1])
            edges.extend(p.edges[::-1])
        else:
            raise ValueError("concat endpoints disagree")
    return PathSeq(parts[0].graph, nodes, edges)


def empty_path(graph: WeightedGraph, node: str) -> PathSeq:
    return PathSeq(graph, [node], [])


class CycleWalk(PathSeq):
    """Closed walk with distinct edges, canonicalized from its edge set.

    Identity is the edge set; the stored node walk is the deterministic
    Euler traversal (lowest edge id first, started at the root when the
    root lies on the walk).  Two walks over the same edges therefore
    canonicalize identically, which also absorbs rotation and reflection.
    """

    def __init__(self, graph, nodes, edges):
        super().__init__(graph, nodes, edges)
        if not self.is_cycle():
            raise ValueError("cycle walk must be closed")

    @property
    def key(self):
        return self.weight

    @classmethod
    def from_edge_ids(cls, graph: WeightedGraph, edge_ids, start=None) -> "CycleWalk":
        ids = sorted(set(edge_ids))
        if not ids:
            raise NoCycle("empty edge set")
        inc = {}
        for i in ids:
            e = graph.edge_by_id[i]
            inc.setdefault(e.u, []).append(e)
            inc.setdefault(e.v, []).append(e)
        odd = [v for v, es in inc.items() if len(es) % 2]
        if odd:
            raise NoCycle(f"odd degrees at {sorted(odd)}")
        if start is None or start not in inc:
            start = graph.root if graph.root in inc else min(inc)
        # Hierholzer, always taking the unused incident edge of lowest id.
        for es in inc.values():
            es.sort(key=lambda e: e.id)
        used = set()
        stack = [(start, None)]
        walk = []
        while stack:
            v, via = stack[-1]
            nxt = None
            for e in inc[v]:
                if e.id not in used:
                    nxt = e
                    break
            if nxt is None:
                walk.append((v, via))
                stack.pop()
            else:
                used.add(nxt.id)
                stack.append((nxt.other(v), nxt))
        walk.reverse()
        nodes = [v for v, _ in walk]
        edges = [e for _, e in walk[1:]]
        if len(edges) != len(ids):
            raise NoCycle("edge set is not connected")
        return cls(graph, nodes, edges)

    def canonical(self) -> "CycleWalk":
        return CycleWalk.from_edge_ids(self.graph, self.edge_ids)

    def rotate(self, k: int) -> "CycleWalk":
        n = len(self.edges)
        k %= n
        nodes = self.nodes[k:-1] + self.nodes[: k + 1]
        edges = self.edges[k:] + self.edges[:k]
        return CycleWalk(self.graph, nodes, edges)

    def __eq__(self, other):
        return isinstance(other, CycleWalk) and self.edge_ids == other.edge_ids

    def __hash__(self):
        return hash(self.edge_ids)

    def __lt__(self, other):
        return self.key < other.key


# -- edge-set algebra -------------------------------------------------------


def edge_difference(graph, p, q):
    """Edge ids of p not in q; p and q may be paths, cycles or id sets."""
    pi = p if isinstance(p, (set, frozenset)) else p.edge_ids
    qi = q if isinstance(q, (set, frozenset)) else q.edge_ids
    return set(pi) - set(qi)


def edges_as_subgraph(graph, edge_ids):
    """Classify an edge set as path, cycle, empty or neither.

    Returns (kind, payload): ('empty', None), ('path', PathSeq),
    ('cycle', CycleWalk) or ('scatter', sorted ids).
    """
    ids = sorted(set(edge_ids))
    if not ids:
        return "empty", None
    deg = {}
    for i in ids:
        e = graph.edge_by_id[i]
        deg[e.u] = deg.get(e.u, 0) + 1
        deg[e.v] = deg.get(e.v, 0) + 1
    odd = sorted(v for v, d in deg.items() if d % 2)
    if not odd:
        try:
            return "cycle", CycleWalk.from_edge_ids(graph, ids)
        except NoCycle:
            return "scatter", ids
    if len(odd) == 2:
        path = _trace_trail(graph, ids, odd[0], odd[1])
        if path is not None:
            return "path", path
    return "scatter", ids


def _trace_trail(graph, ids, a, b):
    """Eulerian trail over the edge set from a to b (nodes may repeat),
    taking the lowest unused edge id first; None if not one trail."""
    inc = {}
    for i in ids:
        e = graph.edge_by_id[i]
        inc.setdefault(e.u, []).append(e)
        inc.setdefault(e.v, []).append(e)
    for es in inc.values():
        es.sort(key=lambda e: e.id)
    used = set()
    stack = [(a, None)]
    walk = []
    while stack:
        v, via = stack[-1]
        nxt = None
        for e in inc.get(v, ()):
            if e.id not in used:
                nxt = e
                break
        if nxt is None:
            walk.append((v, via))
            stack.pop()
        else:
            used.add(nxt.id)
            stack.append((nxt.other(v), nxt))
    walk.reverse()
    if len(used) != len(ids) or walk[-1][0] != b:
        return None
    nodes = [v for v, _ in walk]
    edges = [e for _, e in walk[1:]]
    return PathSeq(graph, nodes, edges)


def path_difference(graph, p, q):
    """p minus q's edges, as ('path'|'cycle'|'empty'|'scatter', payload)."""
    return edges_as_subgraph(graph, edge_difference(graph, p, q))


# -- validation --------------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    two_edge_connected: bool
    bridges: list
    negative_edges: list
    self_loops: list
    planarity_necessary_ok: bool
    n_nodes: int
    n_edges: int

    def raise_on_error(self):
        if self.self_loops:
            raise SelfLoop(f"self loops on edges {self.self_loops}")
        if self.negative_edges:
            raise NegativeLength(f"negative lengths on edges {self.negative_edges}")
        if not self.two_edge_connected:
            raise NotTwoEdgeConnected(f"bridges: {self.bridges}")


def find_bridges(graph: WeightedGraph):
    """Bridge edges plus a connectivity flag, by iterative lowpoint DFS."""
    disc = {}
    low = {}
    bridges = []
    timer = [0]
    visited_edges = set()
    for src in graph.nodes:
        if src in disc:
            continue
        if disc:
            # second DFS root means the graph is disconnected
            pass
        stack = [(src, None, iter(graph.adj[src]))]
        disc[src] = low[src] = timer[0]
        timer[0] += 1
        while stack:
            v, pe, it = stack[-1]
            advanced = False
            for e in it:
                if e.id in visited_edges:
                    continue
                w = e.other(v)
                if w == v:
                    continue
                if w not in disc:
                    visited_edges.add(e.id)
                    disc[w] = low[w] = timer[0]
                    timer[0] += 1
                    stack.append((w, e, iter(graph.adj[w])))
                    advanced = True
                    break
                else:
                    visited_edges.add(e.id)
                    low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if pe is not None:
                    u = pe.other(v)
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.append(pe.id)
    connected = len(disc) == len(graph.nodes)
    return bridges, connected


def validate_graph(graph: WeightedGraph) -> ValidationReport:
    self_loops = [e.id for e in graph.edges if e.u == e.v]
    negative = [e.id for e in graph.edges if e.length < 0]
    bridges, connected = find_bridges(graph)
    two_ec = connected and not bridges and len(graph.nodes) >= 3
    n = len(graph.nodes)
    simple_pairs = {frozenset((e.u, e.v)) for e in graph.edges if e.u != e.v}
    planar_ok = n < 3 or len(simple_pairs) <= 3 * n - 6
    ok = two_ec and not self_loops and not negative
    return ValidationReport(
        ok=ok,
        two_edge_connected=two_ec,
        bridges=bridges,
        negative_edges=negative,
        self_loops=self_loops,
        planarity_necessary_ok=planar_ok,
        n_nodes=n,
        n_edges=len(graph.edges),
    )


# -- shortest paths ----------------------------------------------------------


def shortest_path(graph: WeightedGraph, a: str, b: str) -> PathSeq:
    """Minimum-length a-b path; ties broken by the edge-id sequence."""
    if a not in graph.node_set or b not in graph.node_set:
        raise NodeNotOnPath(f"{a!r} or {b!r} not in graph")
    if a == b:
        return empty_path(graph, a)
    best = {a: (0, ())}
    heap = [(0, (), a)]
    done = set()
    while heap:
        dist, seq, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == b:
            edges = [graph.edge_by_id[i] for i in seq]
            nodes = [a]
            for e in edges:
                nodes.append(e.other(nodes[-1]))
            return PathSeq(graph, nodes, edges)
        for e in graph.adj[v]:
            w = e.other(v)
            if w in done:
                continue
            cand = (dist + e.length, seq + (e.id,))
            if w not in best or cand < best[w]:
                best[w] = cand
                heapq.heappush(heap, (cand[0], cand[1], w))
    raise Unreachable(f"no path {a!r} -> {b!r}")


def _dijkstra_weights(n_nodes, adj, source):
    """Plain Dijkstra on an arc list with nonnegative composite weights."""
    INF = None
    dist = [INF] * n_nodes
    dist[source] = 0
    heap = [(0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if dist[v] is not None and d > dist[v]:
            continue
        for w, to, _ in adj[v]:
            nd = d + w
            if dist[to] is None or nd < dist[to]:
                dist[to] = nd
                heapq.heappush(heap, (nd, to))
    return dist


def min_cycle_edges(graph: WeightedGraph, a: str, b: str):
    """Edge ids of the W-minimal closed walk (distinct edges) through a and b.

    Two successive shortest-path augmentations (Suurballe style) send two
    units between a and b; each undirected edge carries at most one unit in
    one direction, so the support is the union of two edge-disjoint paths.
    Composite weights are strictly positive, hence the minimum support is
    unique and equals the W-minimal cycle through both nodes.  Returns None
    when no two edge-disjoint paths exist.
    """
    if a == b:
        raise ValueError("need two distinct anchor nodes")
    idx = {v: i for i, v in enumerate(graph.nodes)}
    n = len(graph.nodes)
    s, t = idx[a], idx[b]
    out = [[] for _ in range(n)]  # (other endpoint, edge, +1 if u->v)
    for e in graph.edges:
        ui, vi = idx[e.u], idx[e.v]
        out[ui].append((vi, e, 1))
        out[vi].append((ui, e, -1))
    pot = [0] * n
    net = {}  # edge id -> -1, 0, +1 net direction of flow
    for _ in range(2):
        dist = [None] * n
        prev = [None] * n
        dist[s] = 0
        heap = [(0, s)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist[v]:
                continue
            for to, e, sign in out[v]:
                cur = net.get(e.id, 0)
                if cur == sign:
                    continue  # edge already carries a unit this way
                cost = graph.wt(e) if cur == 0 else -graph.wt(e)
                red = d + cost + pot[v] - pot[to]
                if dist[to] is None or red < dist[to]:
                    dist[to] = red
                    prev[to] = (v, e, sign)
                    heapq.heappush(heap, (red, to))
        if dist[t] is None:
            return None
        v = t
        while v != s:
            u, e, sign = prev[v]
            net[e.id] = net.get(e.id, 0) + sign
            v = u
        for i in range(n):
            if dist[i] is not None:
                pot[i] += dist[i]
    return {eid for eid, d in net.items() if d != 0}
