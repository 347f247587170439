"""Bound checking and exhaustive oracles.

Every theorem the pipeline relies on is re-checked here with exact
integer arithmetic: 9x after crossing cancellation, 3x growth during
orientation, 27x for the final undirected serving cycles, 15x for the
directed walk of every cycle, 405x per node, and 1620x against the
exhaustively optimal orientation on small instances.  Directed-walk
measurements use shortest paths, which can only undercut the walks the
guarantees are stated for, so a violation always means a genuine bug.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundViolation,
    NotStronglyConnected,
    TooLarge,
    Unreachable,
)
from .family import build_family
from .graph import CycleWalk, WeightedGraph, min_cycle_edges, validate_graph
from .orient import Orienter, check_properties, extract_diagnostics
from .uncross import cancel_crossings, nine_bound_report

INF = float("inf")


def _directed_adj(graph, arc, edge_ids=None):
    adj = {v: [] for v in graph.nodes}
    for eid, (tail, head) in arc.items():
        if edge_ids is not None and eid not in edge_ids:
            continue
        adj[tail].append((head, graph.edge_by_id[eid].length))
    return adj


def _dijkstra(adj, source):
    dist = {source: 0}
    heap = [(0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist.get(v, INF):
            continue
        for w, c in adj[v]:
            nd = d + c
            if nd < dist.get(w, INF):
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


def directed_cycle_through(graph, arc, v, edge_ids=None):
    """dist(z,v) + dist(v,z) in the oriented graph; the shortest directed
    closed walk through both."""
    adj = _directed_adj(graph, arc, edge_ids)
    fwd = _dijkstra(adj, graph.root)
    if v not in fwd:
        raise Unreachable(f"root cannot reach {v!r} in the orientation")
    back = _dijkstra(adj, v)
    if graph.root not in back:
        raise Unreachable(f"{v!r} cannot reach the root in the orientation")
    return fwd[v] + back[graph.root]


def cycle_diameter(graph: WeightedGraph) -> int:
    """Max over node pairs of the minimum cycle through both."""
    best = 0
    for a, b in itertools.combinations(graph.nodes, 2):
        ids = min_cycle_edges(graph, a, b)
        if ids is None:
            raise NotStronglyConnected(f"no cycle through {a!r},{b!r}")
        best = max(best, graph.length_of(ids))
    return best


def directed_cycle_diameter(graph, arc, edge_ids=None) -> int:
    adj = _directed_adj(graph, arc, edge_ids)
    dists = {v: _dijkstra(adj, v) for v in graph.nodes}
    best = 0
    for a, b in itertools.combinations(graph.nodes, 2):
        d1 = dists[a].get(b)
        d2 = dists[b].get(a)
        if d1 is None or d2 is None:
            raise NotStronglyConnected(f"pair {a!r},{b!r} not mutually reachable")
        best = max(best, d1 + d2)
    return best


# -- oracles -------------------------------------------------------------------


def oracle_min_cycle(graph: WeightedGraph, a: str, b: str, node_bound=10) -> int:
    """Exhaustive minimum closed walk (distinct edges) through a and b.

    Enumerates every node-simple a-b path and closes it with a shortest
    path in the remaining graph.  Any optimal closed walk splits this way,
    so the minimum over the enumeration is exact; the route is independent
    of the flow computation it validates.
    """
    if len(graph.nodes) > node_bound:
        raise TooLarge(f"{len(graph.nodes)} nodes > bound {node_bound}")
    best = None
    path_edges = []
    seen = {a}

    def rest_shortest():
        banned = {e.id for e in path_edges}
        dist = {a: 0}
        heap = [(0, a)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist.get(v, INF):
                continue
            if v == b:
                return d
            for e in graph.adj[v]:
                if e.id in banned:
                    continue
                w = e.other(v)
                nd = d + e.length
                if nd < dist.get(w, INF):
                    dist[w] = nd
                    heapq.heappush(heap, (nd, w))
        return None

    def dfs(v, acc):
        nonlocal best
        if v == b:
            closing = rest_shortest()
            if closing is not None:
                total = acc + closing
                if best is None or total < best:
                    best = total
            return
        for e in graph.adj[v]:
            w = e.other(v)
            if w in seen:
                continue
            seen.add(w)
            path_edges.append(e)
            dfs(w, acc + e.length)
            path_edges.pop()
            seen.remove(w)

    dfs(a, 0)
    if best is None:
        raise NotStronglyConnected(f"no closed walk through {a!r},{b!r}")
    return best


def oracle_opt_orientation(graph: WeightedGraph, max_edges: int = 16):
    """Exhaustive minimum directed cycle-diameter over all orientations.

    Vectorized Floyd-Warshall over batches of orientation bitmasks; skips
    orientations that are not strongly connected.  Returns (D_opt,
    orientation arcs of one witness).
    """
    m = len(graph.edges)
    if m > max_edges:
        raise TooLarge(f"{m} edges > limit {max_edges}")
    n = len(graph.nodes)
    idx = {v: i for i, v in enumerate(graph.nodes)}
    best = None
    best_mask = None
    chunk_bits = min(m, 14)
    for base in range(0, 1 << m, 1 << chunk_bits):
        masks = np.arange(base, base + (1 << chunk_bits), dtype=np.int64)
        batch = len(masks)
        dist = np.full((batch, n, n), INF)
        dist[:, np.arange(n), np.arange(n)] = 0.0
        for k, e in enumerate(graph.edges):
            ui, vi = idx[e.u], idx[e.v]
            fwd = ((masks >> k) & 1) == 0
            dist[fwd, ui, vi] = np.minimum(dist[fwd, ui, vi], e.length)
            dist[~fwd, vi, ui] = np.minimum(dist[~fwd, vi, ui], e.length)
        for k in range(n):
            dist = np.minimum(dist, dist[:, :, k, None] + dist[:, k, None, :])
        around = dist + dist.transpose(0, 2, 1)
        cyc_diam = around.max(axis=(1, 2))
        ok = np.isfinite(cyc_diam)
        if not ok.any():
            continue
        cand = cyc_diam.copy()
        cand[~ok] = INF
        i = int(np.argmin(cand))
        if ok[i] and (best is None or cand[i] < best):
            best = float(cand[i])
            best_mask = int(masks[i])
    if best is None:
        raise NotStronglyConnected("no strongly connected orientation exists")
    arcs = {}
    for k, e in enumerate(graph.edges):
        if (best_mask >> k) & 1:
            arcs[e.id] = (e.v, e.u)
        else:
            arcs[e.id] = (e.u, e.v)
    return int(best), arcs


# -- end-to-end report ---------------------------------------------------------


@dataclass
class BoundReport:
    n_nodes: int
    n_edges: int
    r9: float = 0.0
    r27: float = 0.0
    r405: float = 0.0
    r15: float = 0.0
    growth: float = 0.0
    d_g: int = 0
    d_h: int = 0
    d_opt: int | None = None
    ratio1620: float | None = None
    per_node: dict = field(default_factory=dict)
    property_violations: list = field(default_factory=list)
    reassignments: int = 0
    skipped_reassignments: int = 0
    ms: float = 0.0

    def to_json(self):
        out = {
            "n": self.n_nodes,
            "m": self.n_edges,
            "r9": self.r9,
            "r27": self.r27,
            "r405": self.r405,
            "r15": self.r15,
            "growth": self.growth,
            "D_G": self.d_g,
            "D_H": self.d_h,
            "properties_ok": not self.property_violations,
            "property_violations": self.property_violations,
            "reassignments": self.reassignments,
            "ms": round(self.ms, 3),
        }
        if self.d_opt is not None:
            out["D_opt"] = self.d_opt
            out["ratio1620"] = self.ratio1620
        return out


def _ratio(after: int, before: int) -> float:
    if before == 0:
        return 1.0
    return after / before


def full_report(
    graph: WeightedGraph,
    oracle_max_edges: int = 0,
    trace=None,
    strict: bool = True,
) -> tuple[BoundReport, "OrientationResult"]:
    """Run the whole pipeline and check every proven bound.

    Raises BoundViolation on any exceeded bound when strict (they are
    theorems; a violation is an implementation bug).
    """
    t0 = time.perf_counter()
    validate_graph(graph).raise_on_error()
    report = BoundReport(n_nodes=len(graph.nodes), n_edges=len(graph.edges))
    families = build_family(graph)
    orig = {}
    for fam in families:
        for v, cid in fam.node_cycle.items():
            orig[v] = fam.cycles[cid].length

    arc = {}
    gc_edges = set()
    problems = []
    mid = {}
    fin = {}
    walk15 = {}
    for fam in families:
        cancel_crossings(fam, trace=trace)
        for v, cid in fam.node_cycle.items():
            mid[v] = fam.cycles[cid].length
        _, _ = nine_bound_report(
            {v: orig[v] for v in fam.node_cycle}, fam
        )
        orienter = Orienter(fam)
        orientation = orienter.run()
        arc.update(orientation.arc)
        gc_edges |= {e for c in fam.cycles.values() for e in c.edge_ids}
        report.reassignments += orienter.reassignments
        report.skipped_reassignments += orienter.skipped_reassignments
        problems.extend(check_properties(fam))
        for v, cid in fam.node_cycle.items():
            fin[v] = fam.cycles[cid].length
        diag = extract_diagnostics(fam, orientation)
        fam_edges = {e for c in fam.cycles.values() for e in c.edge_ids}
        adj = _directed_adj(graph, orientation.arc, fam_edges)
        dist_from_root = _dijkstra(adj, graph.root)
        for cid, d in diag.items():
            cyc = fam.cycles[cid]
            to_t = dist_from_root.get(d.t)
            back = _dijkstra(adj, d.h).get(graph.root)
            if to_t is None or back is None:
                raise Unreachable(f"cycle {cid} walk broken")
            walk15[cid] = (to_t + d.i_path.length + back, cyc.length)
        root = fam.root()
        walk15[root.id] = (root.length, root.length)

    # totality over G_C, then orient the leftover graph edges
    missing = gc_edges - set(arc)
    if missing:
        problems.append(f"unoriented family edges: {sorted(missing)}")
    from .orient import Orientation

    merged = Orientation(graph)
    merged.arc = dict(arc)
    merged.complete(graph)

    per_node = {}
    worst9 = worst27 = worst405 = worst_growth = 1.0
    for v in orig:
        r9 = _ratio(mid[v], orig[v])
        r27 = _ratio(fin[v], orig[v])
        growth = _ratio(fin[v], mid[v])
        walk = directed_cycle_through(graph, merged.arc, v, gc_edges)
        r405 = _ratio(walk, orig[v])
        per_node[v] = {
            "orig": orig[v],
            "after_uncross": mid[v],
            "final": fin[v],
            "walk": walk,
            "r9": r9,
            "r27": r27,
            "r405": r405,
        }
        if mid[v] > 9 * orig[v]:
            raise BoundViolation(f"9-bound at {v}: {mid[v]} > 9*{orig[v]}")
        if fin[v] > 3 * mid[v]:
            raise BoundViolation(f"growth at {v}: {fin[v]} > 3*{mid[v]}")
        if fin[v] > 27 * orig[v]:
            raise BoundViolation(f"27-bound at {v}: {fin[v]} > 27*{orig[v]}")
        if walk > 405 * orig[v]:
            raise BoundViolation(f"405-bound at {v}: {walk} > 405*{orig[v]}")
        worst9 = max(worst9, r9)
        worst27 = max(worst27, r27)
        worst405 = max(worst405, r405)
        worst_growth = max(worst_growth, growth)
    worst15 = 1.0
    for cid, (walk, ln) in walk15.items():
        if walk > 15 * ln:
            raise BoundViolation(f"15-bound at cycle {cid}: {walk} > 15*{ln}")
        if ln:
            worst15 = max(worst15, walk / ln)

    report.per_node = per_node
    report.r9, report.r27, report.r405 = worst9, worst27, worst405
    report.r15 = worst15
    report.growth = worst_growth
    report.d_g = cycle_diameter(graph)
    report.d_h = directed_cycle_diameter(graph, merged.arc)
    report.property_violations = problems
    if strict and problems:
        raise BoundViolation("; ".join(problems))
    if oracle_max_edges and len(graph.edges) <= oracle_max_edges:
        d_opt, _ = oracle_opt_orientation(graph, oracle_max_edges)
        report.d_opt = d_opt
        report.ratio1620 = _ratio(report.d_h, d_opt)
        if d_opt and report.d_h > 1620 * d_opt:
            raise BoundViolation(
                f"1620-bound: {report.d_h} > 1620*{d_opt}"
            )
    report.ms = (time.perf_counter() - t0) * 1000
    return report, OrientationResult(graph, families, merged)


@dataclass
class OrientationResult:
    graph: WeightedGraph
    families: list
    orientation: object
