"""Serving-cycle family and the hereditary tree.

For every node v the serving cycle C(v) is the W-minimal closed walk with
distinct edges through v and the root.  The family carries the hereditary
order (fathers and sons via the S-group partition), the per-cycle pieces
P_f / P_s / P_c, generations, containment levels, blocks and crossing
records.  Construction walks generation by generation; an optional
uncrosser callback runs on every parent before its sons are frozen, which
is how crossing cancellation hooks in without this module depending on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    AncestorRelation,
    BrokenInvariant,
    CycleOrientError,
    MalformedIntersection,
    NoCrossNode,
    NoCycle,
)
from .graph import (
    CycleWalk,
    PathSeq,
    WeightedGraph,
    edges_as_subgraph,
    min_cycle_edges,
)


@dataclass
class ServingCycle:
    id: int
    walk: CycleWalk
    U: set = field(default_factory=set)
    father: int | None = None
    ps: PathSeq | None = None  # son path, stored left-to-right on the father
    pf_ids: frozenset | None = None
    pc_ids: frozenset | None = None
    span: tuple | None = None  # node-position interval on the father's ps
    g: int = 0
    lc: int = 0
    contain_parent: int | None = None
    # orientation-time state
    cls: str | None = None  # 'F' forwards / 'B' backwards
    flow_reversed: bool = False

    @property
    def edge_ids(self) -> frozenset:
        return self.walk.edge_ids

    @property
    def key(self) -> int:
        return self.walk.key

    @property
    def length(self) -> int:
        return self.walk.length

    @property
    def attached(self) -> bool:
        return self.span is not None and self.span[0] == self.span[1]

    def span_length(self, graph) -> int:
        return graph.length_of(self.pf_ids) if self.pf_ids else 0


@dataclass
class CrossingRecord:
    left: int
    right: int
    x: str
    kind: str  # 'inner' | 'outer' | 'unknown'
    nvh: bool
    positions: tuple  # (k, g, l, h) node positions on the parent's ps


class CycleFamily:
    """One hereditary family: the component of G_C attached to the root."""

    def __init__(self, graph: WeightedGraph):
        self.graph = graph
        self.cycles: dict[int, ServingCycle] = {}
        self.by_edges: dict[frozenset, int] = {}
        self.node_cycle: dict[str, int] = {}
        self.root_id: int | None = None
        self.sc: dict[int, set] = {}
        self.shortcut_stamp: dict[int, int] = {}  # edge id -> creation stamp
        self.proc_stamp: dict[int, int] = {}  # cycle id -> stamp when processed
        self.merged_into: dict[int, int] = {}
        self._next_id = 0
        self._stamp = 0

    def live_id(self, cid: int) -> int:
        while cid in self.merged_into:
            cid = self.merged_into[cid]
        return cid

    # -- bookkeeping --------------------------------------------------------

    def add_cycle(self, walk: CycleWalk, served=()) -> int:
        key = walk.edge_ids
        cid = self.by_edges.get(key)
        if cid is None:
            cid = self._next_id
            self._next_id += 1
            self.cycles[cid] = ServingCycle(cid, walk)
            self.by_edges[key] = cid
            self.sc[cid] = set()
        cyc = self.cycles[cid]
        for v in served:
            cyc.U.add(v)
            self.node_cycle[v] = cid
        return cid

    def reserve(self, cid: int, nodes) -> None:
        """Move nodes to be served by cycle cid."""
        for v in nodes:
            old = self.node_cycle.get(v)
            if old is not None and old != cid:
                self.cycles[old].U.discard(v)
            self.node_cycle[v] = cid
            self.cycles[cid].U.add(v)

    def replace_walk(self, cid: int, edge_ids) -> int:
        """Swap a cycle's walk for a new edge set; merge on collision.

        Returns the id that now carries the record (the other cycle's id
        when the new edge set already exists in the family).
        """
        cyc = self.cycles[cid]
        new_ids = frozenset(edge_ids)
        if new_ids == cyc.edge_ids:
            return cid
        other = self.by_edges.get(new_ids)
        if other is not None and other != cid:
            self.reserve(other, set(cyc.U))
            self.sc.pop(cid, None)
            del self.by_edges[cyc.edge_ids]
            del self.cycles[cid]
            self.merged_into[cid] = other
            for son in list(self.cycles.values()):
                if son.father == cid:
                    son.father = other
            return other
        del self.by_edges[cyc.edge_ids]
        cyc.walk = CycleWalk.from_edge_ids(self.graph, new_ids)
        self.by_edges[new_ids] = cid
        return cid

    def sons_of(self, cid: int):
        return sorted(
            (c for c in self.cycles.values() if c.father == cid),
            key=lambda c: (c.span, c.key),
        )

    def root(self) -> ServingCycle:
        return self.cycles[self.root_id]

    def generations(self) -> int:
        return max((c.g for c in self.cycles.values()), default=0)

    # -- relations -----------------------------------------------------------

    def relation_to(self, parent: ServingCycle, member: ServingCycle):
        """Classify member against a prospective father.

        The member's private part (member minus father) must be a single
        trail or a closed trail.  A trail spans a contiguous piece of the
        father's son path: ('span', (i, j), span_path) with i < j node
        positions.  A closed trail hangs at one shared node ('attach',
        (i, i), closed_walk); the father may keep private bubbles of its
        own at the same node.  Anything else is a malformed overlap.
        """
        g = self.graph
        shared = member.edge_ids & parent.edge_ids
        rest = member.edge_ids - shared
        rkind, rpiece = edges_as_subgraph(g, rest)
        if rkind == "cycle":
            touch = set(rpiece.nodes) & set(parent.walk.nodes)
            if len(touch) != 1:
                raise MalformedIntersection(
                    f"cycle {member.id} attaches to {parent.id} at {sorted(touch)}"
                )
            v = touch.pop()
            pos = self._attach_position(parent, v)
            walk = CycleWalk.from_edge_ids(g, rest, start=v)
            return "attach", (pos, pos), walk
        if rkind != "path":
            raise MalformedIntersection(
                f"cycle {member.id} \\ {parent.id} is {rkind}"
            )
        if g.root in rpiece.nodes[1:-1]:
            raise MalformedIntersection(
                f"cycle {member.id}: root inside the private part"
            )
        pf = parent.edge_ids - shared
        span = self._edge_span(parent, pf)
        if span is None:
            raise MalformedIntersection(
                f"cycle {member.id}: father path not contiguous on {parent.id}"
            )
        i, j = span
        left, right = parent.ps.nodes[i], parent.ps.nodes[j]
        if {rpiece.start, rpiece.end} != {left, right}:
            raise MalformedIntersection(
                f"cycle {member.id}: son path ends {rpiece.start},{rpiece.end}"
                f" != span ends {left},{right}"
            )
        if rpiece.start != left:
            rpiece = rpiece.reverse()
        return "span", (i, j), rpiece

    def _attach_position(self, parent: ServingCycle, v: str) -> int:
        try:
            return parent.ps.nodes.index(v)
        except ValueError:
            raise MalformedIntersection(
                f"attach node {v!r} not on son path of {parent.id}"
            ) from None

    def _edge_span(self, parent: ServingCycle, pf_ids):
        positions = [i for i, e in enumerate(parent.ps.edges) if e.id in pf_ids]
        if not positions:
            return None
        lo, hi = min(positions), max(positions)
        if len(positions) != hi - lo + 1 or len(positions) != len(pf_ids):
            return None
        return lo, hi + 1

    def adopt(self, parent_id: int, member_id: int) -> None:
        """Record member as a son of parent and fill its pieces."""
        parent = self.cycles[parent_id]
        member = self.cycles[member_id]
        kind, span, piece = self.relation_to(parent, member)
        member.father = parent_id
        member.span = span
        member.ps = piece
        member.pc_ids = member.edge_ids & parent.edge_ids
        member.pf_ids = frozenset(parent.edge_ids - member.edge_ids)
        member.g = parent.g + 1
        if kind == "span":
            i, j = span
            expect = frozenset(e.id for e in parent.ps.edges[i:j])
            if member.pf_ids != expect:
                raise BrokenInvariant("span edges disagree with father path")

    def refresh_subtree(self, cid: int) -> None:
        """Recompute walks below cid after its own walk changed.

        A descendant's cycle is its son path plus everything of its
        father's cycle except its father path; father reassignment and
        competition rewrites change the father side only.
        """
        for son in list(self.sons_of(cid)):
            father = self.cycles[cid]
            new_ids = set(son.ps.edge_ids) | (set(father.edge_ids) - set(son.pf_ids))
            dup = set(son.ps.edge_ids) & (set(father.edge_ids) - set(son.pf_ids))
            if dup:
                # paths expected disjoint; duplicated edges cancel pairwise
                new_ids -= dup
            nid = self.replace_walk(son.id, new_ids)
            if nid != son.id:
                continue
            son.pc_ids = son.edge_ids & father.edge_ids
            son.g = father.g + 1
            self.refresh_subtree(son.id)


# -- family construction -----------------------------------------------------


def min_cycle_through(graph: WeightedGraph, v: str) -> CycleWalk:
    """W-minimal closed walk with distinct edges through v and the root."""
    ids = min_cycle_edges(graph, graph.root, v)
    if ids is None:
        raise NoCycle(f"no cycle through {v!r} and root")
    return CycleWalk.from_edge_ids(graph, ids)


def build_family(graph: WeightedGraph):
    """Serving cycles for all nodes, split into per-component families."""
    serving = {}
    for v in graph.nodes:
        if v == graph.root:
            continue
        serving[v] = min_cycle_through(graph, v)
    # components of G_C induced on V \ {z}
    parent = {v: v for v in graph.nodes}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for walk in serving.values():
        for e in walk.edges:
            if e.u != graph.root and e.v != graph.root:
                union(e.u, e.v)
    comp_nodes = {}
    for v in serving:
        comp_nodes.setdefault(find(v), []).append(v)
    families = []
    for rep in sorted(comp_nodes, key=graph.nodes.index):
        fam = CycleFamily(graph)
        for v in sorted(comp_nodes[rep], key=graph.nodes.index):
            fam.add_cycle(serving[v], served=[v])
        families.append(fam)
    return families


def family_from_cycles(graph: WeightedGraph, walks, serve_minimal=True):
    """Family over an explicit cycle list (figure instances, tests).

    With serve_minimal each node is served by the W-least listed cycle
    containing it; members serving nobody are kept (hereditary structure
    does not need served sets).
    """
    fam = CycleFamily(graph)
    for w in walks:
        fam.add_cycle(w)
    if serve_minimal:
        for v in graph.nodes:
            if v == graph.root:
                continue
            best = None
            for c in fam.cycles.values():
                if v in c.walk.nodes and (best is None or c.key < best.key):
                    best = c
            if best is not None:
                fam.reserve(best.id, [v])
    return fam


def partition_sons(family: CycleFamily, parent_id: int, member_ids):
    """Group members by their overlap pattern with the parent.

    Returns {key: [member ids ordered by cycle key]} where key is
    ('span', i, j) or ('attach', i); the first member of each group is the
    son the group defines.
    """
    parent = family.cycles[parent_id]
    groups = {}
    for mid in sorted(member_ids, key=lambda m: family.cycles[m].key):
        member = family.cycles[mid]
        kind, span, _ = family.relation_to(parent, member)
        key = (kind, span[0], span[1])
        groups.setdefault(key, []).append(mid)
    return groups


def ensure_root_ps(family: CycleFamily) -> None:
    """The root cycle's son path is the cycle itself, cut at the root."""
    root = family.root()
    walk = root.walk
    if walk.nodes[0] != family.graph.root:
        walk = CycleWalk.from_edge_ids(family.graph, walk.edge_ids)
    root.ps = PathSeq(family.graph, walk.nodes, walk.edges)
    root.span = None
    root.pf_ids = frozenset()
    root.pc_ids = frozenset()


def grow_tree(family: CycleFamily, uncrosser=None, trace=None) -> None:
    """Assign fathers generation by generation.

    uncrosser(family, parent_id, member_ids) -> member_ids runs right
    before a parent's sons are frozen; crossing cancellation plugs in here.
    """
    if not family.cycles:
        return
    family.root_id = min(family.cycles.values(), key=lambda c: c.key).id
    ensure_root_ps(family)
    level = [(family.root_id, [c for c in family.cycles if c != family.root_id])]
    while level:
        nxt = []
        for parent_id, members in level:
            family.proc_stamp[parent_id] = family._stamp
            if uncrosser is not None and members:
                members = uncrosser(family, parent_id, members)
            family._stamp += 1
            groups = partition_sons(family, parent_id, members)
            for key in sorted(groups):
                group = groups[key]
                son = group[0]
                family.adopt(parent_id, son)
                if len(group) > 1:
                    nxt.append((son, group[1:]))
        level = nxt


# -- containment, blocks, crossings -------------------------------------------


@dataclass
class BrotherRow:
    """Brothers sharing a containment parent (None for the uncontained)."""

    container: int | None
    members: list  # cycle ids ordered along the father's stored ps
    blocks: list  # list of lists of cycle ids


@dataclass
class BrotherStructure:
    father: int
    order: list
    contain_parent: dict
    lc: dict
    rows: dict  # container id (or None) -> BrotherRow
    crossings: list  # CrossingRecord for son pairs


def _span_contains(outer, inner) -> bool:
    if outer == inner:
        return False
    (a, b), (c, d) = outer, inner
    if c == d:
        return a < c < b
    return a <= c and d <= b


def _spans_touch(s, t) -> bool:
    (a, b), (c, d) = sorted([s, t])
    return b == c


def spans_properly_cross(parent, s, t) -> bool:
    """Interleaved spans with four distinct endpoint nodes.

    Spans live on the father's son path; for the root that path is the
    cycle cut at z, so a span ending at either copy of z shares the node z
    with a span ending at the other copy — such pairs only touch around
    the cycle and are not crossings.
    """
    (a, b), (c, d) = sorted([s, t])
    if not a < c < b < d:
        return False
    nodes = parent.ps.nodes
    return len({nodes[a], nodes[c], nodes[b], nodes[d]}) == 4


def detect_crossings(family: CycleFamily, parent_id: int, member_ids=None):
    """Crossing records among sons (or given members) of one parent."""
    parent = family.cycles[parent_id]
    if member_ids is None:
        pairs = [(c.id, c.span, c.ps) for c in family.sons_of(parent_id)]
    else:
        pairs = []
        for mid in sorted(member_ids, key=lambda m: family.cycles[m].key):
            kind, span, piece = family.relation_to(parent, family.cycles[mid])
            pairs.append((mid, span, piece))
    records = []
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            (ida, sa, pa), (idb, sb, pb) = pairs[a], pairs[b]
            if not spans_properly_cross(parent, sa, sb):
                continue
            if sa > sb:
                (ida, sa, pa), (idb, sb, pb) = (idb, sb, pb), (ida, sa, pa)
            rec = _crossing_record(family, parent, ida, sa, pa, idb, sb, pb)
            if rec is not None:
                records.append(rec)
    return records


def _crossing_record(family, parent, left_id, lspan, lpath, right_id, rspan, rpath):
    """Record for one interleaved pair; None when the pair shares no node
    off the parent (the spans interleave but the cycles run on opposite
    sides of the parent in the embedding, so nothing actually crosses)."""
    g = family.graph
    cl, cr = family.cycles[left_id], family.cycles[right_id]
    shared_nodes = (set(cl.walk.nodes) & set(cr.walk.nodes)) - set(parent.walk.nodes)
    if not shared_nodes:
        return None
    x = min(shared_nodes, key=g.nodes.index)
    k, l_ = lspan
    g_, h = rspan
    # split span paths at the cross node
    kind = "unknown"
    try:
        xl = lpath.nodes.index(x)
        xr = rpath.nodes.index(x)
    except ValueError:
        xl = xr = None
    if xl is not None:
        out_l = set(lpath.nodes[: xl + 1])  # [k, x]
        in_l = set(lpath.nodes[xl:])  # [x, l]
        out_r = set(rpath.nodes[xr:])  # [x, h]
        in_r = set(rpath.nodes[: xr + 1])  # [g, x]
        ul, ur = cl.U, cr.U
        if ul and ur:
            if ul <= out_l and ur <= out_r:
                kind = "outer"
            elif ul <= in_l and ur <= in_r:
                kind = "inner"
    span_len_l = sum(e.length for e in parent.ps.edges[k:l_])
    span_len_r = sum(e.length for e in parent.ps.edges[g_:h])
    nvh = (
        kind == "outer"
        and 2 * parent.ps.length >= 3 * max(span_len_l, span_len_r)
    )
    return CrossingRecord(
        left=left_id,
        right=right_id,
        x=x,
        kind=kind,
        nvh=nvh,
        positions=(k, g_, l_, h),
    )


def brothers_structure(family: CycleFamily, father_id: int) -> BrotherStructure:
    """Containment, lc and blocks for the sons of one father.

    Computed on demand so it always reflects the live tree (father
    reassignment during orientation mutates son sets).
    """
    sons = family.sons_of(father_id)
    order = [c.id for c in sons]
    span = {c.id: c.span for c in sons}
    contain_parent = {}
    for c in sons:
        containers = [
            d for d in sons if d.id != c.id and _span_contains(span[d.id], span[c.id])
        ]
        if containers:
            best = min(
                containers,
                key=lambda d: (span[d.id][1] - span[d.id][0], d.key),
            )
            contain_parent[c.id] = best.id
        else:
            contain_parent[c.id] = None
    lc = {}

    def _lc(cid):
        if cid in lc:
            return lc[cid]
        p = contain_parent[cid]
        lc[cid] = 0 if p is None else _lc(p) + 1
        return lc[cid]

    for c in sons:
        _lc(c.id)
        c.lc = lc[c.id]
        c.contain_parent = contain_parent[c.id]
    crossings = detect_crossings(family, father_id)
    crossing_pairs = {frozenset((r.left, r.right)) for r in crossings}
    rows = {}
    for c in sons:
        rows.setdefault(contain_parent[c.id], []).append(c.id)
    row_structs = {}
    for container, ids in rows.items():
        ids.sort(key=lambda i: (span[i], family.cycles[i].key))
        blocks = []
        cur = []
        for cid in ids:
            if not cur:
                cur = [cid]
                continue
            prev = cur[-1]
            linked = (
                _spans_touch(span[prev], span[cid])
                or frozenset((prev, cid)) in crossing_pairs
            )
            attached = (
                family.cycles[cid].attached or family.cycles[prev].attached
            )
            if linked and not attached:
                cur.append(cid)
            else:
                blocks.append(cur)
                cur = [cid]
        if cur:
            blocks.append(cur)
        row_structs[container] = BrotherRow(container, ids, blocks)
    return BrotherStructure(
        father=father_id,
        order=order,
        contain_parent=contain_parent,
        lc=lc,
        rows=row_structs,
        crossings=crossings,
    )


def build_tree(family: CycleFamily) -> None:
    """Fill lc and containment family-wide (g is set during grow_tree)."""
    fathers = {c.father for c in family.cycles.values() if c.father is not None}
    if family.root_id is not None:
        fathers.add(family.root_id)
    for fid in sorted(fathers):
        brothers_structure(family, fid)


def lowest_common_ancestor(family: CycleFamily, a: int, b: int) -> int:
    """Deepest common ancestor of two incomparable cycles."""
    anc_a = []
    cur = a
    while cur is not None:
        anc_a.append(cur)
        cur = family.cycles[cur].father
    if b in anc_a:
        raise AncestorRelation(f"{b} is an ancestor of {a}")
    seen = set(anc_a)
    cur = b
    while cur is not None:
        if cur in seen:
            if cur == a:
                raise AncestorRelation(f"{a} is an ancestor of {b}")
            return cur
        cur = family.cycles[cur].father
    raise CycleOrientError("cycles share no ancestor")


def family_dump(family: CycleFamily) -> dict:
    """JSON-friendly structural dump for golden tests and debugging."""
    out = {"root": family.root_id, "cycles": []}
    for cid in sorted(family.cycles):
        c = family.cycles[cid]
        out["cycles"].append(
            {
                "id": cid,
                "nodes": list(c.walk.nodes),
                "length_scaled": c.length,
                "father": c.father,
                "U": sorted(c.U),
                "g": c.g,
                "lc": c.lc,
                "span": list(c.span) if c.span else None,
                "sc": sorted(family.sc.get(cid, ())),
            }
        )
    return out
