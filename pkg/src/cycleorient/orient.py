"""Edge orientation: MAIN and the DIRECT-* procedure family.

Cycles are oriented father by father in generation order; inside one
father, uncontained sons go first and containment levels follow, block by
block.  A cycle's class is forwards when its served path runs with its
father's flow and backwards otherwise.  Heavy cycles, outer-crossing
cycles and special contained brothers must end up forwards; DIRECT-ONE
resolves the resulting conflicts by letting the preferred cycle win the
contested segment, occasionally re-fathering sons that hang on it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    BrokenI,
    BrokenInvariant,
    LedgerMiss,
    MissingContainingBrother,
    UnsupportedInstance,
)
from .family import CycleFamily, ServingCycle, brothers_structure
from .graph import PathSeq


class Orientation:
    """Per-edge direction plus the ledger of which cycle set it last."""

    def __init__(self, graph):
        self.graph = graph
        self.arc = {}  # edge id -> (tail, head)
        self.setter = {}  # edge id -> cycle id

    def orient_edge(self, edge, tail, by):
        head = edge.other(tail)
        if self.arc.get(edge.id) == (tail, head):
            return
        self.arc[edge.id] = (tail, head)
        self.setter[edge.id] = by

    def state_from(self, edge, node) -> int:
        """+1 directed away from node, -1 into node, 0 unset."""
        cur = self.arc.get(edge.id)
        if cur is None:
            return 0
        return 1 if cur[0] == node else -1

    def orient_path(self, path: PathSeq, forward: bool, by: int):
        for i, e in enumerate(path.edges):
            tail = path.nodes[i] if forward else path.nodes[i + 1]
            self.orient_edge(e, tail, by)

    def complete(self, graph):
        """Direct every remaining graph edge low endpoint to high."""
        order = {v: i for i, v in enumerate(graph.nodes)}
        for e in graph.edges:
            if e.id not in self.arc:
                tail = e.u if order[e.u] <= order[e.v] else e.v
                self.arc[e.id] = (tail, e.other(tail))

    def to_json(self):
        out = []
        for eid in sorted(self.arc):
            e = self.graph.edge_by_id[eid]
            tail, _ = self.arc[eid]
            out.append({"id": eid, "dir": "uv" if tail == e.u else "vu"})
        return out


@dataclass
class DiagnosticPaths:
    i_path: PathSeq
    t: str
    h: str
    jt: PathSeq | None
    jh: PathSeq | None
    cls: str


class Orienter:
    def __init__(self, family: CycleFamily):
        self.family = family
        self.orientation = Orientation(family.graph)
        self.skipped_reassignments = 0
        self.reassignments = 0

    # -- geometry helpers ---------------------------------------------------

    def flow_ps(self, cyc: ServingCycle) -> PathSeq:
        """The son path running left-to-right in the father's flow."""
        if cyc.father is None or cyc.attached:
            return cyc.ps
        father = self.family.cycles[cyc.father]
        return cyc.ps.reverse() if father.flow_reversed else cyc.ps

    def heavy(self, cyc: ServingCycle) -> bool:
        return is_heavy(self.family, cyc)

    def _set_class(self, cyc: ServingCycle, cls: str):
        cyc.cls = cls
        father = self.family.cycles[cyc.father]
        cyc.flow_reversed = father.flow_reversed ^ (cls == "B")

    # -- competition-aware orienting -----------------------------------------

    def _prefers(self, cyc: ServingCycle, other: ServingCycle) -> bool:
        """Whether cyc is preferred to other (classes must be assigned)."""
        g = self.family.graph
        if cyc.cls == other.cls:
            return cyc.length < other.length
        if cyc.cls == "F":
            beta = g.length_of(set(other.pc_ids or ()) - set(cyc.edge_ids))
            return cyc.length < other.length + 2 * beta
        beta = g.length_of(set(cyc.pc_ids or ()) - set(other.edge_ids))
        return cyc.length + 2 * beta < other.length

    def orient_competing(self, cyc: ServingCycle, path: PathSeq, forward: bool):
        """Orient a piece of cyc's son path, competing for every run of
        edges that currently carries the opposite direction.

        The preferred cycle wins each contested run; when the setter loses
        a run and is shorter than cyc, its sons hanging on the shared path
        move under cyc.
        """
        n = len(path.edges)
        i = 0
        while i < n:
            tail = path.nodes[i] if forward else path.nodes[i + 1]
            st = self.orientation.state_from(path.edges[i], tail)
            if st >= 0:
                self.orientation.orient_edge(path.edges[i], tail, cyc.id)
                i += 1
                continue
            setter = self.orientation.setter.get(path.edges[i].id)
            j = i
            while j < n:
                t2 = path.nodes[j] if forward else path.nodes[j + 1]
                if self.orientation.state_from(path.edges[j], t2) >= 0:
                    break
                if self.orientation.setter.get(path.edges[j].id) != setter:
                    break
                j += 1
            other = self._competitor(path.edges[i])
            if self._prefers(cyc, other):
                for k in range(i, j):
                    t2 = path.nodes[k] if forward else path.nodes[k + 1]
                    self.orientation.orient_edge(path.edges[k], t2, cyc.id)
                if other.length < cyc.length:
                    self._reassign_sons(other, cyc)
            i = j

    # -- main ----------------------------------------------------------------

    def run(self) -> Orientation:
        fam = self.family
        root = fam.root()
        self.orientation.orient_path(root.ps, True, root.id)
        root.cls = "F"
        root.flow_reversed = False
        pending = [root.id]
        while pending:
            pending.sort(key=lambda cid: (fam.cycles[cid].g, fam.cycles[cid].key))
            fid = pending.pop(0)
            sons = fam.sons_of(fid)
            if not sons:
                continue
            struct = brothers_structure(fam, fid)
            self._check_level_crossings(struct)
            top_row = struct.rows.get(None)
            if top_row is None:
                raise BrokenInvariant("father has sons but no uncontained row")
            self.direct_brothers(fid, struct, top_row)
            pending.extend(c.id for c in fam.sons_of(fid))
        return self.orientation

    def _check_level_crossings(self, struct):
        by_row = {}
        for rec in struct.crossings:
            ca = self.family.cycles[rec.left]
            cb = self.family.cycles[rec.right]
            if ca.contain_parent != cb.contain_parent:
                continue
            if rec.kind == "inner":
                continue
            by_row.setdefault(ca.contain_parent, []).append(rec)
        for row, recs in by_row.items():
            if len(recs) > 1:
                raise UnsupportedInstance(
                    "two outer-crossings in one containment level"
                )

    def direct_brothers(self, father_id, struct, row):
        fam = self.family
        father = fam.cycles[father_id]
        blocks = list(row.blocks)
        if father.flow_reversed:
            blocks = [list(reversed(b)) for b in reversed(blocks)]
        for block in blocks:
            self.direct(father_id, struct, block)
            for cid in block:
                sub = struct.rows.get(cid)
                if sub is not None:
                    self.direct_brothers(father_id, struct, sub)

    # -- DIRECT and DIRECT-K -------------------------------------------------

    def direct(self, father_id, struct, block):
        fam = self.family
        first = fam.cycles[block[0]]
        last = fam.cycles[block[-1]]
        if len(block) == 1 and first.attached:
            self.orientation.orient_path(first.ps, True, first.id)
            first.cls = "F"
            first.flow_reversed = False
            return
        ps1 = self.flow_ps(first)
        psn = self.flow_ps(last)
        v = ps1.nodes[0]
        u = psn.nodes[-1]
        e_v = ps1.edges[0]
        e_u = psn.edges[-1]
        l1 = self.orientation.state_from(e_v, v)
        l2 = -self.orientation.state_from(e_u, u)
        if len(block) == 2:
            rec = self._pair_crossing(struct, block[0], block[1])
            if rec is not None and rec.kind == "inner":
                self.direct_inner_crossing(father_id, block, l1, l2)
                return
        self.direct_k(father_id, struct, block, l1, l2)

    def _pair_crossing(self, struct, a, b):
        want = frozenset((a, b))
        for rec in struct.crossings:
            if frozenset((rec.left, rec.right)) == want:
                return rec
        return None

    def direct_k(self, father_id, struct, block, l1, l2):
        if len(block) == 1:
            self.direct_one(block[0], l1, l2)
        elif len(block) == 2:
            self.direct_two(block[0], block[1], l1, l2)
        else:
            self.direct_many(father_id, struct, block, l1, l2)

    # -- DIRECT-MANY ----------------------------------------------------------

    def direct_many(self, father_id, struct, block, l1, l2):
        fam = self.family
        n = len(block)
        g = fam.graph
        span_len = [fam.cycles[c].span_length(g) for c in block]
        m1 = max(range(n), key=lambda i: (span_len[i], -i))
        m2 = max(
            (i for i in range(n) if i != m1),
            key=lambda i: (span_len[i], -i),
        )
        heavy1 = self.heavy(fam.cycles[block[m1]])
        crossing_partner = None
        for rec in struct.crossings:
            pair = {rec.left, rec.right}
            if fam.cycles[block[m1]].id in pair and pair <= set(block):
                other = (pair - {block[m1]}).pop()
                crossing_partner = block.index(other)
        if not heavy1:
            even = n % 2 == 0
            if (l1 != -1) and ((even and l2 != 1) or (not even and l2 != -1)):
                self.direct_forwards(block)
            elif (l1 != 1) and ((even and l2 != -1) or (not even and l2 != 1)):
                self.direct_backwards(block)
            elif (l1 == 1) and ((even and l2 == 1) or (not even and l2 == -1)):
                self.direct_two(block[0], block[1], 1, 1)
                self.direct_backwards(block[2:])
            elif (not even) and l1 == -1 and l2 == 1:
                self.direct_two(block[n - 2], block[n - 1], 1, 1)
                self.direct_backwards(block[: n - 2])
            elif even and l1 == -1 and l2 == -1:
                # special treatment keeping the first pair off double-backwards
                self.direct_one(block[0], -1, -1)
                self.direct_two(block[1], block[2], 1, 1)
                self.direct_backwards(block[3:])
            else:
                raise BrokenInvariant("DIRECT-MANY light case fell through")
            return
        heavy2 = self.heavy(fam.cycles[block[m2]])
        if not heavy2 and crossing_partner is None:
            if m1 == 0:
                self.direct_one(block[0], l1, +1)
                self.direct_k(father_id, struct, block[1:], -1, l2)
            elif m1 == n - 1:
                self.direct_one(block[n - 1], +1, l2)
                self.direct_k(father_id, struct, block[: n - 1], l1, -1)
            else:
                self.direct_one(block[m1], +1, +1)
                self.direct_k(father_id, struct, block[:m1], l1, -1)
                self.direct_k(father_id, struct, block[m1 + 1 :], -1, l2)
            return
        if crossing_partner is not None:
            j, k = sorted((m1, crossing_partner))
            if k != j + 1:
                raise UnsupportedInstance("outer-crossing pair not adjacent")
        else:
            j, k = sorted((m1, m2))
        if j == 0:
            self.direct_one(block[0], l1, +1)
        else:
            self.direct_one(block[j], +1, +1)
        delta = l2 if k == n - 1 else 1
        if k == j + 1 and crossing_partner is None:
            self.direct_one(block[k], -1, delta)
        else:
            self.direct_one(block[k], +1, delta)
        if j > 0:
            self.direct_k(father_id, struct, block[:j], l1, -1)
        if k > j + 1:
            self.direct_k(father_id, struct, block[j + 1 : k], -1, -1)
        if k < n - 1:
            self.direct_k(father_id, struct, block[k + 1 :], -1, l2)

    # -- alternating rows -----------------------------------------------------

    def direct_forwards(self, block):
        self._alternate(block, start_forward=True)

    def direct_backwards(self, block):
        self._alternate(block, start_forward=False)

    def _alternate(self, block, start_forward):
        for i, cid in enumerate(block):
            cyc = self.family.cycles[cid]
            forward = start_forward ^ (i % 2 == 1)
            self._set_class(cyc, "F" if forward else "B")
            self.orient_competing(cyc, self.flow_ps(cyc), forward)

    # -- DIRECT-TWO -----------------------------------------------------------

    def _spur(self, c1: ServingCycle, c2: ServingCycle):
        """Shared tail of ps(C1)/head of ps(C2): (u node, index on each)."""
        ps1, ps2 = self.flow_ps(c1), self.flow_ps(c2)
        shared = ps1.edge_ids & ps2.edge_ids
        i = 0
        while i < len(ps2.edges) and ps2.edges[i].id in shared:
            i += 1
        u = ps2.nodes[i]
        j = len(ps1.nodes) - 1 - i
        if i and (ps1.nodes[j] != u or ps1.nodes[-1] != ps2.nodes[0]):
            raise BrokenInvariant("neighbor spur is not a shared tail")
        return u, j, i

    def direct_two(self, cid1, cid2, l1, l2):
        fam = self.family
        c1, c2 = fam.cycles[cid1], fam.cycles[cid2]
        if not (self.heavy(c1) or self.heavy(c2)):
            ps1, ps2 = self.flow_ps(c1), self.flow_ps(c2)
            if (l1 != -1) and (l2 != 1):
                self._set_class(c1, "F")
                self._set_class(c2, "B")
                self.orient_competing(c1, ps1, True)
                self.orient_competing(c2, ps2, False)
            elif (l1 == 0 and l2 == 1) or (l1 == -1 and l2 != -1):
                self._set_class(c1, "B")
                self._set_class(c2, "F")
                self.orient_competing(c1, ps1, False)
                self.orient_competing(c2, ps2, True)
            else:
                # both boundary edges press inward (1,1) or outward (-1,-1);
                # the shared spur goes to the preferred brother
                forward = l1 == 1
                cls = "F" if forward else "B"
                self._set_class(c1, cls)
                self._set_class(c2, cls)
                _, j1, i2 = self._spur(c1, c2)
                self.orient_competing(c1, ps1.segment(0, j1), forward)
                self.orient_competing(c2, ps2.segment(i2, len(ps2.edges)), forward)
                if len(ps1.edges) > j1:
                    c1_wins = c1.length < c2.length
                    winner = c1 if c1_wins else c2
                    spur_dir = forward if c1_wins else not forward
                    self.orient_competing(
                        winner, ps1.segment(j1, len(ps1.edges)), spur_dir
                    )
            return
        self.direct_one(cid1, l1, +1)
        self.direct_one(cid2, -1, l2)

    # -- DIRECT-INNER-CROSSING --------------------------------------------------

    def direct_inner_crossing(self, father_id, block, l1, l2):
        fam = self.family
        c1, c2 = fam.cycles[block[0]], fam.cycles[block[1]]
        holder = c1.contain_parent
        if holder is None or holder != c2.contain_parent:
            raise MissingContainingBrother(
                f"inner-crossing pair {block} lacks a common containing brother"
            )
        container = fam.cycles[holder]
        if container.cls is None:
            raise MissingContainingBrother(
                f"containing brother {holder} not oriented yet"
            )
        if container.cls == "F":
            self.direct_one(block[0], l1, +1)
            self.direct_one(block[1], +1, l2)
        else:
            self.direct_one(block[0], l1, -1)
            self.direct_one(block[1], -1, l2)

    # -- DIRECT-ONE ---------------------------------------------------------------

    def direct_one(self, cid, l1, l2):
        fam = self.family
        cyc = fam.cycles[cid]
        if cyc.attached:
            cyc.cls = "F"
            cyc.flow_reversed = False
            self.orient_competing(cyc, cyc.ps, True)
            return
        ps = self.flow_ps(cyc)
        if l1 != -1 and l2 != -1:
            self._set_class(cyc, "F")
            self.orient_competing(cyc, ps, True)
            return
        if (
            not self.heavy(cyc)
            and not is_special_contained(fam, cyc)
            and l1 != 1
            and l2 != 1
        ):
            self._set_class(cyc, "B")
            self.orient_competing(cyc, ps, False)
            return
        # forwards forced; every opposing run on the son path is contested
        self._set_class(cyc, "F")
        self.orient_competing(cyc, ps, True)

    def _competitor(self, edge) -> ServingCycle:
        setter = self.orientation.setter.get(edge.id)
        if setter is not None:
            setter = self.family.live_id(setter)
        if setter is None or setter not in self.family.cycles:
            raise LedgerMiss(f"edge {edge.id} has no live setter")
        return self.family.cycles[setter]

    def _reassign_sons(self, loser: ServingCycle, winner: ServingCycle):
        fam = self.family
        shared = (loser.ps.edge_ids if loser.ps else frozenset()) & (
            winner.ps.edge_ids
        )
        for d in list(fam.sons_of(loser.id)):
            if not d.pf_ids or not (set(d.pf_ids) <= shared):
                continue
            if d.cls is not None:
                self.skipped_reassignments += 1
                continue
            new_ids = set(d.ps.edge_ids) | (
                set(winner.edge_ids) - set(d.pf_ids)
            )
            dup = set(d.ps.edge_ids) & (set(winner.edge_ids) - set(d.pf_ids))
            if dup:
                new_ids -= dup
            nid = fam.replace_walk(d.id, new_ids)
            fam.adopt(winner.id, nid)
            fam.refresh_subtree(nid)
            self.reassignments += 1


def is_heavy(family: CycleFamily, cyc: ServingCycle) -> bool:
    father = family.cycles[cyc.father]
    return 3 * cyc.span_length(family.graph) > father.ps.length


def is_special_contained(family: CycleFamily, cyc: ServingCycle) -> bool:
    holder = cyc.contain_parent
    if holder is None or holder not in family.cycles:
        return False
    b = family.cycles[holder]
    brothers = [
        s for s in family.sons_of(cyc.father) if s.contain_parent == holder
    ]
    if brothers != [cyc]:
        return False
    if not (cyc.ps.edge_ids & b.ps.edge_ids):
        return False
    return b.cls == "F"


def main_orient(family: CycleFamily) -> Orientation:
    """Orient one family; the caller merges per-component orientations."""
    orienter = Orienter(family)
    return orienter.run()


def extract_diagnostics(family: CycleFamily, orientation: Orientation):
    """I(C), its endpoints and the J stubs for every served, oriented cycle."""
    out = {}
    for cid in sorted(family.cycles):
        cyc = family.cycles[cid]
        if cyc.father is None or cyc.cls is None or not cyc.U:
            continue
        father = family.cycles[cyc.father]
        if cyc.attached:
            own = cyc.ps
        else:
            flow = cyc.ps.reverse() if father.flow_reversed else cyc.ps
            own = flow if cyc.cls == "F" else flow.reverse()
        dirs = [
            orientation.state_from(e, own.nodes[i])
            for i, e in enumerate(own.edges)
        ]
        pos = []
        for v in cyc.U:
            if v not in own.nodes:
                raise BrokenI(f"served node {v} off the son path of {cid}")
            pos.append(own.nodes.index(v))
        lo, hi = min(pos), max(pos)
        if any(d != 1 for d in dirs[lo:hi]):
            raise BrokenI(f"served run of cycle {cid} is not one directed path")
        a, b = lo, hi
        while a > 0 and dirs[a - 1] == 1:
            a -= 1
        while b < len(dirs) and dirs[b] == 1:
            b += 1
        i_path = own.segment(a, b)
        jt = None
        if a > 0:
            ja = a
            while ja > 0 and dirs[ja - 1] == -1:
                ja -= 1
            jt = own.segment(ja, a).reverse()
        jh = None
        if b < len(dirs):
            jb = b
            while jb < len(dirs) and dirs[jb] == -1:
                jb += 1
            jh = own.segment(b, jb).reverse()
        out[cid] = DiagnosticPaths(
            i_path=i_path,
            t=own.nodes[a],
            h=own.nodes[b],
            jt=jt,
            jh=jh,
            cls=cyc.cls,
        )
    return out


def check_properties(family: CycleFamily):
    """The five orientation properties, asserted post-run.

    Returns a list of violation strings (empty on success).
    """
    fam = family
    problems = []
    fathers = {c.father for c in fam.cycles.values() if c.father is not None}
    for fid in sorted(fathers):
        struct = brothers_structure(fam, fid)
        for row in struct.rows.values():
            for block in row.blocks:
                for cid in block:
                    cyc = fam.cycles[cid]
                    if cyc.cls is None:
                        problems.append(f"cycle {cid} left unoriented")
                        continue
                    if is_heavy(fam, cyc) and cyc.cls != "F":
                        problems.append(f"heavy cycle {cid} oriented backwards")
                if len(block) > 2:
                    head = [fam.cycles[c].cls for c in block[:2]]
                    tail = [fam.cycles[c].cls for c in block[-2:]]
                    if head == ["B", "B"]:
                        problems.append(f"block {block}: first two backwards")
                    if tail == ["B", "B"]:
                        problems.append(f"block {block}: last two backwards")
        for rec in struct.crossings:
            ca, cb = fam.cycles[rec.left], fam.cycles[rec.right]
            if ca.contain_parent != cb.contain_parent:
                continue
            if rec.kind == "inner":
                holder = ca.contain_parent
                if holder is not None:
                    want = fam.cycles[holder].cls
                    if ca.cls != want or cb.cls != want:
                        problems.append(
                            f"inner pair ({rec.left},{rec.right}) disagrees "
                            f"with containing brother {holder}"
                        )
            else:
                if ca.cls != "F" or cb.cls != "F":
                    problems.append(
                        f"outer pair ({rec.left},{rec.right}) not forwards"
                    )
        for cid in struct.order:
            cyc = fam.cycles[cid]
            if is_special_contained(fam, cyc):
                if cyc.cls != "F":
                    problems.append(f"special contained {cid} not forwards")
                holder = fam.cycles[cyc.contain_parent]
                if holder.cls != "F":
                    problems.append(
                        f"container {holder.id} of special contained {cid} "
                        "not forwards"
                    )
    return problems
