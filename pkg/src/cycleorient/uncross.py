"""Crossing cancellation: remove every not-very-heavy-outer-crossing.

Runs inside the generation-by-generation tree growth: before a parent's
sons are frozen, pairs of candidate cycles that outer-cross under the
not-very-heavy threshold are rewritten to share a freshly computed
shortest path (the shortcut), after which their spans merely touch.  A
per-cycle shortcut edge set SC is maintained so that later candidate
costs can discount path segments that already ride old shortcuts.
"""

from __future__ import annotations

import json

from .errors import BoundViolation, BrokenInvariant, EmptyCandidate, NoCycle
from .family import CycleFamily, detect_crossings, grow_tree, spans_properly_cross
from .graph import CycleWalk, PathSeq, concat_paths, shortest_path


def cancel_crossings(family: CycleFamily, trace=None) -> None:
    """Grow the hereditary tree, uncrossing every n.v.h. pair on the way."""
    grow_tree(family, uncrosser=_make_uncrosser(trace), trace=trace)


def _make_uncrosser(trace):
    def uncross_all(family, parent_id, member_ids):
        members = {m for m in member_ids if m in family.cycles}
        rounds = 0
        limit = 10 * len(members) + 50
        while True:
            members = {m for m in members if m in family.cycles}
            recs = [
                r
                for r in detect_crossings(family, parent_id, sorted(members))
                if r.nvh
            ]
            if not recs:
                return sorted(members)
            recs.sort(
                key=lambda r: (
                    r.positions[1],
                    r.positions[2],
                    family.cycles[r.left].key,
                )
            )
            members = uncross_pair(family, parent_id, recs[0], members, trace)
            rounds += 1
            if rounds > limit:
                raise BrokenInvariant("crossing cancellation did not converge")

    return uncross_all


class _Candidate:
    __slots__ = ("path", "end_node", "end_pos", "tag")

    def __init__(self, path, end_node, end_pos, tag):
        self.path = path
        self.end_node = end_node
        self.end_pos = end_pos
        self.tag = tag


def _r_suffix_length(family, parent_id, path: PathSeq) -> int:
    """Length of R(path): the maximal suffix inside shortcuts that were
    created before this parent's processing started."""
    cutoff = family.proc_stamp[parent_id]
    total = 0
    for e in reversed(path.edges):
        stamp = family.shortcut_stamp.get(e.id)
        if stamp is None or stamp >= cutoff:
            break
        total += e.length
    return total


def _cost(family, parent_id, cand: _Candidate) -> int:
    l = cand.path.length
    return l + (l - _r_suffix_length(family, parent_id, cand.path))


def _span_of(family, parent, member_id, cache):
    if member_id not in cache:
        kind, span, piece = family.relation_to(parent, family.cycles[member_id])
        cache[member_id] = (kind, span, piece)
    return cache[member_id]


def _nvh_threshold(parent, lo, hi) -> bool:
    span_len = sum(e.length for e in parent.ps.edges[lo:hi])
    return 2 * parent.ps.length >= 3 * span_len


def _cross_node(family, parent, a_id, b_id):
    g = family.graph
    ca, cb = family.cycles[a_id], family.cycles[b_id]
    shared = (set(ca.walk.nodes) & set(cb.walk.nodes)) - set(parent.walk.nodes)
    if not shared:
        return None
    return min(shared, key=g.nodes.index)

def _chain_candidates(family, parent, base_id, base_path, members, cache,
                      lo_bound, hi_bound, first_right):
    """Alternating chain of further not-very-heavy crossings.

    base_path runs from the cross node x along the base cycle toward the
    landing window [lo_bound, hi_bound] on the parent's son path.  Level 1
    collects cycles crossing the base on the ``first_right`` side; levels
    alternate sides after that.  Every candidate must land inside the
    window.
    """
    out = []
    parent_nodes = parent.ps.nodes
    _, base_span, _ = _span_of(family, parent, base_id, cache)
    frontier = [(base_id, base_span, base_path)]
    want_right = first_right
    visited = {base_id}
    for _ in range(len(members) + 1):
        nxt = []
        for cur_id, cur_span, cur_path in frontier:
            for mid in sorted(members, key=lambda m: family.cycles[m].key):
                if mid in visited:
                    continue
                kind, span, piece = _span_of(family, parent, mid, cache)
                if kind != "span":
                    continue
                if not spans_properly_cross(parent, cur_span, span):
                    continue
                a, b = cur_span
                c, d = span
                crosses_right = a < c < b < d
                crosses_left = c < a < d < b
                if want_right and not crosses_right:
                    continue
                if not want_right and not crosses_left:
                    continue
                if not (
                    _nvh_threshold(parent, *cur_span)
                    and _nvh_threshold(parent, *span)
                ):
                    continue
                xc = _cross_node(family, parent, cur_id, mid)
                if xc is None or xc not in cur_path.nodes:
                    continue
                trunk = cur_path.subpath(cur_path.nodes[0], xc)
                if want_right:
                    landing_pos, land_node = c, parent_nodes[c]
                    arm = piece.subpath(xc, piece.nodes[0])
                else:
                    landing_pos, land_node = d, parent_nodes[d]
                    arm = piece.subpath(xc, piece.nodes[-1])
                if not (lo_bound <= landing_pos <= hi_bound):
                    continue
                if set(i.id for i in trunk.edges) & set(i.id for i in arm.edges):
                    continue
                try:
                    path = concat_paths(trunk, arm)
                except ValueError:
                    continue
                visited.add(mid)
                out.append(_Candidate(path, land_node, landing_pos, f"chain:{mid}"))
                nxt.append((mid, span, path))
        if not nxt:
            break
        frontier = nxt
        want_right = not want_right
    return out


def uncross_pair(family, parent_id, rec, members, trace=None):
    """UNCROSS-CYCLES on one not-very-heavy-outer-crossing pair."""
    parent = family.cycles[parent_id]
    g = family.graph
    cache = {}
    left_id, right_id = rec.left, rec.right
    k_pos, g_pos, l_pos, h_pos = rec.positions
    x = rec.x
    _, _, lpath = _span_of(family, parent, left_id, cache)
    _, _, rpath = _span_of(family, parent, right_id, cache)
    # split the two span paths at the cross node
    p_prime = lpath.subpath(x, lpath.nodes[0])  # x -> k
    q_prime = lpath.subpath(x, lpath.nodes[-1])  # x -> l
    p_dprime = rpath.subpath(x, rpath.nodes[-1])  # x -> h
    q_dprime = rpath.subpath(x, rpath.nodes[0])  # x -> g

    others = [m for m in members if m not in (left_id, right_id)]
    cands_left = [_Candidate(q_prime, parent.ps.nodes[l_pos], l_pos, "Q'")]
    cands_left += _chain_candidates(
        family, parent, left_id, q_prime, others, cache, g_pos, l_pos, True
    )
    cands_right = [_Candidate(q_dprime, parent.ps.nodes[g_pos], g_pos, "Q''")]
    cands_right += _chain_candidates(
        family, parent, right_id, q_dprime, others, cache, g_pos, l_pos, False
    )
    if not cands_left or not cands_right:
        raise EmptyCandidate("no uncross candidates")
    best_left = min(cands_left, key=lambda c: _cost(family, parent_id, c))
    best_right = min(cands_right, key=lambda c: _cost(family, parent_id, c))
    cost_left = _cost(family, parent_id, best_left)
    cost_right = _cost(family, parent_id, best_right)
    # tie goes to the right-side rewrite (the pseudo-code's else branch)
    if cost_left < cost_right:
        chosen = best_left
    else:
        chosen = best_right
    sp = shortest_path(g, x, chosen.end_node)
    end_pos = chosen.end_pos

    span_edges = lambda a, b: {e.id for e in parent.ps.edges[a:b]}
    father_left = set(parent.edge_ids) - span_edges(k_pos, end_pos)
    father_right = set(parent.edge_ids) - span_edges(end_pos, h_pos)
    new_left = _compose_cycle(family, [p_prime.edge_ids, sp.edge_ids, father_left],
                              family.cycles[left_id].U)
    new_right = _compose_cycle(family, [p_dprime.edge_ids, sp.edge_ids, father_right],
                               family.cycles[right_id].U)

    sc_left = set(family.sc.get(left_id, ()))
    sc_right = set(family.sc.get(right_id, ()))
    sp_ids = set(sp.edge_ids)
    qp_ids = set(q_prime.edge_ids)
    qd_ids = set(q_dprime.edge_ids)
    if cost_left < cost_right:
        new_sc_right = (sc_right - qd_ids) | sp_ids
        new_sc_left = (sc_left - (qp_ids - sp_ids)) | (sp_ids - qp_ids)
    else:
        new_sc_left = (sc_left - qp_ids) | sp_ids
        new_sc_right = (sc_right - (qd_ids - sp_ids)) | (sp_ids - qd_ids)
    stamp = family._stamp
    for eid in sp_ids:
        family.shortcut_stamp.setdefault(eid, stamp)

    members = set(members)
    members.discard(left_id)
    members.discard(right_id)
    nid_left = family.replace_walk(left_id, new_left)
    family.sc[nid_left] = family.sc.get(nid_left, set()) | new_sc_left
    members.add(nid_left)
    nid_right = family.replace_walk(right_id, new_right)
    family.sc[nid_right] = family.sc.get(nid_right, set()) | new_sc_right
    members.add(nid_right)
    if trace is not None:
        trace.append(
            json.dumps(
                {
                    "parent": parent_id,
                    "left": left_id,
                    "right": right_id,
                    "x": x,
                    "winner": "left" if cost_left < cost_right else "right",
                    "candidate": chosen.tag,
                    "end": chosen.end_node,
                    "sp": sorted(sp.edge_ids),
                    "sc_left": sorted(new_sc_left),
                    "sc_right": sorted(new_sc_right),
                },
                sort_keys=True,
            )
        )
    return members


def _compose_cycle(family, parts, must_serve):
    """Union of edge-id sets with parity cancellation; keeps the root's
    component and checks the served nodes survived."""
    g = family.graph
    count = {}
    for part in parts:
        for eid in part:
            count[eid] = count.get(eid, 0) + 1
    ids = {eid for eid, c in count.items() if c % 2 == 1}
    try:
        walk = CycleWalk.from_edge_ids(g, ids)
        comp_ids = ids
    except NoCycle:
        comp_ids = _component_edges(g, ids, g.root)
        walk = CycleWalk.from_edge_ids(g, comp_ids)
    nodes = set(walk.nodes)
    missing = {v for v in must_serve if v not in nodes}
    if missing or g.root not in nodes:
        raise BrokenInvariant(
            f"rewritten cycle dropped served nodes {sorted(missing)}"
        )
    return comp_ids


def _component_edges(g, ids, start):
    inc = {}
    for i in ids:
        e = g.edge_by_id[i]
        inc.setdefault(e.u, []).append(e)
        inc.setdefault(e.v, []).append(e)
    seen_nodes = {start}
    stack = [start]
    keep = set()
    while stack:
        v = stack.pop()
        for e in inc.get(v, ()):  # noqa: B023
            keep.add(e.id)
            w = e.other(v)
            if w not in seen_nodes:
                seen_nodes.add(w)
                stack.append(w)
    return keep


def nine_bound_report(before_lengths: dict, family: CycleFamily):
    """Per-node l(C_after)/l(C*) with the proven bound of nine asserted.

    before_lengths maps node -> original serving-cycle length.  Returns
    (ratios, max_ratio); raises BoundViolation when any node exceeds nine,
    which would be an implementation bug.
    """
    ratios = {}
    worst = 0.0
    for v, cid in family.node_cycle.items():
        after = family.cycles[cid].length
        orig = before_lengths[v]
        if orig == 0:
            if after > 0:
                raise BoundViolation(f"node {v}: {after} > 9*0")
            ratios[v] = 1.0
            continue
        if after > 9 * orig:
            raise BoundViolation(f"node {v}: {after} > 9*{orig}")
        r = after / orig
        ratios[v] = r
        worst = max(worst, r)
    return ratios, worst
