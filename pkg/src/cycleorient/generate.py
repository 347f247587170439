"""Instance generation: random planar models and named figure instances.

All models are 2-edge-connected and planar by construction and fully
deterministic per seed.  Node 0 is the root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GenerationFailed
from .graph import CycleWalk, WeightedGraph, find_bridges, validate_graph

MODELS = ("delaunay", "grid-with-deletions", "wheel", "paper-figure")


@dataclass
class GenSpec:
    model: str = "delaunay"
    nodes: int = 12
    seed: int = 0
    lengths: str = "uniform"  # 'unit' | 'uniform'
    max_length: int = 9
    figure: str = "deffig"


def generate(spec: GenSpec) -> WeightedGraph:
    if spec.model == "paper-figure":
        return figure_instance(spec.figure)
    if spec.nodes < 3:
        raise GenerationFailed("need at least three nodes")
    for attempt in range(10):
        seed = spec.seed + 7919 * attempt
        try:
            if spec.model == "delaunay":
                g = _delaunay(spec, seed)
            elif spec.model == "grid-with-deletions":
                g = _grid(spec, seed)
            elif spec.model == "wheel":
                g = _wheel(spec, seed)
            else:
                raise GenerationFailed(f"unknown model {spec.model!r}")
        except GenerationFailed:
            continue
        if validate_graph(g).ok:
            return g
    raise GenerationFailed(f"no valid instance after 10 tries (seed {spec.seed})")


def _lengths(spec, rng, count):
    if spec.lengths == "unit":
        return [1] * count
    return [int(x) for x in rng.randint(1, spec.max_length + 1, size=count)]


def _delaunay(spec, seed):
    from scipy.spatial import Delaunay, QhullError

    rng = np.random.RandomState(seed)
    pts = rng.rand(spec.nodes, 2)
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise GenerationFailed(str(exc)) from None
    pairs = set()
    for simplex in tri.simplices:
        for i in range(3):
            a, b = sorted((simplex[i], simplex[(i + 1) % 3]))
            pairs.add((a, b))
    pairs = sorted(pairs)
    lens = _lengths(spec, rng, len(pairs))
    nodes = [str(i) for i in range(spec.nodes)]
    edges = [(k, str(a), str(b), lens[k]) for k, (a, b) in enumerate(pairs)]
    return WeightedGraph(nodes, edges, "0")


def _grid(spec, seed):
    rng = np.random.RandomState(seed)
    side = max(2, int(round(spec.nodes**0.5)))
    rows = side
    cols = max(2, (spec.nodes + side - 1) // side)
    name = lambda r, c: str(r * cols + c)
    pairs = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                pairs.append((name(r, c), name(r, c + 1)))
            if r + 1 < rows:
                pairs.append((name(r, c), name(r + 1, c)))
    nodes = [name(r, c) for r in range(rows) for c in range(cols)]
    lens = _lengths(spec, rng, len(pairs))
    edges = [(k, a, b, lens[k]) for k, (a, b) in enumerate(pairs)]
    g = WeightedGraph(nodes, edges, "0")
    # delete random edges while staying bridgeless
    order = rng.permutation(len(edges))
    keep = {e.id for e in g.edges}
    removed = 0
    budget = len(edges) // 4
    for k in order:
        if removed >= budget:
            break
        trial = keep - {int(k)}
        sub = WeightedGraph(
            nodes, [e for e in g.edges if e.id in trial], "0"
        )
        bridges, connected = find_bridges(sub)
        if connected and not bridges:
            keep = trial
            removed += 1
    final = sorted(keep)
    remap = {old: i for i, old in enumerate(final)}
    edges2 = [
        (remap[e.id], e.u, e.v, e.length) for e in g.edges if e.id in keep
    ]
    return WeightedGraph(nodes, edges2, "0")


def _wheel(spec, seed):
    rng = np.random.RandomState(seed)
    n = spec.nodes
    rim = n - 1
    nodes = [str(i) for i in range(n)]
    pairs = []
    for i in range(1, n):
        j = 1 + (i % rim)
        pairs.append((str(i), str(j)))
    for i in range(1, n):
        pairs.append(("0", str(i)))
    lens = _lengths(spec, rng, len(pairs))
    edges = [(k, a, b, lens[k]) for k, (a, b) in enumerate(pairs)]
    return WeightedGraph(nodes, edges, "0")


# -- figure instances -----------------------------------------------------------

# Cycle node strings and printed lengths; edges absent from the length map
# default to the figure's stated fallback.

_FIGURES = {
    "lcafig": {
        "cycles": ["zabcdz", "zaefghbcdz", "zaejfghbcdz", "zaefgkhbcdz", "zabcidz"],
        "lengths": {},
        "default": 1,
        "denominator": 1,
    },
    "deffig": {
        "cycles": [
            "zaehnz",
            "zabehnz",
            "zabcfihnz",
            "zabcdgfihnz",
            "zabcfgjihnz",
            "zabcdkjihnz",
            "zaehilonz",
            "zaehilmronz",
            "zaehijmronz",
            "zaehijkronz",
        ],
        # printed: cf=fi=il=lo=fg=1, gj=jm=dg=dk=3, mr=2, lm=5, kr=1.5, rest 0
        "lengths": {
            "cf": 2,
            "fi": 2,
            "il": 2,
            "lo": 2,
            "fg": 2,
            "gj": 6,
            "jm": 6,
            "dg": 6,
            "dk": 6,
            "mr": 4,
            "lm": 10,
            "kr": 3,
        },
        "default": 0,
        "denominator": 2,
    },
    "inncrossfig": {
        "cycles": ["zkglhz", "zkxlhz", "zkgxhz", "zkxhz"],
        "lengths": {},
        "default": 1,
        "denominator": 1,
    },
    "crfig": {
        "cycles": ["zkglhz", "zkpxlhz", "zkgxqhz", "zkpxglhz"],
        "lengths": {
            "kz": 3,
            "hz": 3,
            "gk": 4,
            "gl": 8,
            "hl": 4,
            "kp": 3,
            "px": 3,
            "lx": 8,
            "gx": 1,
            "qx": 7,
            "hq": 7,
        },
        "default": 1,
        "denominator": 1,
    },
    "bigexfig": {
        "cycles": [
            "zabcdefghiz",
            "zajbcdefghiz",
            "zabjklmncdefghiz",
            "zabjkolmncdefghiz",
            "zabjklmpncdefghiz",
            "zabcdqviz",
            "zabcdqvuhiz",
            "zabcdqrefghiz",
            "zabcdersfghiz",
            "zabcdefgtuhiz",
            "zabjklopmncdefghiz",
            "zabcdefstghiz",
        ],
        "lengths": {},
        "default": 1,
        "denominator": 1,
    },
    "intervalfig": {
        # nine brothers in three blocks: (C1..C4) uncontained,
        # (C5,C6,C7) inside C', (C8,C9) inside C''
        "cycles": [
            "zabcdefghijklmz",  # C0
            "zabBcdefghijklmz",  # C1 over [b,c]
            "zabcCdefghijklmz",  # C2 over [c,d]
            "zabcdDefghijklmz",  # C3 over [d,e]
            "zabcdeEfghijklmz",  # C4 over [e,f]
            "zabcdefgPQjklmz",  # C' over [g,j]
            "zabcdefgShijklmz",  # C5 over [g,h]
            "zabcdefghTijklmz",  # C6 over [h,i]
            "zabcdefghiUjklmz",  # C7 over [i,j]
            "zabcdefghijkVWmz",  # C'' over [k,m]
            "zabcdefghijkXlmz",  # C8 over [k,l]
            "zabcdefghijklYmz",  # C9 over [l,m]
        ],
        "lengths": {"PQ": 2},
        "default": 1,
        "denominator": 1,
    },
}


def figure_names():
    return sorted(_FIGURES)


def figure_instance(name: str) -> WeightedGraph:
    try:
        fig = _FIGURES[name]
    except KeyError:
        raise GenerationFailed(f"unknown figure {name!r}") from None
    g, _ = graph_from_cycles(
        fig["cycles"], fig["lengths"], fig["default"], fig["denominator"]
    )
    return g


def figure_cycles(name: str):
    """The figure's graph together with its cycle walks, in listed order."""
    fig = _FIGURES[name]
    return graph_from_cycles(
        fig["cycles"], fig["lengths"], fig["default"], fig["denominator"]
    )


def graph_from_cycles(cycle_strings, lengths=None, default=1, denominator=1):
    """Build a graph from single-character cycle strings.

    Upper-case letters denote detour copies: 'B' is a fresh node 'B'
    distinct from 'b'.  Edge lengths come from lengths keyed by the
    sorted endpoint pair, else default.
    """
    lengths = lengths or {}
    edge_map = {}
    nodes = []
    for s in cycle_strings:
        for ch in s:
            if ch not in nodes:
                nodes.append(ch)
        for a, b in zip(s, s[1:]):
            key = frozenset((a, b))
            if key not in edge_map:
                edge_map[key] = len(edge_map)
    edges = []
    for key, eid in edge_map.items():
        a, b = sorted(key)
        edges.append((eid, a, b, lengths.get(a + b, lengths.get(b + a, default))))
    g = WeightedGraph(nodes, edges, "z", denominator)
    walks = []
    for s in cycle_strings:
        ids = [edge_map[frozenset((a, b))] for a, b in zip(s, s[1:])]
        walks.append(CycleWalk.from_edge_ids(g, ids))
    return g, walks
