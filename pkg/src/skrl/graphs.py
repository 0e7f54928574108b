"""Labeled graph families on small vertex sets and the maps Phi and psi.

Graphs are stored as sorted tuples of (min, max) vertex pairs. Exhaustive scans
work on integer edge masks, where bit k marks the k-th pair of [n] in
lexicographic order.
"""

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import DomainError, InvalidArgumentError, ResourceLimitError

CLOSED_GRAPH_CAP = 8
SCAN_CAP = 6


class GraphClass(enum.Enum):
    SIMPLE = "simple"
    SIMPLE_CLOSED = "simple_closed"
    CYCLE = "cycle"
    SELF_AVOIDING_PATH = "self_avoiding_path"
    NONE = "none"


def _pair(u, v):
    u, v = int(u), int(v)
    if u == v:
        raise InvalidArgumentError(f"self-loop at vertex {u}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class LabeledGraph:
    """Simple graph on the label set range(n); vertices are implied by edges."""

    n: int
    edges: tuple

    def __init__(self, n, edges=()):
        canon = tuple(sorted({_pair(u, v) for u, v in edges}))
        if len(canon) != len(tuple(edges)):
            raise InvalidArgumentError("repeated edge in a simple graph")
        for u, v in canon:
            if v >= n:
                raise InvalidArgumentError(f"vertex {v} outside [0, {n})")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", canon)

    def __len__(self):
        return len(self.edges)

    def __contains__(self, edge):
        return _pair(*edge) in self.edges

    @property
    def vertices(self):
        return frozenset(v for e in self.edges for v in e)

    def degrees(self):
        deg = {}
        for u, v in self.edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        return deg

    def mask(self):
        index = edge_index(self.n)
        return sum(1 << index[e] for e in self.edges)

    def vertex_mask(self):
        return sum(1 << v for v in self.vertices)

    def __str__(self):
        # 1-based for display
        return "{" + ", ".join(f"{u + 1}-{v + 1}" for u, v in self.edges) + "}"


@lru_cache(maxsize=None)
def edge_list(n):
    """All pairs of [n] in the order used for edge-mask bits."""
    return tuple(combinations(range(n), 2))


@lru_cache(maxsize=None)
def edge_index(n):
    return {e: k for k, e in enumerate(edge_list(n))}


def graph_from_mask(mask, n):
    pairs = edge_list(n)
    mask = int(mask)
    return LabeledGraph(n, [pairs[k] for k in range(len(pairs)) if mask >> k & 1])


def _connected(edges):
    if not edges:
        return True
    adj = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    start = next(iter(adj))
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(adj)


def classify(graph):
    """Most specific family the graph belongs to.

    The empty graph is simple closed. A cycle is connected with all degrees 2,
    a self-avoiding path is connected with exactly two degree-1 vertices and
    the rest of degree 2.
    """
    deg = graph.degrees()
    values = list(deg.values())
    if all(d % 2 == 0 for d in values):
        if values and all(d == 2 for d in values) and _connected(graph.edges):
            return GraphClass.CYCLE
        return GraphClass.SIMPLE_CLOSED
    if (values.count(1) == 2 and all(d in (1, 2) for d in values)
            and _connected(graph.edges)):
        return GraphClass.SELF_AVOIDING_PATH
    return GraphClass.SIMPLE


def is_closed(graph):
    return classify(graph) in (GraphClass.SIMPLE_CLOSED, GraphClass.CYCLE)


# ---------------------------------------------------------------------------
# closed graphs as edge masks

@lru_cache(maxsize=None)
def edge_vertex_masks(n):
    return np.array([(1 << u) | (1 << v) for u, v in edge_list(n)], dtype=np.int64)


@lru_cache(maxsize=None)
def closed_graph_masks(n):
    """Edge masks of every simple closed graph on [n], the empty graph first.

    Uses the star spanning tree at vertex 0: each edge {u, v} with u, v >= 1
    closes the fundamental cycle 0-u-v-0, and the XOR-span of those cycles is
    the whole cycle space. The result is built by doubling, one basis cycle
    at a time.
    """
    if n > CLOSED_GRAPH_CAP:
        raise ResourceLimitError(
            f"closed-graph enumeration on n={n} exceeds the cap n <= {CLOSED_GRAPH_CAP}")
    index = edge_index(n)
    masks = np.zeros(1, dtype=np.int64)
    for u, v in combinations(range(1, n), 2):
        basis = (1 << index[(u, v)]) | (1 << index[(0, u)]) | (1 << index[(0, v)])
        masks = np.concatenate([masks, masks ^ basis])
    masks.setflags(write=False)
    return masks


def vertex_masks_of(edge_masks, n):
    """Vertex-set masks for an array of edge masks."""
    edge_masks = np.asarray(edge_masks, dtype=np.int64)
    out = np.zeros(edge_masks.shape, dtype=np.int64)
    for k, vm in enumerate(edge_vertex_masks(n)):
        out |= np.where((edge_masks >> k) & 1, vm, 0)
    return out


def popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.int64)).astype(np.int64)


@lru_cache(maxsize=None)
def closed_graph_table(n):
    """(edge masks, vertex masks, edge counts) for all closed graphs on [n]."""
    masks = closed_graph_masks(n)
    vmasks = vertex_masks_of(masks, n)
    counts = popcount(masks)
    for arr in (vmasks, counts):
        arr.setflags(write=False)
    return masks, vmasks, counts


def enumerate_closed_graphs(n, max_edges=None):
    """Yield every simple closed graph on [n] with at most max_edges edges."""
    masks, _, counts = closed_graph_table(n)
    for mask, c in zip(masks, counts):
        if max_edges is None or c <= max_edges:
            yield graph_from_mask(mask, n)


def count_closed_graphs(n):
    return len(closed_graph_masks(n))


# ---------------------------------------------------------------------------
# cycles and self-avoiding paths

def _sap_sequences(i, j, n, max_len, forbidden=frozenset()):
    """Vertex sequences of self-avoiding paths i -> j with at most max_len edges."""
    out = []
    stack = [(i, (i,))]
    while stack:
        v, seq = stack.pop()
        if len(seq) - 1 >= max_len:
            continue
        for w in range(n):
            if w in seq or w in forbidden:
                continue
            if w == j:
                out.append(seq + (j,))
            else:
                stack.append((w, seq + (w,)))
    out.sort(key=lambda s: (len(s), s))
    return out


def _edges_of_sequence(seq, closed=False):
    edges = [_pair(a, b) for a, b in zip(seq, seq[1:])]
    if closed:
        edges.append(_pair(seq[-1], seq[0]))
    return edges


def path_sequences(i, j, n, max_len=None):
    """Vertex sequences of all self-avoiding paths from i to j."""
    if i == j:
        raise InvalidArgumentError("a self-avoiding path needs distinct endpoints")
    if max_len is None:
        max_len = n - 1
    return _sap_sequences(i, j, n, max_len)


def enumerate_saps(i, j, n, max_len):
    """Yield every self-avoiding path between i and j with at most max_len edges."""
    if i == j:
        raise InvalidArgumentError("a self-avoiding path needs distinct endpoints")
    if max_len < 1:
        raise InvalidArgumentError("max_len must be at least 1")
    for seq in _sap_sequences(i, j, n, max_len):
        yield LabeledGraph(n, _edges_of_sequence(seq))


def cycle_sequences(n, max_len=None):
    """Vertex sequences of all cycles on [n], each listed once.

    A cycle is written starting at its smallest vertex, and of the two
    orientations only the one whose second vertex is smaller than its last is
    kept.
    """
    if max_len is None:
        max_len = n
    out = []
    for start in range(n):
        stack = [(start,)]
        while stack:
            seq = stack.pop()
            for w in range(start + 1, n):
                if w in seq:
                    continue
                ext = seq + (w,)
                if len(ext) >= 3 and ext[1] < ext[-1] and len(ext) <= max_len:
                    out.append(ext)
                if len(ext) < max_len:
                    stack.append(ext)
    out.sort(key=lambda s: (len(s), s))
    return out


def enumerate_cycles(n, required_edge=None, max_len=None):
    """Yield every cycle on [n] with at most max_len edges.

    If ``required_edge`` is given only cycles through that edge are produced.
    """
    if max_len is None:
        max_len = n
    if max_len < 3:
        raise InvalidArgumentError("cycles have at least 3 edges")
    req = None if required_edge is None else _pair(*required_edge)
    for seq in cycle_sequences(n, max_len):
        edges = _edges_of_sequence(seq, closed=True)
        if req is None or req in edges:
            yield LabeledGraph(n, edges)


def cycle_count(n, k):
    """Number of cycles with exactly k edges on [n]."""
    if k < 3 or k > n:
        return 0
    return math.comb(n, k) * math.factorial(k - 1) // 2


def sap_count(n, k):
    """Number of self-avoiding paths with exactly k edges between two fixed vertices."""
    if k < 1 or k > n - 1:
        return 0
    return math.factorial(n - 2) // math.factorial(n - k - 1)


@lru_cache(maxsize=None)
def cycle_table(n):
    """(edge masks, vertex masks) of every cycle on [n]."""
    index = edge_index(n)
    emasks, vmasks = [], []
    for seq in cycle_sequences(n):
        emasks.append(sum(1 << index[e] for e in _edges_of_sequence(seq, closed=True)))
        vmasks.append(sum(1 << v for v in seq))
    e = np.array(emasks, dtype=np.int64)
    v = np.array(vmasks, dtype=np.int64)
    e.setflags(write=False)
    v.setflags(write=False)
    return e, v


def loops_through(i, j, n):
    """(edge masks, vertex masks) of the cycles containing edge {i, j}."""
    bit = 1 << edge_index(n)[_pair(i, j)]
    e, v = cycle_table(n)
    keep = (e & bit) != 0
    return e[keep], v[keep]


# ---------------------------------------------------------------------------
# decompositions and the maps Phi, psi

def veblen_decompose(graph):
    """Split a closed graph into edge-disjoint cycles by greedy peeling.

    Walk from any vertex of positive degree along unused edges until a vertex
    repeats; the closed part of the walk is a cycle, which is removed.
    """
    if not is_closed(graph):
        raise InvalidArgumentError("Veblen decomposition needs a graph with all degrees even")
    adj = {}
    for u, v in graph.edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    pieces = []
    while any(adj.values()):
        start = min(v for v, nb in adj.items() if nb)
        walk = [start]
        position = {start: 0}
        while True:
            here = walk[-1]
            prev = walk[-2] if len(walk) > 1 else None
            nxt = min(w for w in adj[here] if w != prev)
            if nxt in position:
                cyc = walk[position[nxt]:] + [nxt]
                break
            position[nxt] = len(walk)
            walk.append(nxt)
        edges = _edges_of_sequence(cyc)
        for u, v in edges:
            adj[u].discard(v)
            adj[v].discard(u)
        pieces.append(LabeledGraph(graph.n, edges))
    return pieces


def phi_compose(gamma, tau):
    """Edge union of a cycle and an edge-disjoint closed graph."""
    if classify(gamma) is not GraphClass.CYCLE:
        raise DomainError("first argument of Phi must be a cycle")
    if not is_closed(tau):
        raise DomainError("second argument of Phi must be a simple closed graph")
    shared = set(gamma.edges) & set(tau.edges)
    if shared:
        raise DomainError(f"Phi needs edge-disjoint arguments, both contain {sorted(shared)}")
    return LabeledGraph(max(gamma.n, tau.n), gamma.edges + tau.edges)


@dataclass(frozen=True)
class PsiSplit:
    psi1: LabeledGraph
    psi2: LabeledGraph


def psi_split(gamma, tau):
    """Separate the overlay of gamma and tau into single and doubled edges."""
    if classify(gamma) is not GraphClass.CYCLE:
        raise InvalidArgumentError("psi is defined for a cycle as first argument")
    if not is_closed(tau):
        raise InvalidArgumentError("psi is defined for a closed graph as second argument")
    n = max(gamma.n, tau.n)
    a, b = set(gamma.edges), set(tau.edges)
    return PsiSplit(LabeledGraph(n, a ^ b), LabeledGraph(n, a & b))


def _check_scan_size(n):
    if n > SCAN_CAP:
        raise ResourceLimitError(f"exhaustive Phi/psi scans are capped at n <= {SCAN_CAP}")


def phi_image_pairs(i, j, n):
    """All (gamma, tau) in S_ij as edge-mask arrays, plus their unions.

    S_ij holds the cycles gamma through {i, j} paired with closed graphs tau
    that meet gamma in at most one vertex.
    """
    loop_e, loop_v = loops_through(i, j, n)
    masks, vmasks, _ = closed_graph_table(n)
    gam, tau = [], []
    for le, lv in zip(loop_e, loop_v):
        ok = popcount(vmasks & lv) <= 1
        sel = masks[ok]
        gam.append(np.full(len(sel), le, dtype=np.int64))
        tau.append(sel)
    if not gam:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    gam = np.concatenate(gam)
    tau = np.concatenate(tau)
    return gam, tau, gam | tau


def check_phi_injectivity(i, j, n):
    """Scan S_ij on [n] for two pairs with the same union.

    Returns:
        (injective, counterexamples) where each counterexample is a list of
        colliding (gamma, tau) pairs as LabeledGraph objects.
    """
    if i == j:
        raise InvalidArgumentError("need distinct vertices")
    _check_scan_size(n)
    gam, tau, union = phi_image_pairs(i, j, n)
    values, inverse, counts = np.unique(union, return_inverse=True, return_counts=True)
    bad = []
    for slot in np.flatnonzero(counts > 1):
        idx = np.flatnonzero(inverse == slot)
        bad.append([(graph_from_mask(gam[k], n), graph_from_mask(tau[k], n)) for k in idx])
    return not bad, bad


def psi_pairs(n):
    """Every (gamma, tau) in cycles x closed graphs on [n] with its psi image.

    Returns arrays (gamma, tau, psi1, psi2) of edge masks.
    """
    _check_scan_size(n)
    loop_e, _ = cycle_table(n)
    masks = closed_graph_masks(n)
    gam = np.repeat(loop_e, len(masks))
    tau = np.tile(masks, len(loop_e))
    return gam, tau, gam ^ tau, gam & tau


def psi_preimage(eta1, eta2, n):
    """All (gamma, tau) with psi(gamma, tau) == (eta1, eta2), by brute force."""
    if set(eta1.edges) & set(eta2.edges):
        raise InvalidArgumentError("eta1 and eta2 must be edge-disjoint")
    gam, tau, p1, p2 = psi_pairs(n)
    hit = (p1 == eta1.mask()) & (p2 == eta2.mask())
    return [(graph_from_mask(a, n), graph_from_mask(b, n))
            for a, b in zip(gam[hit], tau[hit])]


def preimage_bound(eta1):
    """Upper bound (1 + |V|) exp(2(|E| - |V|)) on the psi preimage size."""
    nv = len(eta1.vertices)
    return (1 + nv) * math.exp(2 * (len(eta1.edges) - nv))


def preimage_bound_scan(n):
    """Check the preimage bound for every reachable (eta1, eta2) on [n].

    Returns:
        (all_hold, rows) with one row (eta1_mask, eta2_mask, count, bound) per
        reachable pair.
    """
    _, _, p1, p2 = psi_pairs(n)
    key = np.stack([p1, p2], axis=1)
    uniq, counts = np.unique(key, axis=0, return_counts=True)
    e_cnt = popcount(uniq[:, 0])
    v_cnt = popcount(vertex_masks_of(uniq[:, 0], n))
    bounds = (1 + v_cnt) * np.exp(2.0 * (e_cnt - v_cnt))
    ok = counts <= bounds
    rows = list(zip(uniq[:, 0].tolist(), uniq[:, 1].tolist(), counts.tolist(), bounds.tolist()))
    return bool(ok.all()), rows


def count_a_kl(n, k, l):
    """Number of closed graphs on [n] with k vertices and k + l edges."""
    if l > k * (k - 1) // 2 or k > n:
        return 0
    masks, vmasks, counts = closed_graph_table(n)
    return int(np.count_nonzero((popcount(vmasks) == k) & (counts == k + l)))


def unlabeled_a_kl(k, l):
    """Number of isomorphism classes of closed graphs with k vertices and k + l edges."""
    import networkx as nx

    if l > k * (k - 1) // 2:
        return 0
    masks, vmasks, counts = closed_graph_table(k)
    full = (1 << k) - 1
    sel = masks[(vmasks == full) & (counts == k + l)]
    buckets = {}
    for mask in sel:
        g = nx.Graph(graph_from_mask(mask, k).edges)
        key = nx.weisfeiler_lehman_graph_hash(g)
        reps = buckets.setdefault(key, [])
        if not any(nx.is_isomorphic(g, r) for r in reps):
            reps.append(g)
    return sum(len(r) for r in buckets.values())


def build_t_set(eta1, i, j, n, cutoff):
    """Collect psi_2(gamma o tau) over pairs in S_eta1^{ij} by brute force.

    The pairs are cycles gamma through {i, j} with fewer than ``cutoff`` edges
    and closed graphs tau sharing at least two vertices with gamma, such that
    psi_1(gamma o tau) == eta1.
    """
    if i == j:
        raise InvalidArgumentError("need distinct vertices")
    _check_scan_size(n)
    loop_e, loop_v = loops_through(i, j, n)
    masks, vmasks, _ = closed_graph_table(n)
    target = eta1.mask()
    found = set()
    for le, lv in zip(loop_e, loop_v):
        if not popcount(le) < cutoff:
            continue
        ok = (popcount(vmasks & lv) >= 2) & ((masks ^ le) == target)
        for t in masks[ok]:
            found.add(int(t & le))
    return {graph_from_mask(m, n) for m in found}


def _components(edges):
    adj = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    seen, comps = set(), []
    for start in adj:
        if start in seen:
            continue
        comp, stack = {start}, [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        comps.append([e for e in edges if e[0] in comp])
    return comps


def split_into_paths(psi2, anchors):
    """True if psi2 is a vertex-disjoint union of paths with all endpoints in anchors."""
    for comp in _components(psi2.edges):
        g = LabeledGraph(psi2.n, comp)
        if classify(g) is not GraphClass.SELF_AVOIDING_PATH:
            return False
        ends = [v for v, d in g.degrees().items() if d == 1]
        if not all(v in anchors for v in ends):
            return False
    return True


def psi_structure_violations(n):
    """Exhaustive check of the structure of psi(gamma, tau) on [n].

    For every cycle gamma and closed graph tau:
    psi1 is closed and psi2 equals gamma & tau; either psi2 == gamma (and then
    tau == psi1 | gamma) or psi2 splits into paths ending in V(psi1); a
    nonempty psi2 meeting V(psi1) in at most one vertex is all of gamma; and
    if gamma, tau share two vertices while |E(psi1)| - |V(psi1)| <= 1 then
    psi2 is nonempty.

    Returns:
        list of (gamma, tau, reason) for every failure.
    """
    gam, tau, p1, p2 = psi_pairs(n)
    p1_closed = np.isin(p1, closed_graph_masks(n))
    v_gam = vertex_masks_of(gam, n)
    v_tau = vertex_masks_of(tau, n)
    v_p1 = vertex_masks_of(p1, n)
    v_p2 = vertex_masks_of(p2, n)
    out = []
    for k in range(len(gam)):
        a, b, s1, s2 = int(gam[k]), int(tau[k]), int(p1[k]), int(p2[k])
        if not p1_closed[k]:
            out.append((a, b, "psi1 not closed"))
        if s2 != a & b:
            out.append((a, b, "psi2 differs from the intersection"))
        anchors = {v for v in range(n) if v_p1[k] >> v & 1}
        if s2 == a:
            if b != s1 | a:
                out.append((a, b, "psi2 == gamma but tau != psi1 o gamma"))
        elif not split_into_paths(graph_from_mask(s2, n), anchors):
            out.append((a, b, "psi2 is not a union of paths ending in psi1"))
        shared = bin(int(v_p1[k] & v_p2[k])).count("1")
        if s2 and shared <= 1 and s2 != a:
            out.append((a, b, "small overlap but psi2 != gamma"))
        if bin(int(v_gam[k] & v_tau[k])).count("1") >= 2:
            excess = bin(s1).count("1") - bin(int(v_p1[k])).count("1")
            if excess <= 1 and s2 == 0:
                out.append((a, b, "psi2 empty despite overlap"))
    return out
