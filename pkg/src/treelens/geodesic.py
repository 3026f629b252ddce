"""Geodesics and distances in BHV tree space.

The geodesic between two trees is built from the cone path (one support pair
holding every exclusive edge) by repeatedly splitting support pairs.  A pair
(A, B) can be split into (C1, C2), (D1, D2) with D1 compatible with C2 and a
strictly better ratio order exactly when the bipartite incompatibility graph
between A and B has a vertex cover of weight below 1, with weights
|e|^2 / ||A||^2 on the A side and |f|^2 / ||B||^2 on the B side.  The minimum
weight cover comes from a max-flow / min-cut computation.

Every public geodesic computation increments a process-wide counter so that
commands can report how many geodesics they needed.
"""

from __future__ import annotations

import math
import os
import threading
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tree_core import PhyloTree, check_same_taxa, compatible, split_key

PENDANT_MODES = ("exclude", "include")

# pairs with min cover weight within this of 1 are left unsplit
_COVER_EPS = 1e-12


class GeodesicCounter:
    """Monotone, lock-protected count of geodesic computations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value = 0

    def add(self, k: int = 1) -> None:
        with self._lock:
            self._value += k

    @property
    def value(self) -> int:
        with self._lock:
            return self._value


counter = GeodesicCounter()


def geodesic_calls() -> int:
    """Total geodesics computed by this process so far."""
    return counter.value


class CallDelta:
    calls: int = 0


@contextmanager
def count_geodesics():
    """Context manager measuring the counter delta around a block.

    >>> with count_geodesics() as box:
    ...     pass
    >>> box.calls
    0
    """
    box = CallDelta()
    start = counter.value
    try:
        yield box
    finally:
        box.calls = counter.value - start


def check_pendant_mode(mode: str) -> str:
    if mode not in PENDANT_MODES:
        raise ValueError(f"pendant_mode must be one of {PENDANT_MODES}, got {mode!r}")
    return mode


@dataclass(frozen=True)
class GeodesicPath:
    """A BHV geodesic from ``t1`` to ``t2``.

    Attributes
    ----------
    common : list of (split, length_in_t1, length_in_t2)
        Splits shared by both trees, or present in one tree and compatible
        with every split of the other (partner length 0).
    support : list of (dict, dict)
        Support pairs (A_i, B_i) mapping exclusive splits of t1 / t2 to their
        lengths, in order of nondecreasing ||A_i|| / ||B_i||.
    pendant_delta : ndarray
        t2 pendant lengths minus t1 pendant lengths.
    pendant_mode : str
        Whether ``distance`` includes the pendant terms.
    distance : float
    """

    t1: PhyloTree
    t2: PhyloTree
    common: list
    support: list
    pendant_delta: np.ndarray
    pendant_mode: str
    distance: float

    @property
    def ratios(self) -> list[float]:
        return [_norm(a) / _norm(b) for a, b in self.support]

    @property
    def exclusive_counts(self) -> tuple[int, int]:
        return (sum(len(a) for a, _ in self.support), sum(len(b) for _, b in self.support))


def _norm(edges: dict) -> float:
    return math.sqrt(math.fsum(v * v for v in edges.values()))


# ---------------------------------------------------------------------------
# max flow / minimum weight vertex cover


def _min_weight_cover(wa: list[float], wb: list[float], edges: list[tuple[int, int]]):
    """Minimum weight vertex cover of a bipartite graph by Edmonds-Karp.

    Returns (weight, cover_a, cover_b) with index sets into ``wa`` / ``wb``.
    Node numbering: 0 source, 1..p the A side, p+1..p+q the B side, p+q+1 sink.
    """
    p, q = len(wa), len(wb)
    n = p + q + 2
    sink = n - 1
    cap = [[0.0] * n for _ in range(n)]
    adj: list[list[int]] = [[] for _ in range(n)]

    def link(u, v, c):
        cap[u][v] += c
        adj[u].append(v)
        adj[v].append(u)

    for i, w in enumerate(wa):
        link(0, 1 + i, w)
    for j, w in enumerate(wb):
        link(1 + p + j, sink, w)
    for i, j in edges:
        link(1 + i, 1 + p + j, math.inf)
    for lst in adj:
        lst.sort()

    eps = 1e-15
    while True:
        prev = [-1] * n
        prev[0] = 0
        dq = deque([0])
        while dq and prev[sink] < 0:
            u = dq.popleft()
            for v in adj[u]:
                if prev[v] < 0 and cap[u][v] > eps:
                    prev[v] = u
                    dq.append(v)
        if prev[sink] < 0:
            break
        flow = math.inf
        v = sink
        while v != 0:
            u = prev[v]
            flow = min(flow, cap[u][v])
            v = u
        v = sink
        while v != 0:
            u = prev[v]
            cap[u][v] -= flow
            cap[v][u] += flow
            v = u

    # source side of the final residual cut
    reach = [False] * n
    reach[0] = True
    dq = deque([0])
    while dq:
        u = dq.popleft()
        for v in adj[u]:
            if not reach[v] and cap[u][v] > eps:
                reach[v] = True
                dq.append(v)
    cover_a = [i for i in range(p) if not reach[1 + i]]
    cover_b = [j for j in range(q) if reach[1 + p + j]]
    weight = sum(wa[i] for i in cover_a) + sum(wb[j] for j in cover_b)
    return weight, cover_a, cover_b


def _try_split(a_edges: dict, b_edges: dict):
    """Split one support pair if its extension problem has a solution."""
    a_keys = list(a_edges)
    b_keys = list(b_edges)
    na2 = sum(v * v for v in a_edges.values())
    nb2 = sum(v * v for v in b_edges.values())
    wa = [a_edges[k] ** 2 / na2 for k in a_keys]
    wb = [b_edges[k] ** 2 / nb2 for k in b_keys]
    edges = [
        (i, j)
        for i, a in enumerate(a_keys)
        for j, b in enumerate(b_keys)
        if not compatible(a, b)
    ]
    weight, cover_a, cover_b = _min_weight_cover(wa, wb, edges)
    if weight >= 1.0 - _COVER_EPS:
        return None
    c1 = {a_keys[i]: a_edges[a_keys[i]] for i in cover_a}
    d1 = {k: v for k, v in a_edges.items() if k not in c1}
    d2 = {b_keys[j]: b_edges[b_keys[j]] for j in cover_b}
    c2 = {k: v for k, v in b_edges.items() if k not in d2}
    return [(c1, c2), (d1, d2)]


def _merge_unordered(support: list) -> list:
    # Safety net: merge neighbours whose ratios are out of order.  The
    # vertex-cover refinement preserves the order, so this is a no-op in
    # practice.
    out = list(support)
    i = 0
    while i + 1 < len(out):
        (a1, b1), (a2, b2) = out[i], out[i + 1]
        if _norm(a1) * _norm(b2) > _norm(a2) * _norm(b1) * (1 + 1e-12):
            out[i : i + 2] = [({**a1, **a2}, {**b1, **b2})]
            i = max(i - 1, 0)
        else:
            i += 1
    return out


def _support_sequence(a_edges: dict, b_edges: dict) -> list:
    if not a_edges:
        return []
    seq = [(a_edges, b_edges)]
    changed = True
    while changed:
        changed = False
        nxt = []
        for a, b in seq:
            parts = _try_split(a, b) if len(a) > 1 or len(b) > 1 else None
            if parts is None:
                nxt.append((a, b))
            else:
                nxt.extend(parts)
                changed = True
        seq = nxt
    return _merge_unordered(seq)


def _classify(t1: PhyloTree, t2: PhyloTree):
    e1 = {s: v for s, v in t1.internal.items() if v > 0}
    e2 = {s: v for s, v in t2.internal.items() if v > 0}
    common, a_edges, b_edges = [], {}, {}
    for s in sorted(set(e1) | set(e2), key=split_key):
        if s in e1 and s in e2:
            common.append((s, e1[s], e2[s]))
        elif s in e1:
            if all(compatible(s, f) for f in e2):
                common.append((s, e1[s], 0.0))
            else:
                a_edges[s] = e1[s]
        else:
            if all(compatible(s, e) for e in e1):
                common.append((s, 0.0, e2[s]))
            else:
                b_edges[s] = e2[s]
    return common, a_edges, b_edges


def _order_key(t: PhyloTree):
    return tuple(t.internal.items()), tuple(t.pendant.tolist())


def _geodesic(t1: PhyloTree, t2: PhyloTree, pendant_mode: str) -> GeodesicPath:
    # Always solve in one orientation so d(a, b) and d(b, a) are the same float.
    if _order_key(t2) < _order_key(t1):
        rev = _geodesic_oriented(t2, t1, pendant_mode)
        return GeodesicPath(
            t1,
            t2,
            [(s, l2, l1) for s, l1, l2 in rev.common],
            [(b, a) for a, b in reversed(rev.support)],
            -rev.pendant_delta,
            pendant_mode,
            rev.distance,
        )
    return _geodesic_oriented(t1, t2, pendant_mode)


def _geodesic_oriented(t1: PhyloTree, t2: PhyloTree, pendant_mode: str) -> GeodesicPath:
    common, a_edges, b_edges = _classify(t1, t2)
    support = _support_sequence(a_edges, b_edges)
    terms = [(_norm(a) + _norm(b)) ** 2 for a, b in support]
    terms += [(l1 - l2) ** 2 for _, l1, l2 in common]
    delta = t2.pendant - t1.pendant
    if pendant_mode == "include":
        terms += (delta * delta).tolist()
    return GeodesicPath(t1, t2, common, support, delta, pendant_mode, math.sqrt(math.fsum(terms)))


# ---------------------------------------------------------------------------
# public API


def bhv_geodesic(t1: PhyloTree, t2: PhyloTree, pendant_mode: str = "exclude") -> GeodesicPath:
    """Geodesic between two trees on the same taxa.

    Zero-length splits are treated as absent.  Splits of one tree that are
    compatible with every split of the other become common edges with
    partner length 0.
    """
    check_same_taxa(t1, t2)
    check_pendant_mode(pendant_mode)
    counter.add()
    return _geodesic(t1, t2, pendant_mode)


def bhv_distance(t1: PhyloTree, t2: PhyloTree, pendant_mode: str = "exclude") -> float:
    return bhv_geodesic(t1, t2, pendant_mode).distance


def point_on_geodesic(path: GeodesicPath, s: float) -> PhyloTree:
    """Tree at fraction ``s`` of the arc length from ``path.t1`` to ``path.t2``.

    On the leg where the support pairs up to i have been traversed, A-side
    edges of later pairs shrink as (||A_j|| - s (||A_j|| + ||B_j||)) / ||A_j||
    times their original length, and B-side edges of earlier pairs grow
    symmetrically.  Common edges and pendants interpolate linearly.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return path.t1
    if s == 1.0:
        return path.t2
    internal = {split: l1 + s * (l2 - l1) for split, l1, l2 in path.common}
    for a, b in path.support:
        na, nb = _norm(a), _norm(b)
        fa = (na - s * (na + nb)) / na
        if fa > 0:
            for e, v in a.items():
                internal[e] = fa * v
        fb = (s * (na + nb) - na) / nb
        if fb > 0:
            for f, v in b.items():
                internal[f] = fb * v
    pendant = path.t1.pendant + s * (path.t2.pendant - path.t1.pendant)
    return PhyloTree(path.t1.taxa, internal, pendant, validate=False)


def is_cone_path(path: GeodesicPath) -> bool:
    """True when the geodesic passes through the origin of the exclusive-edge
    subspace, i.e. its support is a single pair."""
    return len(path.support) == 1


def cone_path_length(path: GeodesicPath) -> float:
    """Length of the cone path, an upper bound on ``path.distance``."""
    a = math.sqrt(sum(_norm(x) ** 2 for x, _ in path.support))
    b = math.sqrt(sum(_norm(y) ** 2 for _, y in path.support))
    sq = (a + b) ** 2 + sum((l1 - l2) ** 2 for _, l1, l2 in path.common)
    if path.pendant_mode == "include":
        sq += float(path.pendant_delta @ path.pendant_delta)
    return math.sqrt(sq)


def _rows(args):
    trees, rows, pendant_mode = args
    out = []
    for i in rows:
        out.append([_geodesic(trees[i], trees[j], pendant_mode).distance for j in range(i + 1, len(trees))])
    return rows, out


def default_workers() -> int:
    env = os.environ.get("TREELENS_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def distance_matrix(
    trees: Sequence[PhyloTree],
    pendant_mode: str = "exclude",
    workers: int = 1,
) -> tuple[np.ndarray, int]:
    """All pairwise BHV distances and the number of geodesics computed.

    With ``workers > 1`` rows are spread over worker processes; the counter
    is incremented by the parent so it stays exact.
    """
    trees = list(getattr(trees, "trees", trees))
    check_pendant_mode(pendant_mode)
    n = len(trees)
    if n < 2:
        raise ValueError("distance_matrix needs at least 2 trees")
    for t in trees[1:]:
        check_same_taxa(trees[0], t)
    D = np.zeros((n, n))
    calls = n * (n - 1) // 2
    if workers > 1 and n > 8:
        chunks = [list(range(k, n - 1, workers)) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rows, out in pool.map(_rows, [(trees, c, pendant_mode) for c in chunks if c]):
                for i, vals in zip(rows, out):
                    D[i, i + 1 :] = vals
    else:
        for i in range(n - 1):
            for j in range(i + 1, n):
                D[i, j] = _geodesic(trees[i], trees[j], pendant_mode).distance
    D = D + D.T
    counter.add(calls)
    return D, calls
