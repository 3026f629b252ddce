"""Log map coordinates of trees relative to a base tree.

Coordinates are indexed by the base tree's splits in canonical order (and,
in ``include`` pendant mode, by the taxa's pendant edges after them).  The
distance from the base is preserved exactly: ||log_map(T) - log_map(T*)||
equals the BHV distance between T* and T.  Negative entries mark base
splits that are absent from the target.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geodesic import bhv_geodesic, check_pendant_mode, is_cone_path, point_on_geodesic
from .tree_core import (
    PhyloTree,
    TreeError,
    check_same_taxa,
    compatible,
    is_internal,
    split_key,
    split_label,
    split_support,
)


class BoundaryError(TreeError):
    """The base tree lies on an orthant boundary relevant to the target."""


@dataclass(frozen=True)
class LogMapCoordinates:
    ordering: tuple[int, ...]
    vector: np.ndarray
    target_name: str | None
    case: int
    cone_path: bool
    pendant_mode: str
    distance: float

    @property
    def negative_count(self) -> int:
        return int(np.sum(self.vector[: len(self.ordering)] < 0))


def base_ordering(base: PhyloTree) -> tuple[int, ...]:
    """Canonical split order of a base tree; the base must carry all n - 3 splits."""
    if len(base.internal) != base.dim:
        raise BoundaryError(
            f"base tree has {len(base.internal)} of {base.dim} splits; it lies on a "
            "codimension boundary. Resolve it first (resolve_base) or choose another base."
        )
    return tuple(base.internal)


def coordinate_labels(base: PhyloTree, pendant_mode: str = "exclude") -> list[str]:
    labels = [split_label(s, base.taxa) for s in base_ordering(base)]
    if pendant_mode == "include":
        labels += [f"pendant:{lab}" for lab in base.taxa.labels]
    return labels


def _coords(tree: PhyloTree, ordering, pendant_mode) -> np.ndarray:
    vec = tree.length_vector(ordering)
    if pendant_mode == "include":
        vec = np.concatenate([vec, tree.pendant])
    return vec


def _children(clusters: list[int], n: int) -> dict[int, list[int]]:
    """Children of every cluster (0 is the root) in the hierarchy rooted at
    taxon 0's neighbour; leaves 1..n-1 appear as singleton clusters."""
    ordered = sorted(clusters, key=lambda s: (s.bit_count(), split_key(s)))
    kids: dict[int, list[int]] = {0: [1]}  # taxon 0 hangs off the root
    for c in ordered:
        kids[c] = []
    for c in ordered + [1 << i for i in range(1, n)]:
        parent = next((d for d in ordered if d != c and (c & ~d) == 0), 0)
        kids[parent].append(c)
    for v in kids.values():
        v.sort(key=lambda x: x & -x)
    return kids


def resolve_base(base: PhyloTree, eps: float = 1e-8, trees=None) -> PhyloTree:
    """Move a base tree off codimension boundaries.

    Zero-length splits get length ``eps``.  If splits are missing, compatible
    splits are added at length ``eps``: first those most supported among
    ``trees`` (ties broken by canonical order), then, for any remaining
    polytomy, the pair of children with the smallest taxon indices.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = base.n_taxa
    internal = {s: (v if v > 0 else eps) for s, v in base.internal.items()}
    if trees is not None and len(internal) < base.dim:
        trees = list(getattr(trees, "trees", trees))
        counts: dict[int, int] = {}
        for t in trees:
            for s in t.topology():
                counts[s] = counts.get(s, 0) + 1
        for s in sorted(counts, key=lambda s: (-counts[s], split_key(s))):
            if len(internal) >= base.dim:
                break
            if s not in internal and all(compatible(s, x) for x in internal):
                internal[s] = eps
    while len(internal) < base.dim:
        kids = _children(list(internal), n)
        for parent, ch in sorted(kids.items(), key=lambda kv: split_key(kv[0])):
            limit = 4 if parent == 0 else 3
            if len(ch) >= limit:
                pool = [c for c in ch if c != 1] if parent == 0 else ch
                new = pool[0] | pool[1]
                if is_internal(new, n):
                    internal[new] = eps
                    break
        else:  # pragma: no cover - a polytomy always exists while splits are missing
            raise BoundaryError("could not resolve base tree")
    return PhyloTree(base.taxa, internal, base.pendant)


def log_map(
    base: PhyloTree,
    target: PhyloTree,
    pendant_mode: str = "exclude",
    name: str | None = None,
) -> LogMapCoordinates:
    """Coordinates of ``target`` in the log map chart at ``base``.

    Case 1: target equal to base, the base lengths.  Case 2: same topology,
    the target's lengths.  Case 3: one conflicting split each way, shared
    lengths plus minus the target's conflicting length at the missing base
    split.  Case 4: start at the base coordinates and travel the geodesic
    distance along the unit direction toward the first bend of the geodesic.

    Raises
    ------
    BoundaryError
        When a zero-length base split conflicts with the target, or the base
        does not carry all n - 3 splits.
    """
    check_same_taxa(base, target)
    check_pendant_mode(pendant_mode)
    ordering = base_ordering(base)
    for s, v in base.internal.items():
        if v == 0 and any(not compatible(s, f) for f in target.topology()):
            raise BoundaryError(
                f"zero-length base split {split_label(s, base.taxa)} conflicts with the "
                "target; use resolve_base to pick a chart explicitly"
            )
    base_vec = _coords(base, ordering, pendant_mode)
    in_base = set(ordering)
    foreign = [s for s in target.topology() if s not in in_base]

    if not foreign:
        vec = _coords(target, ordering, pendant_mode)
        if np.array_equal(vec, base_vec):
            return LogMapCoordinates(ordering, base_vec.copy(), name, 1, False, pendant_mode, 0.0)
        dist = float(np.linalg.norm(vec - base_vec))
        return LogMapCoordinates(ordering, vec, name, 2, False, pendant_mode, dist)

    path = bhv_geodesic(base, target, pendant_mode)
    n_a, n_b = path.exclusive_counts
    cone = is_cone_path(path)
    if n_a == 1 and n_b == 1:
        (a_edges, b_edges), = path.support
        (a_split,) = a_edges
        (b_len,) = b_edges.values()
        vec = _coords(target, ordering, pendant_mode)
        vec[ordering.index(a_split)] = -b_len
        return LogMapCoordinates(ordering, vec, name, 3, cone, pendant_mode, path.distance)

    a1, b1 = path.support[0]
    na = math.sqrt(sum(v * v for v in a1.values()))
    nb = math.sqrt(sum(v * v for v in b1.values()))
    bend = point_on_geodesic(path, na / (na + nb))
    direction = _coords(bend, ordering, pendant_mode) - base_vec
    norm = float(np.linalg.norm(direction))
    if norm == 0:
        raise BoundaryError("first bend of the geodesic coincides with the base tree")
    vec = base_vec + path.distance * direction / norm
    return LogMapCoordinates(ordering, vec, name, 4, cone, pendant_mode, path.distance)


@dataclass
class LogMapBatch:
    """Log maps of a collection in one shared chart."""

    base: PhyloTree
    ordering: tuple[int, ...]
    labels: list[str]
    pendant_mode: str
    matrix: np.ndarray
    names: list[str]
    cases: list[int]
    cone_path: list[bool]
    distances: np.ndarray
    errors: dict[int, str] = field(default_factory=dict)
    trees: tuple = ()

    @property
    def base_vector(self) -> np.ndarray:
        return _coords(self.base, self.ordering, self.pendant_mode)

    @property
    def negative_counts(self) -> list[int]:
        m = len(self.ordering)
        return [int(np.sum(row[:m] < 0)) for row in self.matrix]

    def cone_path_fraction(self) -> float:
        ok = [c for i, c in enumerate(self.cone_path) if i not in self.errors]
        return sum(ok) / len(ok) if ok else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("name," + ",".join(_csv_field(x) for x in self.labels) + "\n")
        for name, row in zip(self.names, self.matrix):
            buf.write(_csv_field(name) + "," + ",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    def diagnostics_csv(self) -> str:
        buf = io.StringIO()
        buf.write("name,case,cone_path,negative_coordinates,distance,error\n")
        negs = self.negative_counts
        for i, name in enumerate(self.names):
            err = self.errors.get(i, "")
            buf.write(
                f"{_csv_field(name)},{self.cases[i]},{int(self.cone_path[i])},{negs[i]},"
                f"{float(self.distances[i])!r},{_csv_field(err)}\n"
            )
        return buf.getvalue()


def _csv_field(text: str) -> str:
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def log_map_batch(
    base: PhyloTree,
    trees,
    pendant_mode: str = "exclude",
    names: Sequence[str] | None = None,
) -> LogMapBatch:
    """Log map every tree at ``base``; per-tree failures are recorded, not raised."""
    if names is None:
        names = getattr(trees, "names", None)
    trees = tuple(getattr(trees, "trees", trees))
    if names is None:
        names = [f"tree_{i + 1}" for i in range(len(trees))]
    ordering = base_ordering(base)
    labels = coordinate_labels(base, pendant_mode)
    width = len(labels)
    matrix = np.full((len(trees), width), np.nan)
    cases, cones, dists, errors = [], [], np.full(len(trees), np.nan), {}
    for i, t in enumerate(trees):
        try:
            lm = log_map(base, t, pendant_mode, names[i])
        except TreeError as exc:
            errors[i] = str(exc)
            cases.append(0)
            cones.append(False)
            continue
        matrix[i] = lm.vector
        cases.append(lm.case)
        cones.append(lm.cone_path)
        dists[i] = lm.distance
    return LogMapBatch(
        base=base,
        ordering=ordering,
        labels=labels,
        pendant_mode=pendant_mode,
        matrix=matrix,
        names=list(names),
        cases=cases,
        cone_path=cones,
        distances=dists,
        errors=errors,
        trees=trees,
    )


def coordinate_report(batch: LogMapBatch, split: int) -> tuple[np.ndarray, float]:
    """Signed log-map coordinate of every tree at one base split, and the
    fraction of trees carrying that split."""
    if split not in batch.ordering:
        raise TreeError("split is not on the base tree")
    column = batch.matrix[:, batch.ordering.index(split)].copy()
    return column, split_support(batch.trees, split)
