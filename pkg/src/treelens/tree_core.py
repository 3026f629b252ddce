"""Split algebra and topology operations on unrooted phylogenetic trees.

A split is stored as a plain ``int`` bit mask over taxon indices, oriented so
that the bit of taxon 0 is clear.  With that orientation two splits are
compatible exactly when their masks are disjoint or nested, which keeps every
set operation here a couple of integer instructions.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np


class TreeError(ValueError):
    """Raised for invalid trees or mismatched taxon sets."""


class TaxonTable:
    """Ordered, immutable set of taxon labels shared by a tree collection."""

    __slots__ = ("labels", "index")

    def __init__(self, labels: Iterable[str]):
        labels = tuple(labels)
        for lab in labels:
            if not isinstance(lab, str) or not lab:
                raise TreeError(f"taxon labels must be nonempty strings, got {lab!r}")
        if len(set(labels)) != len(labels):
            seen = set()
            dupes = sorted({x for x in labels if x in seen or seen.add(x)})
            raise TreeError(f"duplicate taxon label(s): {', '.join(dupes)}")
        self.labels = labels
        self.index = {lab: i for i, lab in enumerate(labels)}

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, TaxonTable) and self.labels == other.labels

    def __hash__(self) -> int:
        return hash(self.labels)

    def __repr__(self) -> str:
        return f"TaxonTable({list(self.labels)!r})"

    @property
    def full_mask(self) -> int:
        return (1 << len(self.labels)) - 1

    def mask_of(self, labels: Iterable[str]) -> int:
        """Canonical split mask for the bipartition with ``labels`` on one side."""
        mask = 0
        for lab in labels:
            try:
                mask |= 1 << self.index[lab]
            except KeyError:
                raise TreeError(f"unknown taxon {lab!r}") from None
        return canonical(mask, len(self))


# ---------------------------------------------------------------------------
# split algebra


def canonical(mask: int, n_taxa: int) -> int:
    """Orient ``mask`` so that taxon 0 is on the cleared side."""
    if mask & 1:
        return mask ^ ((1 << n_taxa) - 1)
    return mask


def is_internal(mask: int, n_taxa: int) -> bool:
    size = mask.bit_count()
    return 2 <= size <= n_taxa - 2


def compatible(a: int, b: int) -> bool:
    """Compatibility of two canonically oriented splits."""
    return (a & b) == 0 or (a & ~b) == 0 or (b & ~a) == 0


def split_members(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def split_key(mask: int) -> tuple[int, ...]:
    """Sort key giving the canonical (lexicographic on member indices) order."""
    return split_members(mask)


def split_label(mask: int, taxa: TaxonTable) -> str:
    """Human readable identifier: labels on the side without taxon 0, '|'-joined."""
    return "|".join(taxa.labels[i] for i in split_members(mask))


def parse_split_label(text: str, taxa: TaxonTable) -> int:
    """Inverse of :func:`split_label`; also accepts comma separated labels."""
    sep = "|" if "|" in text else ","
    labels = [p.strip() for p in text.split(sep) if p.strip()]
    mask = taxa.mask_of(labels)
    if not is_internal(mask, len(taxa)):
        raise TreeError(f"{text!r} is not an internal split")
    return mask


# ---------------------------------------------------------------------------
# trees


class PhyloTree:
    """An unrooted tree as a point of BHV tree space.

    Parameters
    ----------
    taxa : TaxonTable
        Leaf set.
    internal : mapping of int to float
        Internal split masks (canonical orientation) and their nonnegative
        lengths.  Zero lengths are kept as explicit coordinates.
    pendant : sequence of float, optional
        Pendant-edge length for each taxon, in taxon-table order.  Defaults
        to zeros.

    Trees are treated as immutable values; the split dictionary is kept in
    canonical split order.
    """

    __slots__ = ("taxa", "internal", "pendant")

    def __init__(
        self,
        taxa: TaxonTable,
        internal: Mapping[int, float],
        pendant: Sequence[float] | np.ndarray | None = None,
        validate: bool = True,
    ):
        n = len(taxa)
        self.taxa = taxa
        self.internal = {
            int(s): float(internal[s]) for s in sorted(internal, key=split_key)
        }
        if pendant is None:
            pend = np.zeros(n)
        else:
            pend = np.array(pendant, dtype=float)
        pend.setflags(write=False)
        self.pendant = pend
        if validate:
            self._validate()

    def _validate(self) -> None:
        n = len(self.taxa)
        if n < 3:
            raise TreeError("a tree needs at least 3 taxa")
        if self.pendant.shape != (n,):
            raise TreeError(f"expected {n} pendant lengths, got {self.pendant.shape}")
        if not np.all(np.isfinite(self.pendant)) or np.any(self.pendant < 0):
            raise TreeError("pendant lengths must be finite and nonnegative")
        splits = list(self.internal)
        if len(splits) > n - 3:
            raise TreeError(f"{len(splits)} internal splits exceed the maximum {n - 3}")
        full = self.taxa.full_mask
        for s in splits:
            if s & 1 or s & ~full or not is_internal(s, n):
                raise TreeError(f"invalid split mask {s:#x}")
            length = self.internal[s]
            if not math.isfinite(length) or length < 0:
                raise TreeError(f"split {split_label(s, self.taxa)} has invalid length {length}")
        for i, a in enumerate(splits):
            for b in splits[i + 1 :]:
                if not compatible(a, b):
                    raise TreeError(
                        "incompatible splits "
                        f"{split_label(a, self.taxa)} and {split_label(b, self.taxa)}"
                    )

    @property
    def n_taxa(self) -> int:
        return len(self.taxa)

    @property
    def dim(self) -> int:
        """Number of internal coordinates of a resolved tree, n - 3."""
        return len(self.taxa) - 3

    @property
    def splits(self) -> tuple[int, ...]:
        return tuple(self.internal)

    def topology(self) -> frozenset[int]:
        """Splits with strictly positive length."""
        return frozenset(s for s, v in self.internal.items() if v > 0)

    def is_resolved(self) -> bool:
        return len(self.internal) == self.dim and all(v > 0 for v in self.internal.values())

    def length_vector(self, ordering: Sequence[int]) -> np.ndarray:
        return np.array([self.internal.get(s, 0.0) for s in ordering])

    def replace(self, internal=None, pendant=None) -> "PhyloTree":
        return PhyloTree(
            self.taxa,
            self.internal if internal is None else internal,
            self.pendant if pendant is None else pendant,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhyloTree):
            return NotImplemented
        return (
            self.taxa == other.taxa
            and self.internal == other.internal
            and np.array_equal(self.pendant, other.pendant)
        )

    __hash__ = None

    def __repr__(self) -> str:
        splits = ", ".join(
            f"{split_label(s, self.taxa)}:{v:g}" for s, v in self.internal.items()
        )
        return f"PhyloTree(n_taxa={self.n_taxa}, splits=[{splits}])"


def check_same_taxa(t1: PhyloTree, t2: PhyloTree) -> None:
    if t1.taxa != t2.taxa:
        raise TreeError("taxon set mismatch between trees")


# ---------------------------------------------------------------------------
# topology operations


def rf_distance(t1: PhyloTree, t2: PhyloTree) -> int:
    """Robinson-Foulds distance; zero-length splits count as absent."""
    check_same_taxa(t1, t2)
    return len(t1.topology() ^ t2.topology())


def _components(side: int, splits: Iterable[int], full: int, n_taxa: int) -> list[int]:
    """Maximal proper sub-clusters of ``side`` among the tree's split sides."""
    candidates = set()
    for s in splits:
        candidates.add(s)
        candidates.add(full ^ s)
    for i in range(n_taxa):
        candidates.add(1 << i)
    inside = [c for c in candidates if c != side and (c & ~side) == 0]
    return [c for c in inside if not any(c != d and (c & ~d) == 0 for d in inside)]


def nni_neighbors(t: PhyloTree) -> list[PhyloTree]:
    """All trees one nearest-neighbor interchange away from a resolved tree.

    Each internal edge separating subtrees (B1, B2) from (C, D) yields the
    two alternatives B1+C | B2+D and B1+D | B2+C.  The new split inherits the
    length of the edge it replaces; everything else is unchanged.
    """
    if not t.is_resolved():
        raise TreeError("NNI neighbors need a resolved tree with positive lengths")
    n = t.n_taxa
    full = t.taxa.full_mask
    splits = t.splits
    out = []
    seen = set()
    for s in splits:
        left = _components(s, splits, full, n)
        right = _components(full ^ s, splits, full, n)
        if len(left) != 2 or len(right) != 2:
            raise TreeError("tree is not binary around an internal edge")
        b1 = min(left, key=split_key)
        for c in sorted(right, key=split_key):
            new = canonical(b1 | c, n)
            internal = dict(t.internal)
            length = internal.pop(s)
            internal[new] = length
            key = frozenset(internal)
            if key in seen:
                continue
            seen.add(key)
            out.append(PhyloTree(t.taxa, internal, t.pendant))
    return out


def topology_count(m: int) -> int:
    """Exact value of (2m+2)! / (2^(m+1) (m+1)!), the number of tree topologies
    with m internal branches."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return math.factorial(2 * m + 2) // (2 ** (m + 1) * math.factorial(m + 1))


def topology_ratio(m: int) -> Fraction:
    """Topologies per Euclidean orthant: topology_count(m) / 2^m, exactly."""
    return Fraction(topology_count(m), 2**m)


def random_resolved_tree(
    n_taxa: int,
    lengths: str = "unit",
    seed: int | None = None,
    labels: Sequence[str] | None = None,
    rng: np.random.Generator | None = None,
    taxa: TaxonTable | None = None,
) -> PhyloTree:
    """Uniformly random resolved unrooted topology by sequential leaf insertion.

    Leaf k (0-based, k >= 3) is attached to one of the 2k - 3 existing edges
    chosen uniformly, which gives the uniform law on labelled topologies.
    ``lengths`` is ``"unit"`` (every edge 1) or ``"exponential"`` (rate 1).
    """
    if n_taxa < 4:
        raise TreeError("random_resolved_tree needs n_taxa >= 4")
    if lengths not in ("unit", "exponential"):
        raise ValueError(f"unknown length mode {lengths!r}")
    if rng is None:
        rng = np.random.default_rng(seed)
    if taxa is None:
        if labels is None:
            width = len(str(n_taxa - 1))
            labels = [f"t{i:0{width}d}" for i in range(n_taxa)]
        taxa = TaxonTable(labels)
    if len(taxa) != n_taxa:
        raise TreeError("label count does not match n_taxa")

    center = n_taxa
    edges = [(center, 0), (center, 1), (center, 2)]
    next_node = n_taxa + 1
    for k in range(3, n_taxa):
        u, v = edges[int(rng.integers(len(edges)))]
        w = next_node
        next_node += 1
        edges.remove((u, v))
        edges.extend([(u, w), (w, v), (w, k)])

    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    # root at leaf 0; clusters below each node never contain taxon 0
    below: dict[int, int] = {}
    order = []
    parent = {0: -1}
    stack = [0]
    while stack:
        x = stack.pop()
        order.append(x)
        for y in adj[x]:
            if y != parent[x]:
                parent[y] = x
                stack.append(y)
    for x in reversed(order):
        mask = (1 << x) if x < n_taxa else 0
        for y in adj[x]:
            if y != parent[x]:
                mask |= below[y]
        below[x] = mask
    splits = sorted(
        (below[x] for x in order if x >= n_taxa and is_internal(below[x], n_taxa)),
        key=split_key,
    )
    if lengths == "unit":
        internal = {s: 1.0 for s in splits}
        pendant = np.ones(n_taxa)
    else:
        internal = {s: float(rng.exponential(1.0)) for s in splits}
        pendant = rng.exponential(1.0, size=n_taxa)
    return PhyloTree(taxa, internal, pendant)


def split_support(trees: Iterable[PhyloTree], split: int) -> float:
    """Fraction of trees carrying ``split`` with strictly positive length."""
    trees = list(getattr(trees, "trees", trees))
    if not trees:
        return 0.0
    hits = sum(1 for t in trees if t.internal.get(split, 0.0) > 0)
    return hits / len(trees)
