"""Newick and sidecar-table input/output.

Trees are read one per line.  A line may carry a leading name token
separated from the tree by whitespace (``gene1 (A:1,B:2,(C:1,D:1):0.5);``);
unnamed trees are called ``tree_1``, ``tree_2``, ...  Every tree of a file is
checked against the taxon set of the first one.
"""

from __future__ import annotations

import csv
import io
import math
import re
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .tree_core import (
    PhyloTree,
    TaxonTable,
    TreeError,
    canonical,
    split_key,
)

__all__ = [
    "NewickError",
    "TreeCollection",
    "parse_newick",
    "read_newick",
    "write_newick",
    "write_collection",
    "read_rates",
    "read_groups",
    "load_trees",
]


class NewickError(TreeError):
    """Malformed Newick text or inconsistent taxa."""


@dataclass(frozen=True)
class TreeCollection:
    taxa: TaxonTable
    trees: tuple[PhyloTree, ...]
    names: tuple[str, ...]
    rates: np.ndarray | None = None
    groups: tuple[str, ...] | None = None
    missing_lengths: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != len(self.trees):
            raise TreeError("one name per tree required")
        if len(set(self.names)) != len(self.names):
            raise TreeError("tree names must be unique")
        for name, t in zip(self.names, self.trees):
            if t.taxa != self.taxa:
                raise TreeError(f"tree {name!r} does not share the collection's taxon set")
        if self.rates is not None:
            rates = np.asarray(self.rates, dtype=float)
            if rates.shape != (len(self.trees),):
                raise TreeError("exactly one rate per tree required")
            if np.any(~(rates > 0)) or not np.all(np.isfinite(rates)):
                raise TreeError("nonpositive rate")
            rates.setflags(write=False)
            object.__setattr__(self, "rates", rates)
        if self.groups is not None:
            object.__setattr__(self, "groups", tuple(self.groups))
            if len(self.groups) != len(self.trees):
                raise TreeError("exactly one group label per tree required")

    def __len__(self) -> int:
        return len(self.trees)

    def __iter__(self):
        return iter(self.trees)

    def __getitem__(self, i):
        return self.trees[i]

    def with_trees(self, trees: Sequence[PhyloTree], names: Sequence[str]) -> "TreeCollection":
        return TreeCollection(self.taxa, tuple(trees), tuple(names))

    def subset(self, indices: Sequence[int]) -> "TreeCollection":
        idx = list(indices)
        return TreeCollection(
            self.taxa,
            tuple(self.trees[i] for i in idx),
            tuple(self.names[i] for i in idx),
            None if self.rates is None else self.rates[idx],
            None if self.groups is None else tuple(self.groups[i] for i in idx),
        )


# ---------------------------------------------------------------------------
# tokenizer / parser

_SPECIAL = set("()[]':;,")
_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class _Node:
    __slots__ = ("children", "label", "length")

    def __init__(self):
        self.children: list[_Node] = []
        self.label: str | None = None
        self.length: float | None = None


def _tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "[":
            j = text.find("]", i)
            if j < 0:
                raise NewickError("unterminated comment")
            i = j + 1
        elif c == "'":
            buf = []
            i += 1
            while True:
                if i >= n:
                    raise NewickError("unterminated quoted label")
                if text[i] == "'":
                    if i + 1 < n and text[i + 1] == "'":
                        buf.append("'")
                        i += 2
                        continue
                    i += 1
                    break
                buf.append(text[i])
                i += 1
            yield ("label", "".join(buf))
        elif c in _SPECIAL:
            yield (c, c)
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in _SPECIAL:
                j += 1
            yield ("word", text[i:j])
            i = j


class _Parser:
    def __init__(self, text: str):
        self.toks = list(_tokens(text))
        self.pos = 0

    def peek(self):
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def take(self, kind=None):
        if self.pos >= len(self.toks):
            raise NewickError("unexpected end of Newick string")
        tok = self.toks[self.pos]
        if kind is not None and tok[0] != kind:
            raise NewickError(f"expected {kind!r}, found {tok[1]!r}")
        self.pos += 1
        return tok

    def parse(self) -> _Node:
        node = self.subtree()
        self.take(";")
        if self.pos != len(self.toks):
            raise NewickError("trailing text after ';'")
        return node

    def subtree(self) -> _Node:
        node = _Node()
        if self.peek() == "(":
            self.take("(")
            node.children.append(self.subtree())
            while self.peek() == ",":
                self.take(",")
                node.children.append(self.subtree())
            self.take(")")
        if self.peek() in ("word", "label"):
            kind, value = self.take()
            # consecutive unquoted words would mean an unquoted label with spaces
            if kind == "word" and self.peek() in ("word", "label"):
                raise NewickError(f"unexpected token after label {value!r}")
            node.label = value
        if self.peek() == ":":
            self.take(":")
            kind, value = self.take()
            if kind != "word" or not _NUMBER.match(value):
                raise NewickError(f"malformed branch length {value!r}")
            length = float(value)
            if length < 0:
                raise NewickError(f"negative branch length {value}")
            node.length = length
        return node


def _leaves(node: _Node, out: list[str]) -> None:
    if not node.children:
        if not node.label:
            raise NewickError("unlabelled leaf")
        out.append(node.label)
    for c in node.children:
        _leaves(c, out)


def _to_tree(root: _Node, taxa: TaxonTable, mode: str, strict: bool) -> tuple[PhyloTree, int]:
    if not root.children:
        raise NewickError("a tree needs at least one internal node")
    if mode == "rooted" and len(root.children) != 2:
        raise NewickError(f"rooted mode expects a bifurcating root, found degree {len(root.children)}")
    n = len(taxa)
    full = taxa.full_mask
    internal: dict[int, float] = {}
    pendant = np.zeros(n)
    missing = 0

    def walk(node: _Node) -> int:
        nonlocal missing
        if not node.children:
            try:
                return 1 << taxa.index[node.label]
            except KeyError:
                raise NewickError(f"taxon {node.label!r} not in the taxon set") from None
        mask = 0
        for child in node.children:
            cmask = walk(child)
            if mask & cmask:
                raise NewickError("duplicate taxon label within one tree")
            mask |= cmask
            length = child.length
            if length is None:
                if strict:
                    raise NewickError("missing branch length")
                missing += 1
                length = 0.0
            c = canonical(cmask, n)
            if c == 0:
                continue  # edge above the whole leaf set carries no split
            if c.bit_count() == 1:
                i = c.bit_length() - 1
                pendant[i] += length
            elif c.bit_count() == n - 1:
                pendant[0] += length
            else:
                internal[c] = internal.get(c, 0.0) + length
        return mask

    mask = walk(root)
    if mask != full:
        absent = [taxa.labels[i] for i in range(n) if not mask >> i & 1]
        raise NewickError(f"taxon set mismatch; missing {', '.join(absent)}")
    return PhyloTree(taxa, internal, pendant), missing


def _split_name(line: str) -> tuple[str | None, str]:
    if line.startswith("("):
        return None, line
    m = re.match(r"(\S+)\s+(\(.*)$", line, re.S)
    if m and not (set(m.group(1)) & _SPECIAL):
        return m.group(1), m.group(2)
    return None, line


def parse_newick(
    source: str | Iterable[str],
    mode: str = "auto",
    taxa: TaxonTable | None = None,
    strict: bool = False,
) -> TreeCollection:
    """Parse Newick text with one tree per line into a :class:`TreeCollection`.

    Parameters
    ----------
    source : str or iterable of str
        Newick text; blank lines and lines starting with ``#`` are skipped.
    mode : {"auto", "unrooted", "rooted"}
        Trees are always stored unrooted: a degree-2 root is suppressed and
        its two edges merged.  ``"rooted"`` additionally requires each root
        to be bifurcating.
    taxa : TaxonTable, optional
        Taxon table to validate against.  By default the sorted leaf labels
        of the first tree are used, which makes the taxon order independent
        of how the input happened to be written.
    strict : bool
        Treat missing branch lengths as errors instead of zeros.
    """
    if mode not in ("auto", "unrooted", "rooted"):
        raise ValueError(f"unknown mode {mode!r}")
    lines = source.splitlines() if isinstance(source, str) else list(source)
    trees, names = [], []
    missing = 0
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, text = _split_name(line)
        try:
            root = _Parser(text).parse()
            if taxa is None:
                labels: list[str] = []
                _leaves(root, labels)
                if len(set(labels)) != len(labels):
                    raise NewickError("duplicate taxon label within one tree")
                taxa = TaxonTable(sorted(labels))
            else:
                labels = []
                _leaves(root, labels)
                if len(labels) != len(taxa) or set(labels) != set(taxa.labels):
                    if len(set(labels)) != len(labels):
                        raise NewickError("duplicate taxon label within one tree")
                    extra = sorted(set(labels) - set(taxa.labels))
                    absent = sorted(set(taxa.labels) - set(labels))
                    raise NewickError(
                        "taxon set mismatch"
                        + (f"; unexpected {', '.join(extra)}" if extra else "")
                        + (f"; missing {', '.join(absent)}" if absent else "")
                    )
            tree, miss = _to_tree(root, taxa, mode, strict)
        except TreeError as exc:
            raise NewickError(f"line {lineno}: {exc}") from None
        missing += miss
        trees.append(tree)
        names.append(name or f"tree_{len(trees)}")
    if not trees:
        raise NewickError("no trees found")
    if missing:
        warnings.warn(f"{missing} missing branch length(s) set to 0", stacklevel=2)
    return TreeCollection(taxa, tuple(trees), tuple(names), missing_lengths=missing)


def read_newick(text: str, mode: str = "auto", taxa: TaxonTable | None = None,
                strict: bool = False) -> PhyloTree:
    """Parse a single Newick string."""
    coll = parse_newick(text, mode=mode, taxa=taxa, strict=strict)
    if len(coll) != 1:
        raise NewickError(f"expected one tree, found {len(coll)}")
    return coll.trees[0]


def load_trees(path, mode: str = "auto", taxa: TaxonTable | None = None,
               strict: bool = False) -> TreeCollection:
    return parse_newick(Path(path).read_text(encoding="utf-8"), mode=mode, taxa=taxa, strict=strict)


# ---------------------------------------------------------------------------
# writer


def _fmt_length(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_label(label: str) -> str:
    if any(c in _SPECIAL or c.isspace() for c in label):
        return "'" + label.replace("'", "''") + "'"
    return label


def write_newick(tree: PhyloTree) -> str:
    """Canonical Newick text for ``tree``.

    The tree is drawn from the internal node next to taxon 0, children are
    ordered by their smallest taxon index, and every length is printed with
    17 significant digits so that parsing the output recovers the exact
    floats.
    """
    taxa = tree.taxa
    n = len(taxa)
    clusters = sorted(tree.internal, key=lambda s: (s.bit_count(), split_key(s)))
    children: dict[int, list[int]] = {0: []}  # key 0 stands for the root
    for c in clusters:
        children[c] = []
    # attach every cluster (and leaf) to its smallest strict superset
    for c in clusters + [1 << i for i in range(1, n)]:
        parent = 0
        for d in clusters:
            if d != c and (c & ~d) == 0:
                parent = d
                break
        children[parent].append(c)

    def render(c: int) -> str:
        if c.bit_count() == 1 and c not in tree.internal:
            i = c.bit_length() - 1
            return f"{_fmt_label(taxa.labels[i])}:{_fmt_length(tree.pendant[i])}"
        kids = sorted(children[c], key=lambda x: (x & -x))
        inner = ",".join(render(k) for k in kids)
        return f"({inner}):{_fmt_length(tree.internal[c])}"

    root_kids = sorted(children[0], key=lambda x: (x & -x))
    parts = [f"{_fmt_label(taxa.labels[0])}:{_fmt_length(tree.pendant[0])}"]
    parts += [render(k) for k in root_kids]
    return "(" + ",".join(parts) + ");"


def write_collection(coll: TreeCollection, with_names: bool = True) -> str:
    lines = []
    for name, t in zip(coll.names, coll.trees):
        text = write_newick(t)
        lines.append(f"{name} {text}" if with_names else text)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sidecar tables


def _read_table(source, columns: tuple[str, str]) -> list[tuple[str, str]]:
    # a Path, or a string without newlines or commas, names a file; other strings are CSV text
    if isinstance(source, Path) or (isinstance(source, str) and not any(c in source for c in ",\n")):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = str(source)
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(x.strip() for x in r)]
    if not rows:
        raise TreeError("empty table")
    header = [h.strip().lower() for h in rows[0]]
    if header[:2] != list(columns):
        raise TreeError(f"expected header {','.join(columns)}, found {','.join(rows[0])}")
    out = []
    for r in rows[1:]:
        if len(r) < 2:
            raise TreeError(f"malformed row {r!r}")
        out.append((r[0].strip(), r[1].strip()))
    return out


def _match_names(rows, coll: TreeCollection, what: str) -> dict[str, str]:
    by_name: dict[str, str] = {}
    for name, value in rows:
        if name in by_name:
            raise TreeError(f"duplicate name {name!r} in {what} table")
        by_name[name] = value
    unknown = [x for x in by_name if x not in set(coll.names)]
    if unknown:
        raise TreeError(f"{what} table names trees absent from the collection: {', '.join(unknown)}")
    missing = [x for x in coll.names if x not in by_name]
    if missing:
        raise TreeError(f"missing {what} for tree(s): {', '.join(missing)}")
    return by_name


def read_rates(source, collection: TreeCollection) -> TreeCollection:
    """Attach per-tree rates from a ``name,rate`` CSV (text or path)."""
    by_name = _match_names(_read_table(source, ("name", "rate")), collection, "rate")
    rates = []
    for name in collection.names:
        try:
            r = float(by_name[name])
        except ValueError:
            raise TreeError(f"malformed rate {by_name[name]!r} for {name!r}") from None
        if not r > 0 or not math.isfinite(r):
            raise TreeError(f"nonpositive rate {by_name[name]} for {name!r}")
        rates.append(r)
    return replace(collection, rates=np.array(rates))


def read_groups(source, collection: TreeCollection) -> TreeCollection:
    """Attach per-tree group labels from a ``name,group`` CSV (text or path)."""
    by_name = _match_names(_read_table(source, ("name", "group")), collection, "group")
    groups = tuple(by_name[name] for name in collection.names)
    if any(not g for g in groups):
        raise TreeError("empty group label")
    return replace(collection, groups=groups)
