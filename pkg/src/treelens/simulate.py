"""Synthetic tree collections for demonstrations and tests."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .tree_core import PhyloTree, nni_neighbors, random_resolved_tree
from .treeio import TreeCollection

_FLOOR = 1e-6


def noisy_tree(base: PhyloTree, sd: float, rng: np.random.Generator, nni_moves: int = 0) -> PhyloTree:
    """Copy of a resolved tree with |Gaussian| length noise and random NNI moves."""
    internal = {s: max(abs(v + sd * rng.standard_normal()), _FLOOR) for s, v in base.internal.items()}
    pendant = np.maximum(np.abs(base.pendant + sd * rng.standard_normal(base.n_taxa)), _FLOOR)
    t = PhyloTree(base.taxa, internal, pendant)
    for _ in range(nni_moves):
        nbrs = nni_neighbors(t)
        t = nbrs[int(rng.integers(len(nbrs)))]
    return t


def synthetic_collection(
    n_trees: int,
    n_taxa: int = 8,
    seed: int = 0,
    rates: Sequence[float] | None = None,
    sigma: float = 0.1,
    nni_prob: float = 0.2,
    base: PhyloTree | None = None,
    prefix: str = "gene",
) -> TreeCollection:
    """Trees scattered around one base; tree i has noise sd ``sigma * sqrt(r_i)``.

    Without ``rates`` every tree uses r_i = 1 and the collection carries no
    rates.  Each tree receives one random NNI with probability ``nni_prob``.
    """
    rng = np.random.default_rng(seed)
    if base is None:
        base = random_resolved_tree(n_taxa, "exponential", rng=rng)
        base = base.replace(internal={s: v + 0.5 for s, v in base.internal.items()})
    r = np.ones(n_trees) if rates is None else np.asarray(rates, dtype=float)
    if r.shape != (n_trees,):
        raise ValueError("one rate per tree required")
    trees = [noisy_tree(base, sigma * np.sqrt(ri), rng, int(rng.random() < nni_prob)) for ri in r]
    width = len(str(n_trees))
    names = [f"{prefix}_{i + 1:0{width}d}" for i in range(n_trees)]
    return TreeCollection(base.taxa, trees, names, None if rates is None else r)


def grouped_collection(
    sizes: Sequence[int],
    n_taxa: int = 6,
    seed: int = 0,
    spread: float = 0.5,
    sigma: float = 0.05,
) -> TreeCollection:
    """Replicate groups: each group center is a noisy copy of one base tree,
    and its members are small perturbations of that center."""
    rng = np.random.default_rng(seed)
    base = random_resolved_tree(n_taxa, "exponential", rng=rng)
    base = base.replace(internal={s: v + 1.0 for s, v in base.internal.items()})
    trees, names, groups = [], [], []
    for g, size in enumerate(sizes):
        center = noisy_tree(base, spread, rng)
        for j in range(size):
            trees.append(noisy_tree(center, sigma, rng))
            names.append(f"g{g + 1}_rep{j + 1}")
            groups.append(f"g{g + 1}")
    return TreeCollection(base.taxa, trees, names, groups=groups)
