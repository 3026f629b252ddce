"""Weighted Fréchet means in BHV space by a random-order proximal point iteration.

For F(t) = sum_i w_i d(T_i, t)^2 the proximal step toward T_i with parameter
lambda moves the iterate a fraction lambda w / (1 + lambda w) along the
geodesic to T_i.  With normalised weights w' (mean 1) and
lambda_k = 1 / (cumulative normalised weight already absorbed), which is
exactly 1/k for unit weights, the step fraction is w'_i / S_k.  Indices are
visited in a fresh random permutation on every pass, and the starting tree
counts as the first visit of the first pass, so in a single orthant the
iterate at the end of every pass is the exact weighted coordinate mean.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geodesic import _geodesic, check_pendant_mode, counter, point_on_geodesic
from .tree_core import PhyloTree, check_same_taxa


@dataclass
class MeanConfig:
    """Settings for :func:`frechet_mean`.

    ``max_iter`` caps the number of geodesics; the iteration only stops at
    the end of a full pass over the trees, so it runs the largest whole
    number of passes that fits in the cap (or a partial first pass if not
    even one fits).
    """

    weights: Sequence[float] | None = None
    max_iter: int = 10_000
    tol: float = 1e-4
    window: int = 50
    seed: int = 0
    pendant_mode: str = "exclude"
    objective_every: int = 0
    final_objective: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(~(w > 0)) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be strictly positive")
        check_pendant_mode(self.pendant_mode)


@dataclass
class MeanReport:
    iterations: int
    converged: bool
    geodesic_calls: int
    objective: float | None
    start_index: int
    weighting: str = (
        "random-order passes; step w'/S with w' = w*n/sum(w) and S the cumulative "
        "normalised weight (lambda_k = 1/S_{k-1})"
    )
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iteration,index,step,movement,objective\n")
        for it, idx, step, move, obj in self.rows:
            buf.write(f"{it},{idx},{step!r},{move!r},{'' if obj is None else repr(obj)}\n")
        return buf.getvalue()


def _weights(trees, weights) -> np.ndarray:
    if weights is None:
        return np.ones(len(trees))
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(trees),):
        raise ValueError("one weight per tree required")
    if np.any(~(w > 0)):
        raise ValueError("weights must be strictly positive")
    return w


def frechet_objective(
    candidate: PhyloTree,
    trees,
    weights: Sequence[float] | None = None,
    pendant_mode: str = "exclude",
) -> float:
    """Weighted sum of squared BHV distances from ``candidate`` to ``trees``."""
    trees = list(getattr(trees, "trees", trees))
    w = _weights(trees, weights)
    check_pendant_mode(pendant_mode)
    total = 0.0
    for t, wi in zip(trees, w):
        check_same_taxa(candidate, t)
        counter.add()
        total += wi * _geodesic(candidate, t, pendant_mode).distance ** 2
    return total


def frechet_variance(trees, base: PhyloTree, pendant_mode: str = "exclude") -> float:
    """Mean squared BHV distance from ``base`` to the trees."""
    trees = list(getattr(trees, "trees", trees))
    if not trees:
        raise ValueError("empty collection")
    return frechet_objective(base, trees, None, pendant_mode) / len(trees)


def frechet_mean(trees, config: MeanConfig | None = None) -> tuple[PhyloTree, MeanReport]:
    """Approximate weighted Fréchet mean of a tree collection.

    Parameters
    ----------
    trees : TreeCollection or sequence of PhyloTree
    config : MeanConfig, optional

    Returns
    -------
    mean : PhyloTree
    report : MeanReport
        Per-iteration rows (sampled index, step fraction, BHV movement and,
        every ``objective_every`` iterations, the objective), the geodesic
        count and the final objective.
    """
    config = config or MeanConfig()
    trees = list(getattr(trees, "trees", trees))
    n = len(trees)
    if n == 0:
        raise ValueError("empty collection")
    for t in trees[1:]:
        check_same_taxa(trees[0], t)
    w = _weights(trees, config.weights)
    wn = w * n / w.sum()
    mode = config.pendant_mode
    rng = np.random.default_rng(config.seed)

    start = int(rng.integers(n))
    x = trees[start]
    first_pass = n - 1
    if n == 1:
        budget = 0
    elif first_pass >= config.max_iter:
        budget = config.max_iter
    else:
        budget = first_pass + n * ((config.max_iter - first_pass) // n)

    before = counter.value
    rows = []
    moves: list[float] = []
    cum = wn[start]
    k = 0
    converged = n == 1
    order = [i for i in rng.permutation(n) if i != start]
    while k < budget and not converged:
        if not order:
            order = list(rng.permutation(n))
        i = int(order.pop(0))
        k += 1
        step = wn[i] / (cum + wn[i])
        cum += wn[i]
        counter.add()
        path = _geodesic(x, trees[i], mode)
        x = point_on_geodesic(path, step)
        move = step * path.distance
        moves.append(move)
        obj = None
        if config.objective_every and k % config.objective_every == 0:
            obj = frechet_objective(x, trees, w, mode)
        rows.append((k, i, step, move, obj))
        if not order and k >= config.window and max(moves[-config.window :]) < config.tol:
            converged = True

    objective = frechet_objective(x, trees, w, mode) if config.final_objective else None
    report = MeanReport(
        iterations=k,
        converged=converged,
        geodesic_calls=counter.value - before,
        objective=objective,
        start_index=start,
        rows=rows,
    )
    return x, report
