"""Independent reference computations used by the test-suite.

Nothing here calls into the code paths being checked: compatibility is
decided on Python sets of taxon names and the BHV distance is found by
exhaustive enumeration of support sequences.
"""

from __future__ import annotations

import itertools
import math

import mpmath


def _sides(tree):
    """Internal splits of ``tree`` as frozensets of labels (side without taxon 0),
    mapped to length; zero-length splits dropped."""
    labels = tree.taxa.labels
    out = {}
    for mask, length in tree.internal.items():
        if length <= 0:
            continue
        side = frozenset(labels[i] for i in range(len(labels)) if mask >> i & 1)
        out[side] = length
    return out


def _compatible(x: frozenset, y: frozenset, everything: frozenset) -> bool:
    xc, yc = everything - x, everything - y
    return not (x & y) or not (x & yc) or not (xc & y) or not (xc & yc)


def _surjections(items, k):
    """All ways to assign ``items`` to k ordered, nonempty blocks."""
    for assign in itertools.product(range(k), repeat=len(items)):
        if len(set(assign)) == k:
            blocks = [[] for _ in range(k)]
            for it, b in zip(items, assign):
                blocks[b].append(it)
            yield blocks


def brute_force_distance(t1, t2, pendant_mode="exclude"):
    """BHV distance by minimising over every valid support sequence.

    Returns (distance, best_support) where best_support is a list of
    (A_block, B_block) label-set lists.
    """
    everything = frozenset(t1.taxa.labels)
    e1, e2 = _sides(t1), _sides(t2)
    common_sq = 0.0
    a_items, b_items = [], []
    for s in set(e1) | set(e2):
        if s in e1 and s in e2:
            common_sq += (e1[s] - e2[s]) ** 2
        elif s in e1:
            if all(_compatible(s, f, everything) for f in e2):
                common_sq += e1[s] ** 2
            else:
                a_items.append(s)
        else:
            if all(_compatible(s, e, everything) for e in e1):
                common_sq += e2[s] ** 2
            else:
                b_items.append(s)
    if pendant_mode == "include":
        common_sq += sum((x - y) ** 2 for x, y in zip(t1.pendant, t2.pendant))
    if not a_items:
        return math.sqrt(common_sq), []

    def norm(block, lengths):
        return math.sqrt(sum(lengths[x] ** 2 for x in block))

    best, best_support = math.inf, None
    for k in range(1, min(len(a_items), len(b_items)) + 1):
        for ablocks in _surjections(a_items, k):
            for bblocks in _surjections(b_items, k):
                # compatibility of every intermediate orthant
                ok = True
                for i in range(k + 1):
                    present = [x for blk in bblocks[:i] for x in blk]
                    present += [x for blk in ablocks[i:] for x in blk]
                    for x, y in itertools.combinations(present, 2):
                        if not _compatible(x, y, everything):
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    continue
                ratios = [norm(a, e1) / norm(b, e2) for a, b in zip(ablocks, bblocks)]
                if any(r1 > r2 * (1 + 1e-12) for r1, r2 in zip(ratios, ratios[1:])):
                    continue
                val = sum((norm(a, e1) + norm(b, e2)) ** 2 for a, b in zip(ablocks, bblocks))
                if val < best:
                    best, best_support = val, list(zip(ablocks, bblocks))
    return math.sqrt(best + common_sq), best_support


def chi2_quantile_oracle(dof, p, dps=40):
    """Invert the chi-square CDF by bisection on mpmath's regularized
    lower incomplete gamma at high precision."""
    with mpmath.workdps(dps):
        k = mpmath.mpf(dof) / 2
        target = mpmath.mpf(p)

        def cdf(x):
            return mpmath.gammainc(k, 0, x / 2, regularized=True)

        lo, hi = mpmath.mpf(0), mpmath.mpf(max(10, 4 * dof))
        while cdf(hi) < target:
            hi *= 2
        for _ in range(200):
            mid = (lo + hi) / 2
            if cdf(mid) < target:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


def cone_path_midpoint_oracle(a, b, grid=200001):
    """Minimiser of f(x) = (x - (-a))^2 + (x - b)^2 on the line through the
    star tree, found on a fine grid then refined by golden section.

    Coordinates: -a is t1 (its split of length a), +b is t2.  Returns the
    signed coordinate of the minimiser.
    """
    f = lambda x: (x + a) ** 2 + (x - b) ** 2  # noqa: E731
    xs = [(-a) + (a + b) * i / (grid - 1) for i in range(grid)]
    i = min(range(grid), key=lambda j: f(xs[j]))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    g = (math.sqrt(5) - 1) / 2
    for _ in range(200):
        c, d = hi - g * (hi - lo), lo + g * (hi - lo)
        if f(c) < f(d):
            hi = d
        else:
            lo = c
    return (lo + hi) / 2
