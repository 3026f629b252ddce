import numpy as np
import pytest

from treelens.tree_core import PhyloTree, TaxonTable, nni_neighbors, random_resolved_tree


def make_tree(taxa, sides, pendant=None):
    """Tree from {tuple of taxon indices: length}; sides may contain taxon 0."""
    internal = {}
    for side, length in sides.items():
        mask = 0
        for i in side:
            mask |= 1 << i
        if mask & 1:
            mask ^= taxa.full_mask
        internal[mask] = length
    return PhyloTree(taxa, internal, pendant)


def random_pair(rng, n_taxa, near=None, pendant=False):
    """Two random trees on the same taxa.  With ``near`` the second tree is a
    random NNI walk of that many steps from the first, which gives geodesics
    through few orthants; otherwise both topologies are independent."""
    t1 = random_resolved_tree(n_taxa, "exponential", rng=rng)
    if near is None:
        t2 = random_resolved_tree(n_taxa, "exponential", rng=rng, taxa=t1.taxa)
    else:
        t2 = t1
        for _ in range(near):
            nbrs = nni_neighbors(t2)
            t2 = nbrs[int(rng.integers(len(nbrs)))]
        t2 = t2.replace(internal={s: float(rng.exponential()) for s in t2.internal})
    if pendant:
        t1 = t1.replace(pendant=rng.exponential(size=n_taxa))
        t2 = t2.replace(pendant=rng.exponential(size=n_taxa))
    return t1, t2


@pytest.fixture
def six_taxa():
    return TaxonTable([f"t{i}" for i in range(6)])


@pytest.fixture
def two_pair_example(six_taxa):
    """Six-leaf pair whose geodesic has two support pairs (distance^2 = 20)."""
    t1 = make_tree(six_taxa, {(2, 3, 4, 5): 1.0, (3, 4, 5): 2.0, (4, 5): 1.0})
    t2 = make_tree(six_taxa, {(1, 3, 4, 5): 1.0, (3, 4, 5): 2.0, (3, 4): 3.0})
    return t1, t2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    """Print and remember one pass/fail line for the acceptance summary."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
