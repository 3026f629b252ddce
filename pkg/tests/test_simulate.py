import numpy as np

from treelens.simulate import grouped_collection, noisy_tree, synthetic_collection
from treelens.tree_core import random_resolved_tree, rf_distance


def test_noisy_tree_keeps_topology_without_moves():
    rng = np.random.default_rng(0)
    base = random_resolved_tree(9, "exponential", seed=1)
    t = noisy_tree(base, 0.5, rng)
    assert set(t.internal) == set(base.internal)
    assert all(v > 0 for v in t.internal.values())
    assert rf_distance(base, noisy_tree(base, 0.1, rng, nni_moves=1)) == 2


def test_synthetic_collection_is_seeded():
    a = synthetic_collection(8, 7, seed=4, rates=np.linspace(1, 2, 8))
    b = synthetic_collection(8, 7, seed=4, rates=np.linspace(1, 2, 8))
    assert all(x == y for x, y in zip(a, b))
    assert a.names[0] == "gene_1" and a.rates.tolist() == np.linspace(1, 2, 8).tolist()
    assert synthetic_collection(3, 5).rates is None


def test_grouped_collection_labels():
    g = grouped_collection([2, 3], n_taxa=6)
    assert g.groups == ("g1", "g1", "g2", "g2", "g2")
    assert g.names[2] == "g2_rep1"
