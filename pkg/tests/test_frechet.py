import numpy as np
import pytest

from conftest import make_tree
from oracles import cone_path_midpoint_oracle
from treelens.frechet import MeanConfig, frechet_mean, frechet_objective, frechet_variance
from treelens.geodesic import bhv_distance, bhv_geodesic, count_geodesics, point_on_geodesic
from treelens.simulate import noisy_tree, synthetic_collection
from treelens.tree_core import TaxonTable, random_resolved_tree


def _same_orthant(rng, n_trees=7, n_taxa=8):
    base = random_resolved_tree(n_taxa, "exponential", rng=rng)
    trees = [noisy_tree(base, 0.2, rng) for _ in range(n_trees)]
    return base, trees


def test_identical_trees():
    t = random_resolved_tree(9, "exponential", seed=2)
    mean, report = frechet_mean([t, t, t])
    assert mean == t
    assert report.objective == 0.0


def test_same_orthant_weighted_coordinate_mean():
    rng = np.random.default_rng(11)
    base, trees = _same_orthant(rng)
    w = rng.uniform(0.2, 3.0, len(trees))
    mean, report = frechet_mean(trees, MeanConfig(weights=w, max_iter=len(trees) * 3 - 1, seed=4))
    order = list(base.internal)
    want = sum(wi * t.length_vector(order) for wi, t in zip(w, trees)) / w.sum()
    assert report.iterations == len(trees) * 3 - 1
    assert np.max(np.abs(mean.length_vector(order) - want)) < 1e-4


def test_two_conflicting_trees_meet_at_star():
    taxa = TaxonTable("abcd")
    t1 = make_tree(taxa, {(0, 1): 1.0})
    t2 = make_tree(taxa, {(0, 2): 3.0})
    mean, _ = frechet_mean([t1, t2], MeanConfig(max_iter=2000, seed=1))
    x = cone_path_midpoint_oracle(1.0, 3.0)
    target = make_tree(taxa, {(0, 2): x}) if x >= 0 else make_tree(taxa, {(0, 1): -x})
    assert bhv_distance(mean, target) < 1e-3


def test_objective_not_beaten_by_perturbations():
    coll = synthetic_collection(12, 7, seed=5, nni_prob=0.5)
    mean, report = frechet_mean(coll, MeanConfig(seed=0))
    rng = np.random.default_rng(0)
    for _ in range(100):
        other = coll[int(rng.integers(len(coll)))]
        moved = point_on_geodesic(bhv_geodesic(mean, other), float(rng.uniform(0.01, 0.3)))
        assert report.objective <= frechet_objective(moved, coll) + 1e-12
        jittered = noisy_tree(mean.replace(internal={s: v for s, v in mean.internal.items() if v > 0}), 0.05, rng)
        assert report.objective <= frechet_objective(jittered, coll) + 1e-12


def test_weight_scale_invariance():
    coll = synthetic_collection(9, 6, seed=2, nni_prob=0.4)
    w = np.linspace(1, 2, 9)
    a, _ = frechet_mean(coll, MeanConfig(weights=w, max_iter=300, seed=3))
    b, _ = frechet_mean(coll, MeanConfig(weights=5 * w, max_iter=300, seed=3))
    assert bhv_distance(a, b) < 1e-12
    c, _ = frechet_mean(coll, MeanConfig(weights=np.ones(9), max_iter=300, seed=3))
    d, _ = frechet_mean(coll, MeanConfig(max_iter=300, seed=3))
    assert c == d


def test_call_budget_and_report():
    coll = synthetic_collection(10, 6, seed=1)
    with count_geodesics() as box:
        _, report = frechet_mean(coll, MeanConfig(max_iter=95, final_objective=False, tol=0))
    assert report.iterations <= 95
    assert box.calls == report.geodesic_calls == report.iterations
    assert not report.converged
    lines = report.to_csv().splitlines()
    assert lines[0] == "iteration,index,step,movement,objective"
    assert len(lines) == report.iterations + 1


def test_convergence_flag():
    coll = synthetic_collection(6, 6, seed=8, sigma=0.01, nni_prob=0)
    _, report = frechet_mean(coll, MeanConfig(tol=1e-2, window=10))
    assert report.converged


def test_variance_and_validation():
    coll = synthetic_collection(5, 6, seed=1)
    v = frechet_variance(coll, coll[0])
    assert v == pytest.approx(np.mean([bhv_distance(coll[0], t) ** 2 for t in coll]))
    with pytest.raises(ValueError):
        frechet_mean([])
    with pytest.raises(ValueError):
        MeanConfig(weights=[1, -1])
    with pytest.raises(ValueError):
        frechet_mean(list(coll), MeanConfig(weights=[1, 2]))
