import numpy as np
import pytest

from treelens.projection import (
    PcaModel,
    ProjectedEllipse,
    classical_mds,
    mds_kruskal,
    pca,
    project_ellipsoid,
    stress,
)
from treelens.svg import coordinate_plot, scatter_with_ellipses
from treelens.uncertainty import minimum_volume_set


def _cloud(seed=0, n=50, m=5):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, m)) * np.array([5.0, 3.0, 1.0, 0.5, 0.1])[:m]


def test_pca_orthonormal_and_signed():
    x = _cloud()
    model = pca(x)
    v = model.rotation
    assert np.allclose(v.T @ v, np.eye(v.shape[1]), atol=1e-12)
    for j in range(v.shape[1]):
        assert v[np.argmax(np.abs(v[:, j])), j] > 0
    assert model.variance_explained.sum() == pytest.approx(1.0)
    assert np.all(np.diff(model.variance_explained) <= 0)
    assert np.allclose(model.inverse_transform(model.transform(x)), x)


def test_pca_sign_stable_under_row_order():
    x = _cloud(1)
    a = pca(x).rotation
    b = pca(x[::-1]).rotation
    assert np.allclose(a, b, atol=1e-10)


def test_pca_save_load(tmp_path):
    model = pca(_cloud(2), k=2)
    model.save(tmp_path / "pca.json")
    back = PcaModel.load(tmp_path / "pca.json")
    assert np.array_equal(back.rotation, model.rotation)
    assert np.array_equal(back.mean, model.mean)
    with pytest.raises(ValueError):
        pca(_cloud(2), k=9)


def test_projection_formula():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5, 5))
    s = minimum_volume_set(rng.normal(size=5), a @ a.T + np.eye(5))
    model = pca(_cloud(4))
    e = project_ellipsoid(s, model)
    v = model.rotation[:, :2]
    assert np.allclose(e.shape2, v.T @ s.shape @ v)
    assert np.allclose(e.center2, v.T @ (s.center - model.mean))
    assert e.c == s.c


def test_shadow_boundary_touches_support_function():
    # the shadow's extent along any unit u equals the set's extent along V u
    rng = np.random.default_rng(5)
    a = rng.normal(size=(4, 4))
    s = minimum_volume_set(np.zeros(4), a @ a.T + np.eye(4))
    model = pca(_cloud(6, m=4))
    e = project_ellipsoid(s, model)
    for theta in np.linspace(0, np.pi, 7):
        u = np.array([np.cos(theta), np.sin(theta)])
        w = model.rotation[:, :2] @ u
        full = np.sqrt(s.c * w @ s.shape @ w) + w @ (s.center - model.mean)
        edge = np.max(e.boundary(20000) @ u)
        assert edge == pytest.approx(full, rel=1e-6)


def test_ellipse_boundary_on_level_set():
    e = ProjectedEllipse(np.array([1.0, -2.0]), np.array([[2.0, 0.3], [0.3, 1.0]]), 5.99)
    b = e.boundary() - e.center2
    q = np.einsum("ij,ij->i", b, np.linalg.solve(e.shape2, b.T).T)
    assert np.allclose(q, 5.99)


def _dist(x):
    return np.sqrt(((x[:, None] - x[None]) ** 2).sum(-1))


def test_classical_mds_recovers_planar_points():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(12, 2))
    D = _dist(x)
    y = classical_mds(D, 2)
    assert np.allclose(_dist(y), D, atol=1e-10)
    assert stress(y, D) < 1e-12


def test_kruskal_mds_is_seeded_and_improves():
    rng = np.random.default_rng(1)
    D = _dist(rng.normal(size=(15, 6)))
    a = mds_kruskal(D, 2, seed=3)
    b = mds_kruskal(D, 2, seed=3)
    assert np.array_equal(a.points, b.points)
    assert a.stress <= stress(classical_mds(D, 2), D) + 1e-12
    assert np.allclose(a.points.mean(axis=0), 0)


def test_literal_variant():
    rng = np.random.default_rng(2)
    D = _dist(rng.normal(size=(8, 3)))
    res = mds_kruskal(D, 2, variant="literal")
    assert res.variant == "literal"
    assert res.stress <= res.initial_stress + 1e-12
    with pytest.raises(ValueError):
        mds_kruskal(D, 2, variant="other")


def test_mds_input_checks():
    with pytest.raises(ValueError):
        mds_kruskal(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError):
        mds_kruskal(np.ones((3, 3)))


def test_svg_is_deterministic():
    pts = np.array([[0.0, 1.0], [2.0, -1.0], [1.0, 0.5]])
    e = ProjectedEllipse(np.zeros(2), np.eye(2), 1.0)
    a = scatter_with_ellipses(pts, [e], groups=["x", "y", "x"], labels=["a", "b", "c"])
    b = scatter_with_ellipses(pts, [e], groups=["x", "y", "x"], labels=["a", "b", "c"])
    assert a == b
    assert a.startswith("<?xml") and a.rstrip().endswith("</svg>")
    assert "<title>c</title>" in a
    c = coordinate_plot([1.0, -0.5], [0.2, 0.3], "s1 (80% support)", "s2", ["p", "q"])
    assert "80% support" in c and "<rect" in c


def test_pca_reference_cases():
    t = np.linspace(-1, 1, 20)
    line = np.column_stack([t, 2 * t, -t])
    assert pca(line).variance_explained[0] == pytest.approx(1.0)
    iso = np.random.default_rng(0).normal(size=(10_000, 5))
    assert np.all(np.abs(pca(iso).variance_explained - 0.2) < 0.02)


def test_axis_aligned_and_spherical_shadows():
    axes = PcaModel(np.zeros(4), np.eye(4)[:, :2], np.array([0.5, 0.5]))
    d = np.array([4.0, 1.0, 9.0, 2.0])
    e = project_ellipsoid(minimum_volume_set(np.zeros(4), np.diag(d)), axes)
    lengths, _ = e.semi_axes()
    assert sorted(lengths) == pytest.approx(sorted(np.sqrt(e.c * d[:2])))
    model = pca(_cloud(7, m=4))
    round_ = project_ellipsoid(minimum_volume_set(np.ones(4), 0.3 * np.eye(4)), model)
    assert np.allclose(round_.shape2, 0.3 * np.eye(2))
