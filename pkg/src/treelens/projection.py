"""Principal components of log-map batches, ellipsoid shadows, and Kruskal MDS."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

from .uncertainty import UncertaintySet

STRESS_VARIANTS = ("kruskal1", "literal")


@dataclass(frozen=True)
class PcaModel:
    """Centering vector, orthonormal rotation (m x k) and explained variance."""

    mean: np.ndarray
    rotation: np.ndarray
    variance_explained: np.ndarray

    @property
    def k(self) -> int:
        return self.rotation.shape[1]

    def transform(self, x) -> np.ndarray:
        return (np.atleast_2d(np.asarray(x, dtype=float)) - self.mean) @ self.rotation

    def inverse_transform(self, y) -> np.ndarray:
        return np.atleast_2d(y) @ self.rotation.T + self.mean

    def to_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "rotation": [[float(v) for v in row] for row in self.rotation],
            "variance_explained": [float(v) for v in self.variance_explained],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PcaModel":
        return cls(
            np.array(doc["mean"], dtype=float),
            np.array(doc["rotation"], dtype=float).reshape(len(doc["mean"]), -1),
            np.array(doc["variance_explained"], dtype=float),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PcaModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def pca(batch, k: int | None = None) -> PcaModel:
    """PCA by SVD of the column-centred batch.

    Each component is signed so that its largest-magnitude entry is
    positive, which keeps rotations reproducible between runs.
    """
    x = np.asarray(batch, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("pca needs an n x m batch with n >= 2")
    n, m = x.shape
    mean = x.mean(axis=0)
    _, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    k = min(n, m) if k is None else k
    if not 1 <= k <= min(n, m):
        raise ValueError(f"k must lie in [1, {min(n, m)}]")
    v = vt[:k].T.copy()
    for j in range(k):
        i = int(np.argmax(np.abs(v[:, j])))
        if v[i, j] < 0:
            v[:, j] = -v[:, j]
    total = float(np.sum(s**2))
    frac = s[:k] ** 2 / total if total > 0 else np.zeros(k)
    return PcaModel(mean, v, frac)


@dataclass(frozen=True)
class ProjectedEllipse:
    """{y : (y - center2)' shape2^-1 (y - center2) <= c} in a principal plane."""

    center2: np.ndarray
    shape2: np.ndarray
    c: float

    def semi_axes(self) -> tuple[np.ndarray, np.ndarray]:
        """(lengths, directions) with directions as columns, longest first."""
        w, v = np.linalg.eigh(self.shape2)
        order = np.argsort(w)[::-1]
        return np.sqrt(self.c * w[order]), v[:, order]

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(points) - self.center2
        sol = np.linalg.solve(self.shape2, pts.T).T
        return np.einsum("ij,ij->i", pts, sol) <= self.c

    def boundary(self, n_points: int = 72) -> np.ndarray:
        lengths, dirs = self.semi_axes()
        t = np.linspace(0.0, 2 * np.pi, n_points, endpoint=False)
        circle = np.stack([np.cos(t) * lengths[0], np.sin(t) * lengths[1]])
        return (dirs @ circle).T + self.center2


def project_ellipsoid(uset: UncertaintySet, model: PcaModel, components=(0, 1)) -> ProjectedEllipse:
    """Orthogonal shadow of an m-dimensional set on two principal axes.

    The squared radius ``c`` is carried over unchanged, so the shadow keeps
    the size the set has in the full space.
    """
    comps = list(components)
    if model.k < 2 or len(comps) != 2 or max(comps) >= model.k:
        raise ValueError("projection needs two available principal components")
    v = model.rotation[:, comps]
    center2 = v.T @ (uset.center - model.mean)
    shape2 = v.T @ uset.shape @ v
    shape2 = (shape2 + shape2.T) / 2
    if np.linalg.eigvalsh(shape2)[0] <= 0:
        raise np.linalg.LinAlgError("degenerate projection: projected shape is singular")
    return ProjectedEllipse(center2, shape2, uset.c)


# ---------------------------------------------------------------------------
# MDS


def _pairwise(x: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _check_dissimilarity(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("D must be square")
    if not np.allclose(D, D.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(D).max(initial=0)))):
        raise ValueError("D must be symmetric")
    if np.any(np.diag(D) != 0) or np.any(D < 0):
        raise ValueError("D must have a zero diagonal and nonnegative entries")
    return D


def stress(points, D, variant: str = "kruskal1") -> float:
    """Stress of an embedding.

    ``"kruskal1"``: sqrt(sum (D_ij - d_ij)^2 / sum D_ij^2) over pairs.
    ``"literal"``: sqrt(sum_{i != j} (D_ij - d_ij^2)^2), the residual of the
    dissimilarity against squared embedded distances.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    D = np.asarray(D, dtype=float)
    if D.shape != (x.shape[0], x.shape[0]):
        raise ValueError("points and D dimensions do not match")
    d = _pairwise(x)
    iu = np.triu_indices(len(x), 1)
    if variant == "kruskal1":
        denom = float(np.sum(D[iu] ** 2))
        if denom == 0:
            return 0.0
        return float(np.sqrt(np.sum((D[iu] - d[iu]) ** 2) / denom))
    if variant == "literal":
        return float(np.sqrt(2 * np.sum((D[iu] - d[iu] ** 2) ** 2)))
    raise ValueError(f"unknown stress variant {variant!r}")


def classical_mds(D, k: int) -> np.ndarray:
    """Torgerson scaling: top eigenvectors of the double-centred -D^2/2."""
    n = len(D)
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ (D**2) @ J
    w, v = np.linalg.eigh((B + B.T) / 2)
    order = np.argsort(w)[::-1][:k]
    w, v = w[order], v[:, order]
    x = v * np.sqrt(np.clip(w, 0, None))
    if x.shape[1] < k:
        x = np.hstack([x, np.zeros((n, k - x.shape[1]))])
    return x


def _smacof(D, x, max_iter, tol):
    n = len(D)
    iu = np.triu_indices(n, 1)
    norm = float(np.sum(D[iu] ** 2)) or 1.0

    def raw(y):
        return float(np.sum((D[iu] - _pairwise(y)[iu]) ** 2))

    s_old = raw(x)
    it = 0
    for it in range(1, max_iter + 1):
        d = _pairwise(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d > 0, D / d, 0.0)
        B = -ratio
        np.fill_diagonal(B, 0.0)
        np.fill_diagonal(B, -B.sum(axis=1))
        x = B @ x / n
        s_new = raw(x)
        if s_old - s_new <= tol * max(s_old, 1e-300) or s_new / norm < 1e-30:
            s_old = s_new
            break
        s_old = s_new
    return x, it


def _literal_refine(D, x):
    n, k = x.shape
    iu = np.triu_indices(n, 1)

    def f(flat):
        y = flat.reshape(n, k)
        diff = y[:, None, :] - y[None, :, :]
        sq = np.sum(diff * diff, axis=-1)
        r = D - sq
        np.fill_diagonal(r, 0.0)
        val = float(np.sum(r[iu] ** 2) * 2)
        grad = -8 * np.einsum("ij,ijk->ik", r, diff)
        return val, grad.ravel()

    res = optimize.minimize(f, x.ravel(), jac=True, method="L-BFGS-B",
                            options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12})
    y = res.x.reshape(n, k)
    return y if f(y.ravel())[0] <= f(x.ravel())[0] else x


@dataclass(frozen=True)
class MdsResult:
    points: np.ndarray
    stress: float
    initial_stress: float
    variant: str
    iterations: int


def mds_kruskal(
    D,
    k: int = 2,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-9,
    variant: str = "kruskal1",
) -> MdsResult:
    """Metric MDS by iterative majorization (SMACOF).

    Starts from classical scaling, runs one extra start from a seeded random
    configuration and keeps the lower stress.  With ``variant="literal"``
    the best configuration is further refined by L-BFGS on the literal
    objective.
    """
    D = _check_dissimilarity(D)
    if variant not in STRESS_VARIANTS:
        raise ValueError(f"variant must be one of {STRESS_VARIANTS}")
    n = len(D)
    if n < 2:
        raise ValueError("mds needs at least 2 objects")
    x0 = classical_mds(D, k)
    init = stress(x0, D, variant)
    best, best_s, best_it = x0, stress(x0, D, "kruskal1"), 0
    rng = np.random.default_rng(seed)
    scale = float(np.sqrt(np.mean(D**2))) or 1.0
    for start in (x0, rng.normal(scale=scale, size=(n, k))):
        x, it = _smacof(D, start, max_iter, tol)
        s = stress(x, D, "kruskal1")
        if s < best_s:
            best, best_s, best_it = x, s, it
    if variant == "literal":
        cands = [best, x0]
        best = min(cands, key=lambda y: stress(y, D, "literal"))
        best = _literal_refine(D, best)
    best = best - best.mean(axis=0)
    return MdsResult(best, stress(best, D, variant), init, variant, best_it)
