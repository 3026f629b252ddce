"""Gaussian uncertainty models on log-map coordinates.

Extrinsic model: row i is N(center, sigma^2 r_i I_m) for known positive
covariates r_i.  Intrinsic model: replicate rows of group g are
N(mean_g, Sigma_g) with an unstructured covariance per group.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize, special

NORMALIZATIONS = ("mle", "literal")
ESTIMATORS = ("auto", "mle", "shrinkage")


@dataclass(frozen=True)
class ExtrinsicFit:
    center: np.ndarray
    sigma2: float
    rates: np.ndarray
    normalization: str = "mle"

    @property
    def per_tree_variance(self) -> np.ndarray:
        return self.sigma2 * self.rates

    def to_dict(self) -> dict:
        return {
            "model": "extrinsic",
            "center": [float(x) for x in self.center],
            "sigma2": float(self.sigma2),
            "rates": [float(r) for r in self.rates],
            "normalization": self.normalization,
        }


def fit_extrinsic(batch, rates, normalization: str = "mle") -> ExtrinsicFit:
    """Maximum likelihood fit of the rate-weighted spherical Gaussian model.

    ``center`` is the 1/r-weighted mean of the rows.  With ``"mle"`` the
    variance is sum_i ||x_i - center||^2 / r_i divided by n*m, the exact
    maximiser for the scalar sigma^2; ``"literal"`` divides by n only.
    """
    x = np.asarray(batch, dtype=float)
    r = np.asarray(rates, dtype=float)
    if x.ndim != 2:
        raise ValueError("batch must be an n x m matrix")
    n, m = x.shape
    if n < 2:
        raise ValueError("fit_extrinsic needs at least 2 rows")
    if r.shape != (n,):
        raise ValueError("one rate per row required")
    if np.any(~(r > 0)):
        raise ValueError("nonpositive rate")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    inv = 1.0 / r
    center = (inv @ x) / inv.sum()
    resid = np.sum((x - center) ** 2, axis=1)
    total = float(np.sum(resid * inv))
    sigma2 = total / (n * m) if normalization == "mle" else total / n
    return ExtrinsicFit(center, sigma2, r.copy(), normalization)


def fit_extrinsic_multi(batch, covariates) -> tuple[np.ndarray, np.ndarray]:
    """Experimental: variance sum_l s2_l * r_i^(l) with s2_l >= 0.

    ``covariates`` is n x L.  The columns must be linearly independent.
    Returns (center, s2) maximising the Gaussian likelihood; the center is
    profiled out as the precision-weighted mean.
    """
    x = np.asarray(batch, dtype=float)
    R = np.asarray(covariates, dtype=float)
    n, m = x.shape
    if R.ndim == 1:
        R = R[:, None]
    if R.shape[0] != n:
        raise ValueError("one covariate row per batch row required")
    if np.any(R < 0):
        raise ValueError("covariates must be nonnegative")
    if np.linalg.matrix_rank(R) < R.shape[1]:
        raise ValueError("covariate vectors are linearly dependent")

    def center_for(v):
        w = 1.0 / v
        return (w @ x) / w.sum()

    def nll(theta):
        v = R @ theta
        if np.any(v <= 0):
            return np.inf
        c = center_for(v)
        resid = np.sum((x - c) ** 2, axis=1)
        return 0.5 * float(np.sum(m * np.log(v) + resid / v))

    start = fit_extrinsic(x, R.sum(axis=1)).sigma2 * np.ones(R.shape[1])
    res = optimize.minimize(
        nll, start, method="L-BFGS-B", bounds=[(1e-12, None)] * R.shape[1],
        options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10_000},
    )
    theta = res.x
    return center_for(R @ theta), theta


@dataclass(frozen=True)
class IntrinsicFit:
    means: dict
    covs: dict
    estimator: dict
    n: dict
    shrinkage: dict

    def to_dict(self) -> dict:
        return {
            "model": "intrinsic",
            "groups": {
                str(g): {
                    "mean": [float(v) for v in self.means[g]],
                    "covariance": [[float(v) for v in row] for row in self.covs[g]],
                    "estimator": self.estimator[g],
                    "shrinkage": float(self.shrinkage[g]),
                    "n": int(self.n[g]),
                }
                for g in self.means
            },
        }


def _oas(x: np.ndarray) -> tuple[np.ndarray, float]:
    """Oracle approximating shrinkage toward (trace(S)/m) I."""
    n, m = x.shape
    centered = x - x.mean(axis=0)
    S = centered.T @ centered / n
    tr = float(np.trace(S))
    tr2 = float(np.sum(S * S))
    mu = tr / m
    denom = (n + 1 - 2 / m) * (tr2 - tr * tr / m)
    if denom <= 0:
        rho = 1.0
    else:
        rho = min(1.0, max(0.0, ((1 - 2 / m) * tr2 + tr * tr) / denom))
    return (1 - rho) * S + rho * mu * np.eye(m), rho


def fit_group(x, estimator: str = "auto") -> tuple[np.ndarray, np.ndarray, str, float]:
    x = np.asarray(x, dtype=float)
    n, m = x.shape
    if n < 2:
        raise ValueError("each group needs at least 2 rows")
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    if estimator == "auto":
        estimator = "shrinkage" if n <= 2 * m else "mle"
    mean = x.mean(axis=0)
    if estimator == "mle":
        c = x - mean
        cov = c.T @ c / n
        rho = 0.0
    else:
        cov, rho = _oas(x)
    cov = (cov + cov.T) / 2
    return mean, cov, estimator, rho


def fit_intrinsic(batches: Mapping[str, np.ndarray], estimator: str = "auto") -> IntrinsicFit:
    """Per-group mean and covariance of log-map replicates.

    ``auto`` uses shrinkage when a group has n_i <= 2m rows, the maximum
    likelihood covariance otherwise.
    """
    means, covs, est, ns, rhos = {}, {}, {}, {}, {}
    for g, x in batches.items():
        mean, cov, e, rho = fit_group(x, estimator)
        means[g], covs[g], est[g], ns[g], rhos[g] = mean, cov, e, len(x), rho
    return IntrinsicFit(means, covs, est, ns, rhos)


def chi_square_quantile(dof: int, p: float) -> float:
    """Inverse CDF of the chi-square distribution with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return 2.0 * float(special.gammaincinv(dof / 2.0, p))


@dataclass(frozen=True)
class UncertaintySet:
    """The ellipsoid {x : (x - center)' shape^-1 (x - center) <= c}."""

    center: np.ndarray
    shape: np.ndarray
    c: float
    alpha: float

    @property
    def dim(self) -> int:
        return len(self.center)

    def semi_axes(self) -> np.ndarray:
        return np.sqrt(self.c * np.linalg.eigvalsh(self.shape))

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(points) - self.center
        sol = np.linalg.solve(self.shape, pts.T).T
        return np.einsum("ij,ij->i", pts, sol) <= self.c

    def to_dict(self) -> dict:
        return {
            "center": [float(v) for v in self.center],
            "shape": [[float(v) for v in row] for row in self.shape],
            "c": float(self.c),
            "alpha": float(self.alpha),
        }


def minimum_volume_set(center, shape, alpha: float = 0.05) -> UncertaintySet:
    """Smallest-volume set of Gaussian measure 1 - alpha under N(center, shape)."""
    center = np.asarray(center, dtype=float)
    shape = np.atleast_2d(np.asarray(shape, dtype=float))
    m = len(center)
    if shape.shape != (m, m):
        raise ValueError("shape must be m x m")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not np.allclose(shape, shape.T, atol=1e-12 * max(1.0, np.abs(shape).max())):
        raise ValueError("shape must be symmetric")
    eig = np.linalg.eigvalsh(shape)
    if eig[0] <= 0:
        raise np.linalg.LinAlgError("shape matrix is singular or not positive definite")
    return UncertaintySet(center, shape, chi_square_quantile(m, 1 - alpha), alpha)


def outlier_variance_change(batch, rates, k: int = 4, normalization: str = "mle") -> float:
    """Relative change in the extrinsic sigma^2 after dropping the ``k`` rows
    farthest from the fitted center (negative means the variance shrinks)."""
    x = np.asarray(batch, dtype=float)
    full = fit_extrinsic(x, rates, normalization)
    dist = np.linalg.norm(x - full.center, axis=1)
    keep = np.sort(np.argsort(-dist, kind="stable")[k:])
    reduced = fit_extrinsic(x[keep], np.asarray(rates)[keep], normalization)
    return (reduced.sigma2 - full.sigma2) / full.sigma2


def dump_fit(fit, path=None, **extra) -> str:
    """Serialize a fit (plus e.g. alpha and c) as sorted-key JSON."""
    doc = fit.to_dict()
    doc.update(extra)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def sets_for_rows(batch, variances: Sequence[float], alpha: float) -> list[UncertaintySet]:
    """Spherical sets N(x_i, v_i I) for every row of ``batch``."""
    x = np.asarray(batch, dtype=float)
    m = x.shape[1]
    return [minimum_volume_set(row, v * np.eye(m), alpha) for row, v in zip(x, variances)]
