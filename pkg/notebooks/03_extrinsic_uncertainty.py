# %% [markdown]
# # Uncertainty from known precision covariates
#
# Each gene tree comes with a rate r_i; a faster-evolving gene is assumed
# to give a noisier tree.  Trees are mapped into the log-map chart at their
# 1/r-weighted Fréchet mean, a spherical Gaussian N(x_i, sigma^2 r_i I) is
# fitted by maximum likelihood, and 95% sets are drawn on the first two
# principal components.

# %%
import os
from pathlib import Path

import numpy as np

from treelens.frechet import MeanConfig, frechet_mean
from treelens.logmap import log_map_batch
from treelens.projection import pca, project_ellipsoid
from treelens.simulate import synthetic_collection
from treelens.svg import scatter_with_ellipses
from treelens.uncertainty import fit_extrinsic, minimum_volume_set, outlier_variance_change

out = Path(os.environ.get("TREELENS_NOTEBOOK_OUT", "notebook_output")) / "extrinsic"
out.mkdir(parents=True, exist_ok=True)

rates = np.random.default_rng(0).uniform(0.3, 3.0, 40)
genes = synthetic_collection(40, 10, seed=1, rates=rates, sigma=0.15, nni_prob=0.3)

# %%
mean, report = frechet_mean(genes, MeanConfig(weights=1 / genes.rates, max_iter=4000, seed=0))
print(f"{report.iterations} iterations, converged: {report.converged}, objective {report.objective:.4f}")

batch = log_map_batch(mean, genes)
print(f"chart dimension {batch.matrix.shape[1]}, cone-path fraction {batch.cone_path_fraction():.2f}")

# %% [markdown]
# The maximum likelihood center is the 1/r-weighted average of the
# coordinates; sigma^2 is the weighted residual sum divided by n m.

# %%
fit = fit_extrinsic(batch.matrix, genes.rates)
print("sigma^2 =", round(fit.sigma2, 5))
print("relative change without the 4 farthest trees:", round(outlier_variance_change(batch.matrix, genes.rates), 3))

# %%
sets = [minimum_volume_set(x, fit.sigma2 * r * np.eye(batch.matrix.shape[1])) for x, r in zip(batch.matrix, genes.rates)]
model = pca(batch.matrix)
print("variance on PC1+PC2:", round(float(model.variance_explained[:2].sum()), 3))
shadows = [project_ellipsoid(s, model) for s in sets]
svg = scatter_with_ellipses(model.transform(batch.matrix)[:, :2], shadows, labels=list(genes.names),
                            title="95% sets from gene rates")
(out / "extrinsic.svg").write_text(svg)
print("wrote", out / "extrinsic.svg")
