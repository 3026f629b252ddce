# %% [markdown]
# # Uncertainty from replicate trees
#
# When every estimate comes with replicates (bootstrap or posterior
# samples), each group gets its own mean and covariance in a shared
# log-map chart.  The chart's base is the Fréchet mean of the group means.

# %%
import os
from pathlib import Path

from treelens.frechet import MeanConfig, frechet_mean
from treelens.logmap import log_map_batch
from treelens.projection import pca, project_ellipsoid
from treelens.simulate import grouped_collection
from treelens.svg import scatter_with_ellipses
from treelens.uncertainty import fit_intrinsic, minimum_volume_set

out = Path(os.environ.get("TREELENS_NOTEBOOK_OUT", "notebook_output")) / "intrinsic"
out.mkdir(parents=True, exist_ok=True)

reps = grouped_collection([12, 12, 5], n_taxa=8, seed=3, spread=0.6, sigma=0.08)
labels = sorted(set(reps.groups))
members = {g: [i for i, x in enumerate(reps.groups) if x == g] for g in labels}

# %%
cfg = MeanConfig(max_iter=3000, seed=0)
group_means = [frechet_mean(reps.subset(members[g]), cfg)[0] for g in labels]
base, _ = frechet_mean(group_means, cfg)
batch = log_map_batch(base, reps)
print("log-map failures:", batch.errors or "none")

# %% [markdown]
# Groups with few replicates relative to the chart dimension fall back to
# a shrinkage covariance so that the set is still a proper ellipsoid.

# %%
fit = fit_intrinsic({g: batch.matrix[members[g]] for g in labels})
for g in labels:
    print(g, fit.n[g], "replicates ->", fit.estimator[g], f"(shrinkage {fit.shrinkage[g]:.2f})")

# %%
model = pca(batch.matrix)
shadows = [project_ellipsoid(minimum_volume_set(fit.means[g], fit.covs[g]), model) for g in labels]
svg = scatter_with_ellipses(model.transform(batch.matrix)[:, :2], shadows, groups=list(reps.groups),
                            title="95% sets from replicates")
(out / "intrinsic.svg").write_text(svg)
print("wrote", out / "intrinsic.svg")
