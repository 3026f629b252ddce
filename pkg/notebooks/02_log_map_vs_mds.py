# %% [markdown]
# # Log map versus MDS on nearest-neighbour interchanges
#
# A random 50-taxon tree with unit branch lengths has 94 NNI neighbours,
# all at BHV distance 2.  The log map at the base tree keeps every one of
# them exactly at distance 2; a Kruskal MDS embedding of the full distance
# matrix cannot.

# %%
import os
from pathlib import Path

import numpy as np

from treelens import cli
from treelens.geodesic import bhv_distance
from treelens.logmap import log_map_batch
from treelens.tree_core import nni_neighbors, random_resolved_tree

out = Path(os.environ.get("TREELENS_NOTEBOOK_OUT", "notebook_output")) / "nni"

base = random_resolved_tree(50, "unit", seed=0)
nbrs = nni_neighbors(base)
print(len(nbrs), "neighbours; distances:", {round(bhv_distance(base, t), 12) for t in nbrs})

# %% [markdown]
# Each neighbour differs from the base in one split, so its log-map
# coordinates equal the base coordinates except for a -1 in the column of
# the split that was removed.

# %%
batch = log_map_batch(base, [base] + nbrs)
print("negative coordinates per tree:", sorted(set(batch.negative_counts[1:])))
print("distance to base in the chart:", np.unique(np.linalg.norm(batch.matrix - batch.base_vector, axis=1)[1:]))

# %% [markdown]
# The command below reruns the whole comparison and writes the CSV and
# both scatter plots.

# %%
manifest = cli.cmd_nni_experiment(out=out, n_taxa=50, seed=0, k=3)
print(manifest["summary"])
print("figures:", sorted(p.name for p in out.glob("*.svg")))
