# %% [markdown]
# # Tree space basics
#
# Trees on a fixed taxon set are points of BHV space: one nonnegative
# coordinate per internal split, glued along faces where splits shrink to
# zero.  This notebook parses a few trees, measures geodesic distances and
# looks at the shape of the shortest paths.

# %%
import math

from treelens.geodesic import bhv_geodesic, cone_path_length, is_cone_path, point_on_geodesic
from treelens.tree_core import rf_distance, topology_count, topology_ratio
from treelens.treeio import parse_newick, write_newick

coll = parse_newick("""
alpha ((A:1,B:1):1,(C:1,D:1):2,(E:1,F:1):1);
beta  ((A:1,B:1):1,(C:1,E:1):2,(D:1,F:1):1);
gamma ((A:1,C:1):3,(B:1,D:1):1,(E:1,F:1):1);
delta (A:1,B:1,(C:1,(D:1,(E:1,F:1):1):2):1);
omega (A:1,C:1,(B:1,(F:1,(D:1,E:1):3):2):1);
""")
print(coll.taxa.labels, coll.names)

# %% [markdown]
# Same-topology trees sit in one Euclidean orthant.  Trees that disagree
# on splits are joined by a path that bends at orthant boundaries; when
# every conflicting split must shrink to zero at once the path runs
# through the star tree (a cone path).

# %%
for i in range(len(coll)):
    for j in range(i + 1, len(coll)):
        path = bhv_geodesic(coll[i], coll[j])
        print(f"{coll.names[i]:>5} -> {coll.names[j]:<5} d = {path.distance:.4f}  "
              f"cone bound = {cone_path_length(path):.4f}  support pairs = {len(path.support)}  "
              f"cone path: {is_cone_path(path)}  RF = {rf_distance(coll[i], coll[j])}")

# %% [markdown]
# Pairs with two support pairs are different.  From delta to omega the
# short E|F edge can vanish early, so the geodesic passes through an
# intermediate orthant instead of the star tree and is strictly shorter
# than the cone path.  Points along it split the distance exactly.

# %%
path = bhv_geodesic(coll[3], coll[4])
for s in (0.25, 0.5, 0.75):
    p = point_on_geodesic(path, s)
    print(s, write_newick(p))

# %% [markdown]
# The number of resolved topologies grows much faster than the number of
# sign patterns of a Euclidean chart of the same dimension.

# %%
for m in (2, 4, 8, 16):
    r = topology_ratio(m)
    print(f"m = {m:2d}: {topology_count(m):,} topologies, {float(r):,.1f} per orthant")
assert topology_ratio(4) > 50 and math.floor(topology_ratio(8)) > 130_000
