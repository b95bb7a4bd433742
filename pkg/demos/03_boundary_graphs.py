# %% [markdown]
# # Finite graphs with boundary
#
# A subset S of interior vertices has an extreme point when some boundary
# vertex sees it as the unique nearest member. When every S with two or more
# elements has two extreme points, and neighbors of boundary vertices are
# pairwise adjacent, zero Dirichlet and zero Neumann data force a solution to
# vanish. The kagome lattice breaks this.

# %%
import numpy as np

from lattice_rellich.lattice_core import builtin_lattice
from lattice_rellich.ucp import (boundary_graph_from_box, check_a5, dirichlet_neumann_nullity,
                                 extreme_points, hexagon_ring, kagome_flat_band_vector,
                                 two_points_condition)

# %%
square = boundary_graph_from_box(builtin_lattice("square"), 1, norm="max")
print(len(square.interior), "interior,", len(square.boundary), "boundary")
print(two_points_condition(square).to_dict())
print("boundary neighbors pairwise adjacent:", check_a5(square).passed)

# %%
rng = np.random.default_rng(0)
print([dirichlet_neumann_nullity(square, rng.uniform(-1, 1, 9), rng.uniform(-1, 1)) for _ in range(10)])

# %% [markdown]
# On a kagome patch the six vertices around a hexagon have no extreme point:
# every boundary vertex is equally close to two of them.

# %%
kagome = builtin_lattice("kagome")
patch = boundary_graph_from_box(kagome, 2, norm="max")
ring = hexagon_ring(kagome)
print("extreme points of the ring:", extreme_points(patch, ring))
print(two_points_condition(patch, mode="random", candidates=[ring]).result)

# %% [markdown]
# The alternating vector on the ring is an eigenfunction at 1/2 with compact
# support, so the Dirichlet plus Neumann problem has a kernel.

# %%
f = kagome_flat_band_vector(kagome, (0, 0), 3)
print(f)
print("nullity at 1/2:", dirichlet_neumann_nullity(patch, None, 0.5))
