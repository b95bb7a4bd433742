# %% [markdown]
# # Truncated operators and localization
#
# Finite boxes of the square lattice with a decaying random potential. The
# most localized eigenvector lives outside the band [-1, 1], and its mass
# beyond half the box radius falls fast as the box grows.

# %%
import numpy as np

from lattice_rellich.lattice_core import builtin_lattice
from lattice_rellich.operators import Potential, assemble_truncated, eigensolve_symmetric

spec = builtin_lattice("square")
V = Potential.exponential(5.0, 1.0, seed=0)

# %%
for R in (10, 20, 30):
    T = assemble_truncated(spec, V, R)
    w, Q = eigensolve_symmetric(T)
    norms = np.array([v.norm for v in T.box])
    mass = Q ** 2
    tails = mass[norms > R / 2].sum(axis=0)
    i = int(np.argmin(tails))
    print(f"R={R:2d}  N={T.N:5d}  lam={w[i]:+.4f}  tail={tails[i]:.2e}")
