# %% [markdown]
# # Connecting complex Fermi points to real ones
#
# For a regular energy the complex Fermi surface of the square or hexagonal
# lattice is connected inside a thin strip around the real torus. The paths
# are built in the cosine images, where the surface equation is linear or
# quadratic, and then lifted with a continuous inverse cosine.

# %%
import numpy as np

from lattice_rellich.fermi_connectivity import (hexagonal_connect, random_hexagonal_start,
                                                random_square_start, square_connect, verify_path)
from lattice_rellich.lattice_core import builtin_lattice
from lattice_rellich.momentum import symbol_from_lattice

rng = np.random.default_rng(3)

# %%
lam = 0.25
z0 = random_square_start(rng, lam, d=3)
a = 1.01 * np.linalg.norm(z0.imag) + 1e-3
ps = square_connect(z0, lam, a)
rep = verify_path(ps, symbol_from_lattice(builtin_lattice("square", 3)), lam)
print("start", np.round(z0, 4))
print("end  ", np.round(ps.points[-1], 4))
print(rep.to_dict())

# %% [markdown]
# Imaginary parts shrink to zero along the way.

# %%
for t in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
    print(t, np.round(np.abs(ps.points[ps.at(t)].imag).max(), 6))

# %%
lam = -0.6
z0 = random_hexagonal_start(rng, lam)
ps = hexagonal_connect(z0, lam, 1.01 * np.linalg.norm(z0.imag) + 1e-3)
print(verify_path(ps, symbol_from_lattice(builtin_lattice("hexagonal")), lam).to_dict())
