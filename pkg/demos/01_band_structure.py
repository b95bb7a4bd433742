# %% [markdown]
# # Band structure of the builtin lattices
#
# Every builtin lattice is a periodic graph. Its Laplacian, conjugated by the
# Floquet-Bloch transform, becomes a small Hermitian matrix of trigonometric
# polynomials. Here we look at the spectrum, the threshold energies and one
# real Fermi surface.

# %%
import numpy as np

from lattice_rellich.lattice_core import builtin_lattice
from lattice_rellich.momentum import (band_functions, char_poly, fermi_slice, spectrum,
                                      symbol_from_lattice, thresholds)

# %% [markdown]
# The symbol of the kagome lattice is 3x3. One band is flat at 1/2.

# %%
kagome = symbol_from_lattice(builtin_lattice("kagome"))
x = np.random.default_rng(0).uniform(-np.pi, np.pi, size=(5, 2))
print(band_functions(kagome, x).round(6))

# %% [markdown]
# The spectrum is the union of the band ranges.

# %%
for name in ("square", "triangular", "hexagonal", "kagome", "ladder"):
    print(f"{name:11s}", spectrum(symbol_from_lattice(builtin_lattice(name))))

# %% [markdown]
# Threshold energies are critical values of the characteristic polynomial
# `p(x, lam) = det(H0(x) - lam)` on the real torus. For the hexagonal lattice
# the saddle points sit at +-1/3 and the Dirac cones at 0.

# %%
for name in ("square", "hexagonal", "kagome"):
    ts = thresholds(symbol_from_lattice(builtin_lattice(name)))
    print(f"{name:9s}", np.round(ts.values, 9))

# %% [markdown]
# The square-lattice Fermi curve at `lam = 0` is the diamond
# `cos x1 + cos x2 = 0`; it passes through (pi/2, pi/2).

# %%
square = symbol_from_lattice(builtin_lattice("square"))
fs = fermi_slice(square, 0.0)
print(len(fs), "points, max |p| =", fs.abs_p.max())
print("closest to (pi/2, pi/2):", np.linalg.norm(fs.points - np.pi / 2, axis=1).min())
print("p at (pi/2, pi/2):", char_poly(square, np.array([np.pi / 2, np.pi / 2]), 0.0))
