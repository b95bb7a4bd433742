"""Discrete Schrodinger operators on periodic lattices: spectra, thresholds,
height-function growth estimates and unique continuation checks."""
from .lattice_core import LatticeSpec, Vertex, box_vertices, builtin_lattice, neighbors, realize
from .operators import (Potential, TruncatedOperator, apply_laplacian, apply_schrodinger,
                        assemble_truncated, eigensolve_symmetric, radiation_estimate)
from .momentum import (Symbol, band_functions, char_poly, exclusion_set_T1, fermi_slice,
                       grad_char_poly, spectrum, symbol_from_lattice, thresholds)
from .height import (builtin_height, cone_membership, decay_bound_sequence, dependence_set,
                     dependence_shell, growth_bound_check, verify_height)
from .ucp import (BoundaryGraph, boundary_graph_from_box, boundary_graph_from_vertices, check_a5,
                  graph_ball, dirichlet_neumann_nullity,
                  extreme_points, graph_distance, kagome_flat_band_vector, neumann_residual,
                  two_points_condition)
from .fermi_connectivity import (acos_branch, cosine_ellipse, hexagonal_connect, square_connect,
                                 verify_path)

__version__ = "0.1.0"
