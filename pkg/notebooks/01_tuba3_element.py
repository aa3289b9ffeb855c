"""
The TUBA3 plate element
=======================

A tour of the 18-dof quintic triangle: the DOF functionals of its shape
functions, the closed-form stiffness against numerical integration, and a
patch test on a small graded mesh.
"""

import numpy as np

from tubadelam.laminate import T300_1076, plate_bending_stiffness
from tubadelam.trigeom import Triangle
from tubadelam.tuba3 import (PlateElement, element_stiffness, element_stiffness_quadrature,
                             shape_functions, shape_gradients, shape_second_derivatives)

# %%
# Each corner carries ``w, w_x, w_y, w_xx, w_xy, w_yy``.  Applying those six
# functionals at the three corners to all 18 shape functions gives the
# identity matrix.
tri = Triangle([(0.0, 0.0), (3.0, 0.4), (1.1, 2.2)])
rows = []
for n in range(3):
    L = np.eye(3)[n]
    N, G, B = shape_functions(L, tri), shape_gradients(L, tri), shape_second_derivatives(L, tri)
    rows += [N, G[0], G[1], B[0], 0.5 * B[2], B[1]]
M = np.array(rows)
print("duality error:", np.abs(M - np.eye(18)).max())

# %%
# The stiffness is assembled from exact monomial integrals.  A 52-point
# composite rule integrates the same degree-6 integrand exactly, so both
# agree to round-off.
D = plate_bending_stiffness(T300_1076, 1.5)
elem = PlateElement(tri, D, 1.0)
K = element_stiffness(elem)
Kq = element_stiffness_quadrature(elem, levels=1, n_points=13)
print("closed form vs quadrature:", np.abs(K - Kq).max() / np.abs(K).max())

# %%
# Three rigid-body modes (translation and two rotations) carry no energy.
lam = np.linalg.eigvalsh(K)
print("smallest eigenvalues / largest:", lam[:4] / lam[-1])
