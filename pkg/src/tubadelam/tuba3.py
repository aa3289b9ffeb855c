"""TUBA3 triangle: a C1 quintic plate bending element.

Each shape function is stored as the coefficient vector of a homogeneous
quintic in the area coordinates.  Cartesian derivatives then follow
exactly from ``d/dx = sum_i b_i/(2A) d/dL_i`` (and ``c_i`` for ``y``), so
first derivatives are quartic and curvatures are cubic polynomials.  The
cubic coefficients play the role of the geometry matrix Q, and the
stiffness integrates in closed form with the factorial formula for
monomials in area coordinates.

Nodal DOF order is ``[w, w_x, w_y, w_xx, w_xy, w_yy]`` for each corner,
and curvature vectors are ``[w_xx, w_yy, 2 w_xy]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

from .laminate import PlateStiffness
from .trigeom import (CYCLIC, QuadratureRule, SubdomainLayout, Triangle,
                      composite_points, eval_monomials, gauss_rule,
                      monomial_exponents, subdivide)

QUINTIC = monomial_exponents(5)
QUARTIC = monomial_exponents(4)
# L1^3, L2^3, L3^3, L1^2 L2, L1^2 L3, L2^2 L1, L2^2 L3, L3^2 L1, L3^2 L2, L1 L2 L3
CUBIC = np.array([(3, 0, 0), (0, 3, 0), (0, 0, 3), (2, 1, 0), (2, 0, 1),
                  (1, 2, 0), (0, 2, 1), (1, 0, 2), (0, 1, 2), (1, 1, 1)])

NDOF = 18


def _index(exponents):
    return {tuple(e): n for n, e in enumerate(exponents)}


def _derivative_matrix(src, dst, var):
    """Matrix taking coefficients over ``src`` monomials to those of d/dL_var."""
    lookup = _index(dst)
    M = np.zeros((len(dst), len(src)))
    for n, e in enumerate(src):
        if e[var] > 0:
            f = np.array(e)
            f[var] -= 1
            M[lookup[tuple(f)], n] = e[var]
    return M


_D5 = np.stack([_derivative_matrix(QUINTIC, QUARTIC, i) for i in range(3)])  # (3, 15, 21)
_D4 = np.stack([_derivative_matrix(QUARTIC, CUBIC, i) for i in range(3)])    # (3, 10, 15)
_Q5 = _index(QUINTIC)


@lru_cache(maxsize=None)
def _em_table(a: int, b: int, c: int) -> float:
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)


# integrals of products of cubic basis terms over a triangle, per unit 2A
_R_UNIT = np.array([[_em_table(*(p + q)) for q in CUBIC] for p in CUBIC])


def _six_terms(b1, b2, b3, c1, c2, c3, r21, r31):
    """Terms of the six shape functions attached to corner 1.

    Each entry is ``(coefficient, (p1, p2, p3))`` with powers of L1, L2, L3.
    """
    one = np.ones_like(b1)
    return [
        [(one, (5, 0, 0)), (5 * one, (4, 1, 0)), (5 * one, (4, 0, 1)),
         (10 * one, (3, 2, 0)), (10 * one, (3, 0, 2)), (20 * one, (3, 1, 1)),
         (30 * r21, (2, 1, 2)), (30 * r31, (2, 2, 1))],
        [(c3, (4, 1, 0)), (-c2, (4, 0, 1)), (4 * c3, (3, 2, 0)),
         (-4 * c2, (3, 0, 2)), (4 * (c3 - c2), (3, 1, 1)),
         (-(3 * c1 + 15 * r21 * c2), (2, 1, 2)),
         (3 * c1 + 15 * r31 * c3, (2, 2, 1))],
        [(-b3, (4, 1, 0)), (b2, (4, 0, 1)), (-4 * b3, (3, 2, 0)),
         (4 * b2, (3, 0, 2)), (4 * (b2 - b3), (3, 1, 1)),
         (3 * b1 + 15 * r21 * b2, (2, 1, 2)),
         (-(3 * b1 + 15 * r31 * b3), (2, 2, 1))],
        [(c3 ** 2 / 2, (3, 2, 0)), (c2 ** 2 / 2, (3, 0, 2)),
         (-c2 * c3, (3, 1, 1)),
         (c1 * c2 + 2.5 * r21 * c2 ** 2, (2, 1, 2)),
         (c1 * c3 + 2.5 * r31 * c3 ** 2, (2, 2, 1))],
        [(-b3 * c3, (3, 2, 0)), (-b2 * c2, (3, 0, 2)),
         (b2 * c3 + b3 * c2, (3, 1, 1)),
         (-(b1 * c2 + b2 * c1 + 5 * r21 * b2 * c2), (2, 1, 2)),
         (-(b1 * c3 + b3 * c1 + 5 * r31 * b3 * c3), (2, 2, 1))],
        [(b3 ** 2 / 2, (3, 2, 0)), (b2 ** 2 / 2, (3, 0, 2)),
         (-b2 * b3, (3, 1, 1)),
         (b1 * b2 + 2.5 * r21 * b2 ** 2, (2, 1, 2)),
         (b1 * b3 + 2.5 * r31 * b3 ** 2, (2, 2, 1))],
    ]


class Tuba3Geometry:
    """Polynomial representation of the TUBA3 basis for a batch of triangles.

    Parameters
    ----------
    xy : array of shape (n, 3, 2) or (3, 2)
        Corner coordinates, counter-clockwise.
    """

    def __init__(self, xy):
        xy = np.asarray(xy, dtype=float)
        if xy.ndim == 2:
            xy = xy[None]
        x, y = xy[..., 0], xy[..., 1]
        j, k = [1, 2, 0], [2, 0, 1]
        self.xy = xy
        self.b = y[:, j] - y[:, k]
        self.c = x[:, k] - x[:, j]
        two_a = self.b[:, 0] * self.c[:, 1] - self.b[:, 1] * self.c[:, 0]
        if np.any(two_a <= 0):
            raise ValueError("triangles must be non-degenerate and counter-clockwise")
        self.area = 0.5 * two_a
        self.coef = self._quintic_coefficients()                       # (n, 18, 21)
        gx = np.einsum("ni,ipq->npq", self.b / two_a[:, None], _D5)    # (n, 15, 21)
        gy = np.einsum("ni,ipq->npq", self.c / two_a[:, None], _D5)
        hx = np.einsum("ni,ipq->npq", self.b / two_a[:, None], _D4)    # (n, 10, 15)
        hy = np.einsum("ni,ipq->npq", self.c / two_a[:, None], _D4)
        self.coef_x = self.coef @ gx.transpose(0, 2, 1)                # (n, 18, 15)
        self.coef_y = self.coef @ gy.transpose(0, 2, 1)
        self.coef_xx = self.coef_x @ hx.transpose(0, 2, 1)             # (n, 18, 10)
        self.coef_yy = self.coef_y @ hy.transpose(0, 2, 1)
        self.coef_xy = self.coef_x @ hy.transpose(0, 2, 1)

    def __len__(self):
        return len(self.area)

    def _quintic_coefficients(self):
        n = len(self.area)
        b, c = self.b, self.c
        C = np.zeros((n, NDOF, len(QUINTIC)))
        for node, (i, j, k) in enumerate(CYCLIC):
            r_ji = -(b[:, j] * b[:, i] + c[:, j] * c[:, i]) / (b[:, j] ** 2 + c[:, j] ** 2)
            r_ki = -(b[:, k] * b[:, i] + c[:, k] * c[:, i]) / (b[:, k] ** 2 + c[:, k] ** 2)
            terms = _six_terms(b[:, i], b[:, j], b[:, k], c[:, i], c[:, j], c[:, k],
                               r_ji, r_ki)
            for f, fn_terms in enumerate(terms):
                for coeff, (p1, p2, p3) in fn_terms:
                    e = [0, 0, 0]
                    e[i], e[j], e[k] = p1, p2, p3
                    C[:, 6 * node + f, _Q5[tuple(e)]] += coeff
        return C

    @property
    def curvature_coefficients(self) -> np.ndarray:
        """Q matrix, shape (n, 30, 18): curvatures = F(L) @ Q.

        Row blocks are w_xx, w_yy and 2 w_xy over the cubic basis ``CUBIC``.
        """
        return np.concatenate([self.coef_xx, self.coef_yy, 2 * self.coef_xy],
                              axis=2).transpose(0, 2, 1)

    # -- point evaluation; L has shape (m, 3), results (n, m, ...) --------
    def values(self, L):
        return np.einsum("mq,nkq->nmk", eval_monomials(QUINTIC, L), self.coef)

    def gradients(self, L):
        """First derivatives, shape (n, m, 2, 18)."""
        P = eval_monomials(QUARTIC, L)
        return np.stack([np.einsum("mq,nkq->nmk", P, self.coef_x),
                         np.einsum("mq,nkq->nmk", P, self.coef_y)], axis=2)

    def curvature_matrix(self, L):
        """B matrices, shape (n, m, 3, 18)."""
        P = eval_monomials(CUBIC, L)
        return np.stack([np.einsum("mq,nkq->nmk", P, self.coef_xx),
                         np.einsum("mq,nkq->nmk", P, self.coef_yy),
                         2 * np.einsum("mq,nkq->nmk", P, self.coef_xy)], axis=2)

    # -- stiffness ---------------------------------------------------------
    def stiffness(self, D: PlateStiffness) -> np.ndarray:
        """Closed-form stiffness matrices, shape (n, 18, 18)."""
        R = _R_UNIT[None] * (2 * self.area)[:, None, None]
        Qxx = self.coef_xx.transpose(0, 2, 1)
        Qyy = self.coef_yy.transpose(0, 2, 1)
        Qxy = 2 * self.coef_xy.transpose(0, 2, 1)
        RQxx, RQyy, RQxy = R @ Qxx, R @ Qyy, R @ Qxy
        t = lambda M: M.transpose(0, 2, 1)
        cross = t(Qxx) @ RQyy
        K = (D.D11 * (t(Qxx) @ RQxx) + D.D12 * (cross + t(cross))
             + D.D22 * (t(Qyy) @ RQyy) + D.D33 * (t(Qxy) @ RQxy))
        return 0.5 * (K + t(K))

    def stiffness_quadrature(self, D: PlateStiffness, layout: SubdomainLayout,
                             rule: QuadratureRule) -> np.ndarray:
        L, w = composite_points(layout, rule)
        B = self.curvature_matrix(L)
        wt = 0.5 * w[None, :] * (2 * self.area)[:, None]
        return np.einsum("nm,nmak,ab,nmbl->nkl", wt, B, D.matrix, B)


def _geometry(tri) -> Tuba3Geometry:
    if isinstance(tri, Tuba3Geometry):
        return tri
    if isinstance(tri, Triangle):
        return Tuba3Geometry(tri.xy)
    return Tuba3Geometry(tri)


def _point_array(L):
    L = np.asarray(L, dtype=float)
    return L[None] if L.ndim == 1 else L


def shape_functions(L, tri) -> np.ndarray:
    """The 18 shape function values at area coordinates ``L``.

    ``L`` may be a single triple (result shape (18,)) or an (m, 3) array.
    """
    vals = _geometry(tri).values(_point_array(L))[0]
    return vals[0] if np.ndim(L) == 1 else vals


def shape_gradients(L, tri) -> np.ndarray:
    """First Cartesian derivatives, rows ``dN/dx`` and ``dN/dy``."""
    g = _geometry(tri).gradients(_point_array(L))[0]
    return g[0] if np.ndim(L) == 1 else g


def shape_second_derivatives(L, tri) -> np.ndarray:
    """Curvature B matrix (3 x 18) with rows w_xx, w_yy and 2 w_xy."""
    B = _geometry(tri).curvature_matrix(_point_array(L))[0]
    return B[0] if np.ndim(L) == 1 else B


def rigid_modes(tri) -> np.ndarray:
    """DOF vectors for w = 1, w = x and w = y, shape (3, 18)."""
    xy = tri.xy if isinstance(tri, Triangle) else np.asarray(tri, dtype=float)
    modes = np.zeros((3, NDOF))
    for n in range(3):
        modes[0, 6 * n] = 1.0
        modes[1, 6 * n:6 * n + 2] = xy[n, 0], 1.0
        modes[2, 6 * n] = xy[n, 1]
        modes[2, 6 * n + 2] = 1.0
    return modes


def nodal_dofs(xy, w, wx, wy, wxx, wxy, wyy) -> np.ndarray:
    """Sample a field and its derivatives (callables of x, y) at the corners."""
    xy = np.asarray(xy, dtype=float)
    out = np.empty((len(xy), 6))
    for k, f in enumerate((w, wx, wy, wxx, wxy, wyy)):
        out[:, k] = [f(px, py) for px, py in xy]
    return out.reshape(-1)


@dataclass
class PlateElement:
    triangle: Triangle
    D: PlateStiffness
    thickness: float
    dofs: np.ndarray = field(default_factory=lambda: np.arange(NDOF))

    def __post_init__(self):
        if len(self.dofs) != NDOF:
            raise ValueError("a TUBA3 element has 18 DOFs")
        self.geometry = Tuba3Geometry(self.triangle.xy)


def element_stiffness(elem: PlateElement) -> np.ndarray:
    return elem.geometry.stiffness(elem.D)[0]


def element_stiffness_quadrature(elem: PlateElement, levels: int = 1,
                                 n_points: int = 13) -> np.ndarray:
    """Stiffness by sub-domain Gaussian quadrature, used as a cross-check."""
    return elem.geometry.stiffness_quadrature(elem.D, subdivide(levels),
                                              gauss_rule(n_points))[0]


def internal_force(elem: PlateElement, U) -> np.ndarray:
    return element_stiffness(elem) @ np.asarray(U, dtype=float)
