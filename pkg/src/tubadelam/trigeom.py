"""Triangle geometry in area coordinates and integration over triangles.

Integration weights follow the convention that they sum to one, so that a
rule integrates ``g`` over the parent triangle ``{L1, L2 >= 0, L1 + L2 <= 1}``
as ``0.5 * sum(w_i * g(L_i))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, sqrt

import numpy as np

# 1-based cyclic permutations (i, j, k) written 0-based
CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


class Triangle:
    """Straight-sided triangle with its area-coordinate coefficients.

    ``a[i] + b[i]*x + c[i]*y`` equals ``2A`` at corner ``i`` and vanishes at
    the two other corners.
    """

    def __init__(self, corners):
        xy = np.array(corners, dtype=float)
        if xy.shape != (3, 2):
            raise ValueError("a triangle needs three (x, y) corners")
        x, y = xy[:, 0], xy[:, 1]
        j = np.array([1, 2, 0])
        k = np.array([2, 0, 1])
        self.xy = xy
        self.a = x[j] * y[k] - x[k] * y[j]
        self.b = y[j] - y[k]
        self.c = x[k] - x[j]
        self.area = 0.5 * abs(np.linalg.det(np.column_stack([np.ones(3), x, y])))
        longest = max(np.sum((xy[j] - xy) ** 2, axis=1))
        if self.area <= 1e-12 * longest:
            raise ValueError("degenerate triangle")
        if self.jacobian_det() < 0:
            raise ValueError("corners must be ordered counter-clockwise")

    def __repr__(self):
        return f"Triangle({self.xy.tolist()})"

    def jacobian(self) -> np.ndarray:
        """Jacobian of (x, y) with respect to (L1, L2)."""
        x, y = self.xy[:, 0], self.xy[:, 1]
        return np.array([[x[0] - x[2], x[1] - x[2]],
                         [y[0] - y[2], y[1] - y[2]]])

    def jacobian_det(self) -> float:
        x, y = self.xy[:, 0], self.xy[:, 1]
        return (x[0] - x[2]) * (y[1] - y[2]) - (y[0] - y[2]) * (x[1] - x[2])

    def area_coordinates(self, point) -> np.ndarray:
        """Area coordinates of one point ``(x, y)`` or an ``(n, 2)`` array."""
        p = np.asarray(point, dtype=float)
        px, py = p[..., 0], p[..., 1]
        L1 = (self.a[0] + self.b[0] * px + self.c[0] * py) / (2 * self.area)
        L2 = (self.a[1] + self.b[1] * px + self.c[1] * py) / (2 * self.area)
        return np.stack([L1, L2, 1.0 - L1 - L2], axis=-1)

    def cartesian(self, L) -> np.ndarray:
        return np.asarray(L, dtype=float) @ self.xy

    @property
    def centroid(self) -> np.ndarray:
        return self.xy.mean(axis=0)


def area_coordinates(point, tri: Triangle) -> np.ndarray:
    return tri.area_coordinates(point)


def em_integral(a: int, b: int, c: int, area: float) -> float:
    """Exact integral of ``L1^a L2^b L3^c`` over a triangle of given area."""
    if min(a, b, c) < 0:
        raise ValueError("exponents must be non-negative")
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2) * 2 * area


def monomial_exponents(degree: int) -> np.ndarray:
    """Exponent triples of all homogeneous monomials of a given degree.

    Ordered by decreasing power of L1, then of L2.
    """
    return np.array([(a, b, degree - a - b)
                     for a in range(degree, -1, -1)
                     for b in range(degree - a, -1, -1)], dtype=int)


def eval_monomials(exponents: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Values of the monomials at area-coordinate points, shape ``(..., m)``."""
    L = np.asarray(L, dtype=float)[..., None, :]
    return np.prod(L ** exponents, axis=-1)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (n, 3) area coordinates
    weights: np.ndarray  # (n,), sum to one
    degree: int

    def __len__(self):
        return len(self.weights)

    def integrate(self, g) -> float:
        """Integrate a vectorised ``g(L)`` over the parent triangle."""
        return 0.5 * float(np.dot(self.weights, g(self.points)))


def _orbit(*coords):
    """All distinct permutations of an area-coordinate triple."""
    from itertools import permutations
    seen = []
    for p in permutations(coords):
        if not any(np.allclose(p, q, rtol=0, atol=0) for q in seen):
            seen.append(p)
    return seen


def _symmetric(groups):
    pts, wts = [], []
    for coords, w in groups:
        orb = _orbit(*coords)
        pts.extend(orb)
        wts.extend([w] * len(orb))
    return np.array(pts, dtype=float), np.array(wts, dtype=float)


# Classical fully symmetric rules.  The 6- and 13-point values were polished by
# Newton iteration on their moment equations in 40-digit arithmetic; they
# agree with the published 15-digit tables to within 2e-15.
_S15 = sqrt(15.0)
_SYMMETRIC_RULES = {
    1: (1, [((1 / 3, 1 / 3, 1 / 3), 1.0)]),
    3: (2, [((2 / 3, 1 / 6, 1 / 6), 1 / 3)]),
    4: (3, [((1 / 3, 1 / 3, 1 / 3), -27 / 48),
            ((0.6, 0.2, 0.2), 25 / 48)]),
    6: (4, [((1 - 2 * 0.44594849091596488632, 0.44594849091596488632,
              0.44594849091596488632), 0.2233815896780114657),
            ((1 - 2 * 0.09157621350977074346, 0.09157621350977074346,
              0.09157621350977074346), 0.10995174365532186764)]),
    7: (5, [((1 / 3, 1 / 3, 1 / 3), 0.225),
            ((1 - 2 * (6 - _S15) / 21, (6 - _S15) / 21, (6 - _S15) / 21),
             (155 - _S15) / 1200),
            ((1 - 2 * (6 + _S15) / 21, (6 + _S15) / 21, (6 + _S15) / 21),
             (155 + _S15) / 1200)]),
    13: (7, [((1 / 3, 1 / 3, 1 / 3), -0.14957004446768175063),
             ((1 - 2 * 0.26034596607903982693, 0.26034596607903982693,
               0.26034596607903982693), 0.17561525743320781175),
             ((1 - 2 * 0.065130102902215811538, 0.065130102902215811538,
               0.065130102902215811538), 0.05334723560883849127),
             ((0.6384441885698097268, 0.31286549600487386141,
               1 - 0.6384441885698097268 - 0.31286549600487386141),
              0.07711376089025714026)]),
}


@lru_cache(maxsize=None)
def gauss_rule(n_points: int) -> QuadratureRule:
    """Symmetric Gaussian rule on the triangle with ``n_points`` points.

    Supported sizes are 1, 3, 4, 6, 7 and 13 (degrees 1, 2, 3, 4, 5, 7).
    """
    if n_points not in _SYMMETRIC_RULES:
        raise ValueError(f"no {n_points}-point rule; choose from {sorted(_SYMMETRIC_RULES)}")
    degree, groups = _SYMMETRIC_RULES[n_points]
    pts, wts = _symmetric(groups)
    # centroid first, for the barycentric sampling done in post-processing
    order = np.argsort(~np.isclose(pts, 1 / 3).all(axis=1), kind="stable")
    pts, wts = pts[order], wts[order]
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)


@dataclass(frozen=True)
class SubdomainLayout:
    """Partition of the parent triangle into sub-triangles.

    ``vertices[j, n]`` holds the area coordinates of vertex ``n`` of
    sub-triangle ``j``; ``dets[j]`` is the Jacobian determinant of the
    map from the sub-triangle's own area coordinates (r, s, t).
    """

    vertices: np.ndarray  # (nsd, 3, 3)
    dets: np.ndarray      # (nsd,)

    def __len__(self):
        return len(self.dets)


def _split4(tri):
    v0, v1, v2 = tri
    m01, m12, m20 = (v0 + v1) / 2, (v1 + v2) / 2, (v2 + v0) / 2
    return [np.array(t) for t in ((v0, m01, m20), (m01, v1, m12),
                                  (m20, m12, v2), (m12, m20, m01))]


@lru_cache(maxsize=None)
def subdivide(levels: int) -> SubdomainLayout:
    """Uniform midpoint refinement, ``4**levels`` congruent sub-triangles."""
    if levels < 0:
        raise ValueError("levels must be >= 0")
    tris = [np.eye(3)]
    for _ in range(levels):
        tris = [s for t in tris for s in _split4(t)]
    verts = np.array(tris)
    L = verts
    dets = ((L[:, 0, 0] - L[:, 2, 0]) * (L[:, 1, 1] - L[:, 2, 1])
            - (L[:, 0, 1] - L[:, 2, 1]) * (L[:, 1, 0] - L[:, 2, 0]))
    # the central (inverted) sub-triangles are ordered clockwise
    dets = np.abs(dets)
    verts.setflags(write=False)
    dets.setflags(write=False)
    return SubdomainLayout(verts, dets)


def composite_points(layout: SubdomainLayout, rule: QuadratureRule):
    """Integration points and weights of a sub-domain scheme.

    Returns ``(L, w)`` with ``L`` of shape ``(nsd*n, 3)`` and weights summing
    to one, so ``0.5 * sum(w * g(L))`` integrates over the parent triangle.
    """
    L = np.einsum("ir,jrm->jim", rule.points, layout.vertices).reshape(-1, 3)
    w = (layout.dets[:, None] * rule.weights[None, :]).reshape(-1)
    return L, w


def integrate_subdomain(g, layout: SubdomainLayout, rule: QuadratureRule) -> float:
    """Integrate a vectorised ``g(L)`` over the parent triangle."""
    L, w = composite_points(layout, rule)
    return 0.5 * float(np.dot(w, g(L)))
