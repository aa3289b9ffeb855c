"""TUBA3 shape functions, curvature operator and stiffness."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from tubadelam.laminate import PlateStiffness, T300_1076, plate_bending_stiffness
from tubadelam.trigeom import Triangle, gauss_rule, subdivide
from tubadelam.tuba3 import (PlateElement, Tuba3Geometry, element_stiffness,
                             element_stiffness_quadrature, internal_force, nodal_dofs,
                             rigid_modes, shape_functions, shape_gradients,
                             shape_second_derivatives)

RNG_SEED = 20241015


def random_triangle(rng, scale=None):
    """Counter-clockwise triangle with interior angles of at least ~15 degrees."""
    while True:
        s = scale if scale is not None else 10 ** rng.uniform(-1, 1.5)
        xy = rng.uniform(-1, 1, (3, 2)) * s + rng.uniform(-20, 20, 2)
        e = np.roll(xy, -1, axis=0) - xy
        cross = e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]
        if cross < 0:
            xy = xy[[0, 2, 1]]
        lengths = np.linalg.norm(e, axis=1)
        area = 0.5 * abs(cross)
        if area > 0.12 * lengths.max() ** 2:
            return Triangle(xy)


def random_D(rng):
    D11, D22, D33 = 10 ** rng.uniform(2, 5, 3)
    D12 = rng.uniform(-0.9, 0.9) * np.sqrt(D11 * D22)
    return PlateStiffness(D11, D12, D22, D33)


# --- independent transcription of the basis (oracle) -------------------------

def _first_six(L1, L2, L3, b1, b2, b3, c1, c2, c3, r21, r31):
    return np.array([
        L1**5 + 5*L1**4*L2 + 5*L1**4*L3 + 10*L1**3*L2**2 + 10*L1**3*L3**2
        + 20*L1**3*L2*L3 + 30*r21*L1**2*L2*L3**2 + 30*r31*L1**2*L2**2*L3,
        c3*L1**4*L2 - c2*L1**4*L3 + 4*c3*L1**3*L2**2 - 4*c2*L1**3*L3**2
        + 4*(c3 - c2)*L1**3*L2*L3 - (3*c1 + 15*r21*c2)*L1**2*L2*L3**2
        + (3*c1 + 15*r31*c3)*L1**2*L2**2*L3,
        -b3*L1**4*L2 + b2*L1**4*L3 - 4*b3*L1**3*L2**2 + 4*b2*L1**3*L3**2
        + 4*(b2 - b3)*L1**3*L2*L3 + (3*b1 + 15*r21*b2)*L1**2*L2*L3**2
        - (3*b1 + 15*r31*b3)*L1**2*L2**2*L3,
        c3**2/2*L1**3*L2**2 + c2**2/2*L1**3*L3**2 - c2*c3*L1**3*L2*L3
        + (c1*c2 + 2.5*r21*c2**2)*L1**2*L2*L3**2 + (c1*c3 + 2.5*r31*c3**2)*L1**2*L2**2*L3,
        -b3*c3*L1**3*L2**2 - b2*c2*L1**3*L3**2 + (b2*c3 + b3*c2)*L1**3*L2*L3
        - (b1*c2 + b2*c1 + 5*r21*b2*c2)*L1**2*L2*L3**2
        - (b1*c3 + b3*c1 + 5*r31*b3*c3)*L1**2*L2**2*L3,
        b3**2/2*L1**3*L2**2 + b2**2/2*L1**3*L3**2 - b2*b3*L1**3*L2*L3
        + (b1*b2 + 2.5*r21*b2**2)*L1**2*L2*L3**2 + (b1*b3 + 2.5*r31*b3**2)*L1**2*L2**2*L3,
    ])


def oracle_shape_functions(L, tri):
    b, c = tri.b, tri.c
    r = lambda i, j: -(b[i] * b[j] + c[i] * c[j]) / (b[i] ** 2 + c[i] ** 2)
    out = []
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        out.append(_first_six(L[i], L[j], L[k], b[i], b[j], b[k], c[i], c[j], c[k],
                              r(j, i), r(k, i)))
    return np.concatenate(out)


def dof_functionals(tri, N_and_derivs):
    """18 x 18 matrix of DOF functionals applied to every shape function."""
    rows = []
    for n in range(3):
        L = np.zeros(3)
        L[n] = 1.0
        N, G, B = N_and_derivs(L)
        rows += [N, G[0], G[1], B[0], 0.5 * B[2], B[1]]
    return np.array(rows)


def package_derivs(tri):
    return lambda L: (shape_functions(L, tri), shape_gradients(L, tri),
                      shape_second_derivatives(L, tri))


# --- shape functions ------------------------------------------------------------

def test_corner_values():
    tri = Triangle([(0, 0), (3, 0.5), (1, 2)])
    N = shape_functions([1, 0, 0], tri)
    assert N[0] == pytest.approx(1.0)
    assert_allclose(N[1:6], 0, atol=1e-15)


def test_equilateral_centroid_symmetry():
    tri = Triangle([(0, 0), (1, 0), (0.5, np.sqrt(3) / 2)])
    N = shape_functions([1 / 3] * 3, tri)
    assert_allclose([N[6], N[12]], [N[0], N[0]], rtol=1e-14)


def test_matches_transcribed_basis():
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(20):
        tri = random_triangle(rng)
        for L in rng.dirichlet([1, 1, 1], 5):
            assert_allclose(shape_functions(L, tri), oracle_shape_functions(L, tri),
                            rtol=1e-11, atol=1e-12 * (1 + np.abs(tri.b).max() ** 2))


def test_duality_random_triangles():
    rng = np.random.default_rng(RNG_SEED + 1)
    for _ in range(50):
        tri = random_triangle(rng)
        assert_allclose(dof_functionals(tri, package_derivs(tri)), np.eye(18), atol=1e-9)


def test_unit_translation_partition():
    rng = np.random.default_rng(3)
    tri = random_triangle(rng)
    N = shape_functions(rng.dirichlet([1, 1, 1], 30), tri)
    assert_allclose(N[:, [0, 6, 12]].sum(axis=1), 1.0, rtol=1e-12)


def test_gradients_against_finite_differences():
    rng = np.random.default_rng(5)
    for _ in range(10):
        tri = random_triangle(rng, scale=rng.uniform(1, 5))
        for L in rng.dirichlet([2, 2, 2], 3):
            p = tri.cartesian(L)
            h = 1e-5
            fd = []
            for e in np.eye(2):
                Np = shape_functions(tri.area_coordinates(p + h * e), tri)
                Nm = shape_functions(tri.area_coordinates(p - h * e), tri)
                fd.append((Np - Nm) / (2 * h))
            G = shape_gradients(L, tri)
            assert_allclose(G, fd, rtol=1e-6, atol=1e-6 * np.abs(G).max())


def test_second_derivatives_against_finite_differences():
    rng = np.random.default_rng(6)
    for _ in range(10):
        tri = random_triangle(rng, scale=rng.uniform(1, 5))
        for L in rng.dirichlet([2, 2, 2], 3):
            p = tri.cartesian(L)
            h = 1e-5
            d = {}
            for name, e in (("x", np.array([1.0, 0])), ("y", np.array([0, 1.0]))):
                Gp = shape_gradients(tri.area_coordinates(p + h * e), tri)
                Gm = shape_gradients(tri.area_coordinates(p - h * e), tri)
                d[name] = (Gp - Gm) / (2 * h)
            fd = np.array([d["x"][0], d["y"][1], d["x"][1] + d["y"][0]])
            B = shape_second_derivatives(L, tri)
            assert_allclose(B, fd, rtol=1e-6, atol=1e-6 * np.abs(B).max())
            # second differences of the values, as a coarser check
            hh = 1e-3
            wxx = [(shape_functions(tri.area_coordinates(p + s * hh * np.array([1.0, 0])), tri))
                   for s in (1, 0, -1)]
            assert_allclose(B[0], (wxx[0] - 2 * wxx[1] + wxx[2]) / hh ** 2,
                            rtol=1e-4, atol=1e-4 * np.abs(B).max())


def test_rigid_dofs_have_no_curvature():
    rng = np.random.default_rng(7)
    tri = random_triangle(rng)
    B = shape_second_derivatives(rng.dirichlet([1, 1, 1], 20), tri)
    assert_allclose(B @ rigid_modes(tri).T, 0, atol=1e-10 * np.abs(B).max())


def test_quadratic_field_x_squared():
    rng = np.random.default_rng(8)
    tri = random_triangle(rng, scale=3)
    U = nodal_dofs(tri.xy, lambda x, y: x * x, lambda x, y: 2 * x, lambda x, y: 0,
                   lambda x, y: 2, lambda x, y: 0, lambda x, y: 0)
    B = shape_second_derivatives(rng.dirichlet([1, 1, 1], 20), tri)
    assert_allclose(B @ U, np.tile([2.0, 0, 0], (20, 1)), atol=1e-9)


def test_quintic_completeness():
    # quartics have cubic normal slopes, so every quartic is reproduced exactly
    rng = np.random.default_rng(9)
    tri = random_triangle(rng, scale=2)
    x0, y0 = tri.centroid
    cf = rng.normal(size=(5, 5))

    def field(dx, dy):
        def f(x, y):
            X, Y = x - x0, y - y0
            s = 0.0
            for i in range(5):
                for j in range(5 - i):
                    ci = cf[i, j]
                    if i >= dx and j >= dy:
                        k = np.prod(range(i - dx + 1, i + 1)) * np.prod(range(j - dy + 1, j + 1))
                        s += ci * k * X ** (i - dx) * Y ** (j - dy)
            return s
        return f

    U = nodal_dofs(tri.xy, field(0, 0), field(1, 0), field(0, 1),
                   field(2, 0), field(1, 1), field(0, 2))
    for L in rng.dirichlet([1, 1, 1], 10):
        x, y = tri.cartesian(L)
        assert_allclose(shape_functions(L, tri) @ U, field(0, 0)(x, y), rtol=1e-9, atol=1e-9)


def test_normal_slope_is_cubic_on_edges():
    rng = np.random.default_rng(10)
    for _ in range(10):
        tri = random_triangle(rng)
        for i in range(3):
            j = (i + 1) % 3
            s = np.linspace(0, 1, 12)
            L = np.zeros((12, 3))
            L[:, i], L[:, j] = 1 - s, s
            t = tri.xy[j] - tri.xy[i]
            n = np.array([t[1], -t[0]]) / np.linalg.norm(t)
            G = shape_gradients(L, tri)                # (12, 2, 18)
            dn = np.einsum("a,mak->mk", n, G)
            V = np.vander(s, 4)
            coef, *_ = np.linalg.lstsq(V, dn, rcond=None)
            resid = np.abs(V @ coef - dn).max(axis=0)
            scale = np.abs(dn).max(axis=0) + 1e-30
            assert (resid <= 1e-10 * np.maximum(scale, 1)).all()
            # while the deflection itself is a genuine quintic along the edge
            N = shape_functions(L, tri)
            coef5, *_ = np.linalg.lstsq(np.vander(s, 4), N, rcond=None)
            assert np.abs(np.vander(s, 4) @ coef5 - N).max() > 1e-6


# --- patch test ---------------------------------------------------------------

def two_region_patch(rng):
    """4 x 4 cells: two columns of 1 mm cells next to two of 2 mm, interior nodes jittered."""
    xs = np.array([0.0, 1.0, 2.0, 4.0, 6.0])
    ys = np.array([0.0, 1.5, 3.0, 4.5, 6.0])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    xy = np.column_stack([X.ravel(), Y.ravel()])
    interior = ((X > 0) & (X < 6) & (Y > 0) & (Y < 6)).ravel()
    xy[interior] += rng.uniform(-0.2, 0.2, (interior.sum(), 2))
    tris = []
    ny = len(ys)
    for i in range(4):
        for j in range(4):
            a, b = i * ny + j, (i + 1) * ny + j
            tris += [(a, b, b + 1), (a, b + 1, a + 1)]
    return xy, np.array(tris), ~interior


def test_patch_constant_curvature():
    rng = np.random.default_rng(11)
    xy, tris, boundary = two_region_patch(rng)
    D = plate_bending_stiffness(T300_1076, 1.5)
    geo = Tuba3Geometry(xy[tris])
    Ke = geo.stiffness(D)
    n = 6 * len(xy)
    K = np.zeros((n, n))
    dofs = (6 * tris[:, :, None] + np.arange(6)).reshape(len(tris), 18)
    for e, d in enumerate(dofs):
        K[np.ix_(d, d)] += Ke[e]
    for alpha, beta, gamma in [(1.0, 0, 0), (0, 1.0, 0), (0, 0, 1.0), (0.3, -0.7, 0.4)]:
        exact = nodal_dofs(xy,
                           lambda x, y: 0.5 * (alpha * x * x + beta * y * y + gamma * x * y),
                           lambda x, y: alpha * x + 0.5 * gamma * y,
                           lambda x, y: beta * y + 0.5 * gamma * x,
                           lambda x, y: alpha, lambda x, y: 0.5 * gamma, lambda x, y: beta)
        fixed = np.repeat(boundary, 6)
        free = ~fixed
        U = exact.copy()
        U[free] = np.linalg.solve(K[np.ix_(free, free)], -K[np.ix_(free, fixed)] @ exact[fixed])
        assert_allclose(U, exact, atol=1e-8 * np.abs(exact).max())
        L, _ = (gauss_rule(13).points, None)
        B = geo.curvature_matrix(L)                       # (ne, 13, 3, 18)
        kappa = np.einsum("nmak,nk->nma", B, U[dofs])
        target = np.array([alpha, beta, gamma])
        assert_allclose(kappa, np.broadcast_to(target, kappa.shape),
                        atol=1e-8 * np.abs(target).max())


# --- stiffness ----------------------------------------------------------------

def test_stiffness_oracle_random():
    rng = np.random.default_rng(RNG_SEED + 2)
    for _ in range(100):
        tri = random_triangle(rng)
        elem = PlateElement(tri, random_D(rng), 1.0)
        K = element_stiffness(elem)
        Kq = element_stiffness_quadrature(elem, levels=1, n_points=13)
        assert np.abs(K - Kq).max() <= 1e-10 * np.abs(K).max()


def test_stiffness_structure():
    # element sizes of the DCB meshes (0.5-20 mm) in mm units
    rng = np.random.default_rng(12)
    for _ in range(20):
        tri = random_triangle(rng, scale=rng.uniform(0.5, 20))
        elem = PlateElement(tri, random_D(rng), 1.0)
        K = element_stiffness(elem)
        assert np.abs(K - K.T).max() <= 1e-10 * np.abs(K).max()
        lam = np.linalg.eigvalsh(K)
        assert lam.min() > -1e-9 * lam.max()
        assert (lam < 1e-9 * lam.max()).sum() == 3
        assert np.abs(K @ rigid_modes(tri).T).max() <= 1e-9 * np.abs(K).max() * (
            1 + np.abs(tri.xy).max())


def test_nullspace_of_small_elements_after_unit_scaling():
    # slopes and curvatures carry inverse powers of length; the congruence
    # S K S with S = diag(1, 1/h, 1/h, 1/h^2, 1/h^2, 1/h^2) makes the DOFs
    # dimensionless and keeps the inertia of K
    rng = np.random.default_rng(16)
    for _ in range(20):
        tri = random_triangle(rng, scale=rng.uniform(0.05, 0.5))
        h = np.sqrt(tri.area)
        S = np.diag(np.tile([1, 1 / h, 1 / h, h ** -2, h ** -2, h ** -2], 3))
        K = S @ element_stiffness(PlateElement(tri, random_D(rng), 1.0)) @ S
        lam = np.linalg.eigvalsh(K)
        assert (lam < 1e-9 * lam.max()).sum() == 3


def test_internal_force_examples():
    rng = np.random.default_rng(13)
    tri = random_triangle(rng)
    elem = PlateElement(tri, plate_bending_stiffness(T300_1076, 1.5), 1.5)
    assert_allclose(internal_force(elem, np.zeros(18)), 0)
    K = element_stiffness(elem)
    for mode in rigid_modes(tri):
        assert np.abs(internal_force(elem, mode)).max() <= 1e-9 * np.abs(K).max() * (
            1 + np.abs(tri.xy).max())
    U = rng.normal(size=(1000, 18))
    assert (np.einsum("ni,ij,nj->n", U, K, U) >= -1e-9 * np.abs(K).max()).all()


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 50), st.floats(0, 2 * np.pi))
def test_stiffness_is_frame_covariant_under_translation(scale, angle):
    # translating a triangle leaves K unchanged
    rng = np.random.default_rng(int(scale * 1000))
    tri = random_triangle(rng, scale=scale)
    shift = 30 * np.array([np.cos(angle), np.sin(angle)])
    D = plate_bending_stiffness(T300_1076, 1.5)
    K1 = Tuba3Geometry(tri.xy[None]).stiffness(D)[0]
    K2 = Tuba3Geometry((tri.xy + shift)[None]).stiffness(D)[0]
    assert_allclose(K2, K1, atol=1e-9 * np.abs(K1).max())


def test_batched_geometry_matches_single():
    rng = np.random.default_rng(14)
    tris = [random_triangle(rng) for _ in range(5)]
    D = plate_bending_stiffness(T300_1076, 1.5)
    batch = Tuba3Geometry(np.array([t.xy for t in tris])).stiffness(D)
    for t, Kb in zip(tris, batch):
        assert_allclose(Kb, element_stiffness(PlateElement(t, D, 1.5)), rtol=1e-14, atol=0)


def test_quadrature_with_low_order_rule_differs():
    # the 7-point rule (degree 5) is not exact for the degree-6 integrand
    rng = np.random.default_rng(15)
    tri = random_triangle(rng)
    D = plate_bending_stiffness(T300_1076, 1.5)
    geo = Tuba3Geometry(tri.xy[None])
    K = geo.stiffness(D)[0]
    K7 = geo.stiffness_quadrature(D, subdivide(0), gauss_rule(7))[0]
    assert np.abs(K - K7).max() > 1e-8 * np.abs(K).max()
