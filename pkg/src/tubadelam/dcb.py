"""Double cantilever beam model: structured meshes and boundary conditions.

Plan-view nodes are numbered column by column along x.  Every plan node
carries a bottom-arm node (even id) and a top-arm node (odd id), each with
six DOFs, which keeps the global matrix narrowly banded.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .laminate import PlateStiffness

DOF_PER_NODE = 6
W, WX, WY, WXX, WXY, WYY = range(6)


@dataclass(frozen=True)
class DCBGeometry:
    length: float = 150.0
    width: float = 25.0
    thickness: float = 3.0
    precrack: float = 30.5
    h_fine: float = 2.0
    h_coarse: float = 5.0
    window_before: float = 5.0   # fine region starts this far behind the precrack tip
    window_after: float = 60.0   # and ends this far ahead of it
    window: tuple[float, float] | None = None  # explicit fine region, overrides the above

    def __post_init__(self):
        for name in ("length", "width", "thickness", "h_fine", "h_coarse"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.precrack < self.length:
            raise ValueError("precrack must lie inside the specimen")
        if self.h_fine > self.h_coarse:
            raise ValueError("h_fine must not exceed h_coarse")

    @property
    def arm_thickness(self) -> float:
        return 0.5 * self.thickness

    def fine_window(self) -> tuple[float, float]:
        """Fine-mesh region, snapped so that a grid line falls on the precrack tip."""
        if self.window is not None:
            return tuple(float(v) for v in self.window)
        h = self.h_fine
        start = self.precrack - ceil(self.window_before / h - 1e-9) * h
        end = self.precrack + ceil(self.window_after / h - 1e-9) * h
        return max(start, 0.0), min(end, self.length)


def _cells(length, h):
    return max(1, ceil(length / h - 1e-9))


def x_grid(geom: DCBGeometry) -> np.ndarray:
    start, end = geom.fine_window()
    fine_len = end - start
    if geom.h_fine > fine_len + 1e-12:
        raise ValueError("h_fine exceeds the fine-mesh window")
    n_fine = fine_len / geom.h_fine
    if abs(n_fine - round(n_fine)) > 1e-9:
        raise ValueError("h_fine must divide the fine-mesh window length")
    parts = []
    if start > 1e-12:
        parts.append(np.linspace(0.0, start, _cells(start, geom.h_coarse) + 1)[:-1])
    parts.append(np.linspace(start, end, int(round(n_fine)) + 1))
    if geom.length - end > 1e-12:
        parts.append(np.linspace(end, geom.length,
                                 _cells(geom.length - end, geom.h_coarse) + 1)[1:])
    return np.concatenate(parts)


def y_grid(geom: DCBGeometry) -> np.ndarray:
    return np.linspace(0.0, geom.width, _cells(geom.width, geom.h_fine) + 1)


@dataclass
class Mesh:
    """Two identical plate arms and the cohesive layer between them."""

    plan_xy: np.ndarray      # (n_plan, 2)
    triangles: np.ndarray    # (n_tri, 3) plan-node ids, counter-clockwise
    precrack: np.ndarray     # (n_tri,) bool
    x: np.ndarray            # grid lines
    y: np.ndarray
    arm_z: tuple[float, float] = (-0.75, 0.75)

    @property
    def n_plan(self) -> int:
        return len(self.plan_xy)

    @property
    def n_nodes(self) -> int:
        return 2 * self.n_plan

    @property
    def n_dof(self) -> int:
        return DOF_PER_NODE * self.n_nodes

    @property
    def nodes(self) -> np.ndarray:
        """Node coordinates (x, y, z); bottom node ``2p``, top node ``2p+1``."""
        xyz = np.empty((self.n_nodes, 3))
        xyz[0::2, :2] = xyz[1::2, :2] = self.plan_xy
        xyz[0::2, 2], xyz[1::2, 2] = self.arm_z
        return xyz

    @property
    def bottom_plates(self) -> np.ndarray:
        return 2 * self.triangles

    @property
    def top_plates(self) -> np.ndarray:
        return 2 * self.triangles + 1

    @property
    def cohesive(self) -> np.ndarray:
        """(n_tri, 6) node ids: bottom triple then top triple."""
        return np.hstack([self.bottom_plates, self.top_plates])

    @property
    def n_elements(self) -> int:
        return 3 * len(self.triangles)

    def triangle_xy(self) -> np.ndarray:
        return self.plan_xy[self.triangles]

    def centroids(self) -> np.ndarray:
        return self.triangle_xy().mean(axis=1)

    @staticmethod
    def node_dofs(nodes) -> np.ndarray:
        nodes = np.asarray(nodes)
        return (DOF_PER_NODE * nodes)[..., None] + np.arange(DOF_PER_NODE)

    def element_dofs(self, connectivity) -> np.ndarray:
        d = self.node_dofs(connectivity)
        return d.reshape(d.shape[0], -1)

    def plan_nodes_at_x(self, x0: float, tol: float = 1e-9) -> np.ndarray:
        return np.flatnonzero(np.abs(self.plan_xy[:, 0] - x0) <= tol)

    def dump(self, path) -> None:
        """Plain-text listing of nodes and elements."""
        with open(path, "w") as fh:
            fh.write("# nodes: id x_mm y_mm z_mm\n")
            for i, (px, py, pz) in enumerate(self.nodes):
                fh.write(f"node {i} {px:.12g} {py:.12g} {pz:.12g}\n")
            fh.write("# elements: id n1 n2 n3 [n4 n5 n6] kind flags\n")
            eid = 0
            for kind, conn in (("plate_bottom", self.bottom_plates),
                               ("plate_top", self.top_plates)):
                for tri in conn:
                    fh.write(f"elem {eid} {' '.join(map(str, tri))} {kind} -\n")
                    eid += 1
            for tri, pc in zip(self.cohesive, self.precrack):
                fh.write(f"elem {eid} {' '.join(map(str, tri))} cohesive "
                         f"{'precrack' if pc else '-'}\n")
                eid += 1


def structured_mesh(x: np.ndarray, y: np.ndarray, precrack_length: float,
                    arm_thickness: float = 1.5) -> Mesh:
    """Rectangular cells split along the (i, j)-(i+1, j+1) diagonal."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    nx, ny = len(x) - 1, len(y) - 1
    X, Y = np.meshgrid(x, y, indexing="ij")
    plan_xy = np.column_stack([X.ravel(), Y.ravel()])
    node = lambda i, j: i * (ny + 1) + j
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    I, J = I.ravel(), J.ravel()
    p00, p10, p11, p01 = node(I, J), node(I + 1, J), node(I + 1, J + 1), node(I, J + 1)
    lower = np.column_stack([p00, p10, p11])
    upper = np.column_stack([p00, p11, p01])
    tris = np.stack([lower, upper], axis=1).reshape(-1, 3)
    cx = plan_xy[tris, 0].mean(axis=1)
    z = 0.5 * arm_thickness
    return Mesh(plan_xy, tris, cx < precrack_length, x, y, (-z, z))


def generate_mesh(geom: DCBGeometry) -> Mesh:
    return structured_mesh(x_grid(geom), y_grid(geom), geom.precrack, geom.arm_thickness)


@dataclass
class ConstraintSet:
    """Fixed, driven and moment-free multi-point constraints.

    Each MPC row reads ``sum(coefs * U[dofs]) = 0``; its first DOF is the
    slave eliminated in favour of the others.
    """

    n_dof: int
    fixed: np.ndarray
    driven: np.ndarray
    mpc_dofs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), int))
    mpc_coefs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    target: float = 4.0

    def __post_init__(self):
        self.fixed = np.asarray(self.fixed, int)
        self.driven = np.asarray(self.driven, int)
        self.mpc_dofs = np.asarray(self.mpc_dofs, int).reshape(-1, 2)
        self.mpc_coefs = np.asarray(self.mpc_coefs, float).reshape(-1, 2)
        self.check()

    @property
    def slaves(self) -> np.ndarray:
        return self.mpc_dofs[:, 0]

    def check(self) -> None:
        groups = [self.fixed, self.driven, self.mpc_dofs.ravel()]
        everything = np.concatenate(groups)
        if len(np.unique(everything)) != len(everything):
            raise ValueError("a DOF appears in more than one constraint")
        if np.any(self.mpc_coefs[:, 0] == 0):
            raise ValueError("MPC slave coefficient must be non-zero")
        if len(self.mpc_dofs) and np.linalg.matrix_rank(self.mpc_matrix().toarray()) < len(self.mpc_dofs):
            raise ValueError("MPC rows are linearly dependent")

    def mpc_matrix(self):
        from scipy.sparse import csr_matrix
        m = len(self.mpc_dofs)
        rows = np.repeat(np.arange(m), 2)
        return csr_matrix((self.mpc_coefs.ravel(), (rows, self.mpc_dofs.ravel())),
                          shape=(m, self.n_dof))


def moment_free_row(D: PlateStiffness, normal: str = "x") -> np.ndarray:
    """Coefficients over ``(w_xx, w_yy)`` of a zero edge moment.

    For an edge normal to x this is ``M_x = D11 w_xx + D12 w_yy = 0``; for an
    edge normal to y, ``M_y = D12 w_xx + D22 w_yy = 0``.
    """
    if normal == "x":
        return np.array([D.D11, D.D12])
    if normal == "y":
        return np.array([D.D12, D.D22])
    raise ValueError("normal must be 'x' or 'y'")


def build_constraints(mesh: Mesh, D: PlateStiffness, load_target: float = 4.0) -> ConstraintSet:
    """Supported bottom-left edge, driven top-left edge, both moment free.

    Slopes are left free; on each loaded or supported edge node the curvature
    ``w_xx`` is slaved to ``w_yy`` so that ``M_x`` vanishes.
    """
    edge = mesh.plan_nodes_at_x(mesh.x[0])
    bottom, top = 2 * edge, 2 * edge + 1
    fixed = DOF_PER_NODE * bottom + W
    driven = DOF_PER_NODE * top + W
    row = moment_free_row(D, "x")
    nodes = np.concatenate([bottom, top])
    mpc_dofs = np.column_stack([DOF_PER_NODE * nodes + WXX, DOF_PER_NODE * nodes + WYY])
    mpc_coefs = np.tile(row, (len(nodes), 1))
    return ConstraintSet(mesh.n_dof, fixed, driven, mpc_dofs, mpc_coefs, load_target)
