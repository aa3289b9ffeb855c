"""Global assembly, constraint elimination and the incremental solver.

Displacements are split as ``U = T u + g * opening`` where ``u`` holds the
free and master DOFs, ``T`` encodes the multi-point constraints and ``g``
is the unit pattern of the driven DOFs.  Each increment iterates with the
damage-degraded secant stiffness until the reduced residual and the
correction are both small; the cohesive history is committed only once the
increment has converged.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cohesive import CohesiveLayer, CohesiveProps, dissipated_energy
from .dcb import ConstraintSet, DCBGeometry, Mesh, build_constraints, generate_mesh
from .laminate import Material, PlateStiffness, plate_bending_stiffness
from .trigeom import gauss_rule, subdivide
from .tuba3 import Tuba3Geometry

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class AnalysisAborted(SolverError):
    """Raised when the cutback budget is exhausted; carries the partial history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass
class DCBModel:
    geometry: DCBGeometry
    material: Material
    mesh: Mesh
    D: PlateStiffness
    layer: CohesiveLayer
    constraints: ConstraintSet
    plate_K: sp.csr_matrix
    cohesive_dofs: np.ndarray  # (n_ce, 36)

    @property
    def n_dof(self) -> int:
        return self.mesh.n_dof


def plate_stiffness_matrix(mesh: Mesh, D: PlateStiffness) -> sp.csr_matrix:
    """Constant global stiffness of both plate arms."""
    Ke = Tuba3Geometry(mesh.triangle_xy()).stiffness(D)
    rows, cols, vals = [], [], []
    for conn in (mesh.bottom_plates, mesh.top_plates):
        dofs = mesh.element_dofs(conn)
        rows.append(np.repeat(dofs, 18, axis=1).ravel())
        cols.append(np.tile(dofs, (1, 18)).ravel())
        vals.append(Ke.ravel())
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(mesh.n_dof, mesh.n_dof)).tocsr()
    K.sum_duplicates()
    return K


def build_model(geometry: DCBGeometry, material: Material, n_points: int = 13,
                levels: int = 0, load_target: float = 4.0) -> DCBModel:
    mesh = generate_mesh(geometry)
    D = plate_bending_stiffness(material, geometry.arm_thickness)
    props = CohesiveProps.from_material(material, geometry.thickness)
    layer = CohesiveLayer(mesh.triangle_xy(), geometry.arm_thickness, geometry.arm_thickness,
                          props, subdivide(levels), gauss_rule(n_points), mesh.precrack)
    constraints = build_constraints(mesh, D, load_target)
    return DCBModel(geometry, material, mesh, D, layer, constraints,
                    plate_stiffness_matrix(mesh, D), mesh.element_dofs(mesh.cohesive))


class Assembler:
    """Scatter of element matrices into a fixed CSR sparsity pattern."""

    def __init__(self, base: sp.csr_matrix, element_dofs: np.ndarray):
        n = base.shape[0]
        ne, nd = element_dofs.shape
        rows = np.repeat(element_dofs, nd, axis=1).ravel()
        cols = np.tile(element_dofs, (1, nd)).ravel()
        pattern = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
        pattern = (pattern + base).tocsr()
        pattern.sum_duplicates()
        pattern.sort_indices()
        self.indptr, self.indices = pattern.indptr, pattern.indices
        self.shape = (n, n)
        self.base_data = self._lookup_values(base)
        self.slots = self._slots(rows, cols)
        self.element_dofs = element_dofs

    def _slots(self, rows, cols):
        # position of (row, col) inside the sorted CSR index array
        start = self.indptr[rows]
        key = rows.astype(np.int64) * self.shape[1] + cols
        flat_keys = (np.repeat(np.arange(self.shape[0]), np.diff(self.indptr)).astype(np.int64)
                     * self.shape[1] + self.indices)
        pos = np.searchsorted(flat_keys, key)
        assert np.all(flat_keys[pos] == key) and np.all(pos >= start)
        return pos

    def _lookup_values(self, M):
        M = M.tocoo()
        data = np.zeros(len(self.indices))
        np.add.at(data, self._slots(M.row, M.col), M.data)
        return data

    def matrix(self, Ke: np.ndarray) -> sp.csr_matrix:
        data = self.base_data + np.bincount(self.slots, weights=Ke.ravel(),
                                            minlength=len(self.indices))
        return sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)


@dataclass
class GlobalSystem:
    K: sp.csr_matrix
    residual: np.ndarray
    delta_max: np.ndarray  # trial cohesive history
    moduli: np.ndarray


def _element_vectors(U, dofs):
    return U[dofs]


def internal_forces(model: DCBModel, U, Ke=None):
    """Global internal force ``K(U) U`` using element-level products."""
    Ue = U[model.cohesive_dofs]
    if Ke is None:
        Ke, _, _ = model.layer.stiffness_residual(Ue)
    fe = np.einsum("nij,nj->ni", Ke, Ue)
    f = model.plate_K @ U
    f += np.bincount(model.cohesive_dofs.ravel(), weights=fe.ravel(), minlength=model.n_dof)
    return f


def assemble(model: DCBModel, U, assembler: Assembler | None = None) -> GlobalSystem:
    """Secant stiffness and residual at the trial displacement ``U``."""
    U = np.asarray(U, dtype=float)
    Ue = U[model.cohesive_dofs]
    _, dmax, _, moduli = model.layer.trial(Ue)
    Ke = model.layer.stiffness_from_moduli(moduli)
    if not np.all(np.isfinite(Ke)):
        bad = np.flatnonzero(~np.isfinite(Ke).all(axis=(1, 2)))
        raise SolverError(f"non-finite cohesive stiffness in element {bad[0]}")
    assembler = assembler or Assembler(model.plate_K, model.cohesive_dofs)
    K = assembler.matrix(Ke)
    return GlobalSystem(K, -(internal_forces(model, U, Ke)), dmax, moduli)


class Reduction:
    """Elimination of fixed, driven and slave DOFs (``U = T u + g * value``)."""

    def __init__(self, constraints: ConstraintSet):
        c = constraints
        n = c.n_dof
        removed = np.zeros(n, bool)
        removed[c.fixed] = removed[c.driven] = True
        removed[c.slaves] = True
        self.kept = np.flatnonzero(~removed)
        index = -np.ones(n, int)
        index[self.kept] = np.arange(len(self.kept))
        rows, cols, vals = list(self.kept), list(np.arange(len(self.kept))), [1.0] * len(self.kept)
        for dofs, coefs in zip(c.mpc_dofs, c.mpc_coefs):
            slave = dofs[0]
            for m, cm in zip(dofs[1:], coefs[1:]):
                if index[m] < 0:
                    raise SolverError("MPC master DOF is itself constrained")
                rows.append(slave)
                cols.append(index[m])
                vals.append(-cm / coefs[0])
        self.T = sp.csr_matrix((vals, (rows, cols)), shape=(n, len(self.kept)))
        self.Tt = self.T.T.tocsr()
        self.g = np.zeros(n)
        self.g[c.driven] = 1.0
        self.constraints = c

    @property
    def n_reduced(self) -> int:
        return len(self.kept)

    def matrix(self, K: sp.csr_matrix) -> sp.csr_matrix:
        return (self.Tt @ K @ self.T).tocsr()

    def vector(self, f: np.ndarray) -> np.ndarray:
        return self.Tt @ f

    def expand(self, u: np.ndarray, value: float) -> np.ndarray:
        return self.T @ u + self.g * value


def apply_constraints(system: GlobalSystem, constraints: ConstraintSet, ramp_value: float,
                      reduction: Reduction | None = None):
    """Reduced matrix and right-hand side for the prescribed ramp value.

    The returned right-hand side is for a linear solve from ``U = 0``:
    ``Kr u = -T^T K g * ramp_value``.
    """
    red = reduction or Reduction(constraints)
    Kr = red.matrix(system.K)
    rhs = -red.vector(system.K @ (red.g * ramp_value))
    return Kr, rhs, red


class SymmetricFactor:
    """Direct factorisation of a symmetric positive definite sparse matrix.

    Uses banded Cholesky when the bandwidth is small, otherwise SuperLU.
    """

    def __init__(self, K: sp.csr_matrix):
        K = K.tocoo()
        n = K.shape[0]
        upper = K.row <= K.col
        bw = int(np.max(K.col[upper] - K.row[upper])) if K.nnz else 0
        self.banded = bw < 0.1 * n or n < 2000
        if self.banded:
            ab = np.zeros((bw + 1, n))
            ab[bw + K.row[upper] - K.col[upper], K.col[upper]] = K.data[upper]
            try:
                self._cb = sla.cholesky_banded(ab, lower=False, check_finite=False)
            except np.linalg.LinAlgError as exc:
                raise SolverError("reduced stiffness is not positive definite") from exc
        else:
            self._lu = spla.splu(K.tocsc(), permc_spec="MMD_AT_PLUS_A")

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.banded:
            return sla.cho_solve_banded((self._cb, False), b, check_finite=False)
        return self._lu.solve(b)


def solve_linear(model: DCBModel, opening: float) -> np.ndarray:
    """Displacements of the virgin model (precrack open) for a prescribed opening."""
    Ke = model.layer.stiffness_from_moduli(model.layer.initial_moduli())
    K = Assembler(model.plate_K, model.cohesive_dofs).matrix(Ke)
    system = GlobalSystem(K, np.zeros(model.n_dof), model.layer.copy_state(), None)
    Kr, rhs, red = apply_constraints(system, model.constraints, opening)
    return red.expand(SymmetricFactor(Kr).solve(rhs), opening)


def reaction(model: DCBModel, f_int: np.ndarray) -> float:
    """Total force carried by the driven DOFs."""
    return float(f_int[model.constraints.driven].sum())


class Anderson:
    """Anderson mixing for the fixed-point map ``u -> u + du(u)``.

    Returns the correction to apply to ``u``; with depth 0 this is plain
    ``du``.  The converged point is unchanged, only the iterates differ.
    """

    def __init__(self, depth: int):
        self.depth = depth
        self.u_prev = self.f_prev = None
        self.dG, self.dF = [], []

    def reset(self):
        """Drop the mixing history; the next step is a plain correction."""
        self.u_prev = self.f_prev = None
        self.dG, self.dF = [], []

    def step(self, u, f):
        if self.depth == 0:
            return f
        g = u + f
        if self.f_prev is not None:
            self.dF.append(f - self.f_prev)
            self.dG.append(g - (self.u_prev + self.f_prev))
            if len(self.dF) > self.depth:
                self.dF.pop(0)
                self.dG.pop(0)
        self.u_prev, self.f_prev = u.copy(), f.copy()
        if not self.dF:
            return f
        F = np.column_stack(self.dF)
        gamma, *_ = np.linalg.lstsq(F, f, rcond=None)
        return g - np.column_stack(self.dG) @ gamma - u


@dataclass
class StepControl:
    target: float = 4.0
    initial: float = 0.04
    max_step: float = 0.08
    min_step: float = 1e-4
    cutback: float = 0.25
    growth: float = 1.5
    fast_iterations: int = 5
    max_iterations: int = 40
    max_cutbacks: int = 8
    force_tol: float = 5e-3
    disp_tol: float = 1e-6
    checkpoints: tuple = ()
    acceleration: int = 5  # Anderson depth for the secant iterations, 0 disables
    secant_iterations: int = 3000  # plain secant retry budget before a cutback

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial <= self.max_step:
            raise ValueError("need 0 < min_step <= initial <= max_step")
        if not 0 < self.cutback < 1 or not self.growth >= 1:
            raise ValueError("cutback must be in (0, 1) and growth >= 1")
        if not self.target > 0:
            raise ValueError("target opening must be positive")


@dataclass
class Snapshot:
    opening: float
    U: np.ndarray
    delta_max: np.ndarray


@dataclass
class AnalysisHistory:
    openings: list = field(default_factory=list)
    loads: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    external_work: list = field(default_factory=list)
    strain_energy: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    max_damage: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    completed: bool = False

    def as_arrays(self):
        return np.array(self.openings), np.array(self.loads)

    @property
    def peak(self) -> tuple[float, float]:
        """(critical opening, peak load)."""
        i = int(np.argmax(self.loads))
        return self.openings[i], self.loads[i]

    def snapshot(self, opening: float, tol: float = 1e-9) -> Snapshot:
        for s in self.snapshots:
            if abs(s.opening - opening) <= tol:
                return s
        raise KeyError(f"no snapshot recorded at opening {opening} mm")


def _iterate(model, layer, red, asm, Ut, depth, budget, ctl, state):
    """Secant iterations for one increment starting from ``Ut``.

    ``state`` carries the factorized reduced stiffness and the moduli it was
    built from, so consecutive increments with unchanged moduli reuse it.
    Returns ``(converged, Ut, iterations, state)``.
    """
    anderson = Anderson(depth)
    last_du = np.inf
    for it in range(1, budget + 1):
        _, dmax, _, moduli = layer.trial(Ut[model.cohesive_dofs])
        changed = state["factor"] is None or not np.array_equal(moduli, state["moduli"])
        if changed:
            state["Ke"] = layer.stiffness_from_moduli(moduli)
        f_int = internal_forces(model, Ut, state["Ke"])
        r = -red.vector(f_int)
        rnorm = float(np.abs(r).max())
        log.debug("  iteration %d  |r| %.3e  |du| %.3e  moduli changed %s",
                  it, rnorm, last_du, changed)
        if not np.isfinite(rnorm):
            return False, Ut, it, state
        if rnorm <= ctl.force_tol and last_du <= ctl.disp_tol:
            state.update(dmax=dmax, f_int=f_int, rnorm=rnorm)
            return True, Ut, it, state
        if changed:
            try:
                state["factor"] = SymmetricFactor(red.matrix(asm.matrix(state["Ke"])))
            except SolverError:
                state["factor"] = None
                return False, Ut, it, state
            state["moduli"] = moduli
        du = state["factor"].solve(r)
        last_du = float(np.abs(du).max())
        Ut = Ut + red.T @ anderson.step(Ut[red.kept], du)
    return False, Ut, budget, state


def run_analysis(model: DCBModel, control: StepControl | None = None,
                 keep_all: bool = False, progress=None) -> AnalysisHistory:
    """Displacement-controlled analysis up to ``control.target``.

    Snapshots (displacements and cohesive history) are stored at the
    checkpoint openings and at the final opening, or at every increment
    with ``keep_all``.  ``progress`` is an optional callable receiving one
    formatted line per converged increment.
    """
    ctl = control or StepControl()
    layer = model.layer
    red = Reduction(model.constraints)
    asm = Assembler(model.plate_K, model.cohesive_dofs)
    ip_area = layer.ip_weights
    intact = ~layer.precrack

    hist = AnalysisHistory()
    U = np.zeros(model.n_dof)
    U_prev, lam_prev = U.copy(), 0.0
    lam, step = 0.0, ctl.initial
    fast, cutbacks = 0, 0
    hist.openings.append(0.0)
    hist.loads.append(0.0)
    hist.iterations.append(0)
    hist.residuals.append(0.0)
    hist.external_work.append(0.0)
    hist.strain_energy.append(0.0)
    hist.dissipation.append(0.0)
    hist.max_damage.append(float(layer.damage()[intact].max(initial=0.0)))
    if 0.0 in ctl.checkpoints or keep_all:
        hist.snapshots.append(Snapshot(0.0, U.copy(), layer.copy_state()))
    checkpoints = sorted(c for c in ctl.checkpoints if 0 < c < ctl.target)

    state = {"factor": None, "moduli": None, "Ke": None}
    U_unit = None
    while lam < ctl.target - 1e-12:
        new_lam = min(lam + step, ctl.target)
        upcoming = [c for c in checkpoints if lam + 1e-12 < c < new_lam - 1e-12]
        if upcoming:
            new_lam = upcoming[0]
        new_lam = next((c for c in checkpoints if abs(new_lam - c) < 1e-9), new_lam)
        # predictor: extrapolate the last converged increment
        if lam > 0 and lam - lam_prev > 0:
            Ut = U + (U - U_prev) * (new_lam - lam) / (lam - lam_prev)
        else:
            if U_unit is None:
                U_unit = solve_linear(model, 1.0)
            Ut = U_unit * new_lam
        Ut[model.constraints.driven] = new_lam
        Ut[model.constraints.fixed] = 0.0
        Ut = red.expand(Ut[red.kept], new_lam)

        predictor = Ut
        converged, total = False, 0
        attempts = [(ctl.acceleration, ctl.max_iterations)] if ctl.acceleration else []
        attempts.append((0, ctl.secant_iterations))
        for depth, budget in attempts:
            converged, Ut, it, state = _iterate(model, layer, red, asm, predictor,
                                                depth, budget, ctl, state)
            total += it
            if converged:
                break
            log.debug("  attempt with acceleration depth %d failed after %d iterations",
                      depth, it)
        it = total
        if converged:
            dmax, f_int, rnorm = state["dmax"], state["f_int"], state["rnorm"]

        if not converged:
            cutbacks += 1
            fast = 0
            if cutbacks > ctl.max_cutbacks or step * ctl.cutback < ctl.min_step:
                msg = (f"no convergence at opening {new_lam:.6g} mm; "
                       f"last converged opening {lam:.6g} mm")
                log.error(msg)
                raise AnalysisAborted(msg, hist)
            step *= ctl.cutback
            continue

        cutbacks = 0
        layer.commit(dmax)
        U_prev, lam_prev = U, lam
        U, lam = Ut, new_lam
        load = reaction(model, f_int)
        hist.openings.append(lam)
        hist.loads.append(load)
        hist.iterations.append(it)
        hist.residuals.append(rnorm)
        hist.external_work.append(hist.external_work[-1]
                                  + 0.5 * (load + hist.loads[-2]) * (lam - lam_prev))
        hist.strain_energy.append(0.5 * float(U @ f_int))
        dm = np.where(np.isfinite(layer.delta_max), layer.delta_max, 0.0)
        hist.dissipation.append(float((ip_area * dissipated_energy(dm, layer.props))[intact].sum()))
        hist.max_damage.append(float(layer.damage()[intact].max(initial=0.0)))
        if keep_all or any(abs(lam - c) < 1e-9 for c in ctl.checkpoints) or lam >= ctl.target - 1e-12:
            hist.snapshots.append(Snapshot(lam, U.copy(), layer.copy_state()))
        line = f"step {len(hist.openings) - 1:4d}  opening {lam:8.5f} mm  load {load:9.4f} N  iterations {it:4d}"
        log.info(line)
        if progress is not None:
            progress(line)

        fast = fast + 1 if it <= ctl.fast_iterations else 0
        if fast >= 2:
            step = min(step * ctl.growth, ctl.max_step)
            fast = 0
    hist.completed = True
    return hist
