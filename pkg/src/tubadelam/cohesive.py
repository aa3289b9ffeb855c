"""Cohesive element compatible with TUBA3 plates, bilinear mode I law.

The element shares its in-plane triangle with a bottom and a top plate.
Its 36 DOFs are the bottom plate's 18 followed by the top plate's 18.
Openings are linear in the DOFs:

    D_I   = w_top - w_bot
    D_II  = t_b/2 * dw_bot/dx + t_t/2 * dw_top/dx
    D_III = t_b/2 * dw_bot/dy + t_t/2 * dw_top/dy

Only the mode I opening drives damage.  Shear rows are degraded by the
same damage variable; the mode I row keeps full penalty stiffness in
compression so the faces cannot interpenetrate.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .laminate import Material
from .trigeom import (QuadratureRule, SubdomainLayout, Triangle,
                      composite_points, gauss_rule, subdivide)
from .tuba3 import NDOF, Tuba3Geometry


@dataclass(frozen=True)
class CohesiveProps:
    penalty: float  # N/mm^3
    tau_I0: float   # MPa
    G_Ic: float     # N/mm

    def __post_init__(self):
        if not (self.penalty > 0 and self.tau_I0 > 0 and self.G_Ic > 0):
            raise ValueError("cohesive properties must be positive")
        if not self.delta_f > self.delta_0:
            raise ValueError("failure opening must exceed onset opening")

    @classmethod
    def from_material(cls, material: Material, laminate_thickness: float):
        """Penalty stiffness ``50 E_zz / t`` with ``t`` the full laminate thickness."""
        return cls(50.0 * material.E_zz / laminate_thickness,
                   material.tau_I0, material.G_Ic)

    @property
    def delta_0(self) -> float:
        return self.tau_I0 / self.penalty

    @property
    def delta_f(self) -> float:
        return 2.0 * self.G_Ic / self.tau_I0


def bilinear_damage(delta_max, props: CohesiveProps):
    """Damage from the largest mode I opening reached so far."""
    dm = np.asarray(delta_max, dtype=float)
    d0, df = props.delta_0, props.delta_f
    safe = np.where(dm > d0, dm, 1.0)
    d = np.where(dm > d0, df * (dm - d0) / (safe * (df - d0)), 0.0)
    return np.clip(d, 0.0, 1.0)


def dissipated_energy(delta_max, props: CohesiveProps):
    """Energy per unit area dissipated once ``delta_max`` has been reached."""
    dm = np.maximum(np.asarray(delta_max, dtype=float), 0.0)
    d0, df, t0 = props.delta_0, props.delta_f, props.tau_I0
    reached = np.minimum(dm, df)
    tau = np.where(reached > d0, t0 * (df - reached) / (df - d0), props.penalty * reached)
    work = np.where(reached > d0,
                    0.5 * t0 * d0 + 0.5 * (t0 + tau) * (reached - d0),
                    0.5 * props.penalty * reached ** 2)
    return work - 0.5 * tau * reached


def secant_moduli(delta_I, damage, penalty: float):
    """Diagonal of the degraded constitutive matrix, shape ``(..., 3)``."""
    d_I = np.where(delta_I > 0, damage, 0.0)
    ks = (1.0 - damage) * penalty
    return np.stack([(1.0 - d_I) * penalty, ks, ks], axis=-1)


@dataclass(frozen=True)
class CohesiveIPState:
    delta_max: float = 0.0
    damage: float = 0.0
    precrack: bool = False

    @classmethod
    def precracked(cls):
        return cls(delta_max=np.inf, damage=1.0, precrack=True)


def traction_update(delta, state: CohesiveIPState, props: CohesiveProps):
    """Tractions, damage and updated history for one integration point."""
    delta = np.asarray(delta, dtype=float)
    dmax = max(state.delta_max, float(delta[0]))
    d = 1.0 if state.precrack else float(bilinear_damage(dmax, props))
    d = max(d, state.damage)
    tau = secant_moduli(delta[0], d, props.penalty) * delta
    return tau, d, replace(state, delta_max=dmax, damage=d)


class CohesiveLayer:
    """A batch of cohesive elements with their integration-point history.

    Parameters
    ----------
    xy : (n, 3, 2) corner coordinates shared with the paired plates
    t_bot, t_top : plate thicknesses
    props : cohesive law
    layout, rule : sub-domain layout and Gaussian rule per element
    precrack : (n,) bool, elements initially fully debonded
    """

    def __init__(self, xy, t_bot: float, t_top: float, props: CohesiveProps,
                 layout: SubdomainLayout | None = None,
                 rule: QuadratureRule | None = None, precrack=None):
        self.geometry = Tuba3Geometry(xy)
        n = len(self.geometry)
        self.t_bot, self.t_top, self.props = float(t_bot), float(t_top), props
        self.layout = layout if layout is not None else subdivide(0)
        self.rule = rule if rule is not None else gauss_rule(13)
        self.ip_coords, w = composite_points(self.layout, self.rule)
        # 0.5 * w * det(J_r) * det(J_L)
        self.ip_weights = w[None, :] * self.geometry.area[:, None]      # (n, m)
        self.N = self.geometry.values(self.ip_coords)                    # (n, m, 18)
        grads = self.geometry.gradients(self.ip_coords)                  # (n, m, 2, 18)
        self.Nx = np.ascontiguousarray(grads[:, :, 0])
        self.Ny = np.ascontiguousarray(grads[:, :, 1])
        self.precrack = (np.zeros(n, bool) if precrack is None
                         else np.asarray(precrack, bool).copy())
        self.delta_max = np.zeros((n, self.n_ip))
        self.delta_max[self.precrack] = np.inf

    def __len__(self):
        return len(self.geometry)

    @property
    def n_ip(self) -> int:
        return len(self.ip_coords)

    def ip_positions(self) -> np.ndarray:
        """Cartesian integration-point coordinates, shape (n, m, 2)."""
        return np.einsum("mi,nid->nmd", self.ip_coords, self.geometry.xy)

    def openings(self, Ue) -> np.ndarray:
        """Openings (n, m, 3) for element DOF vectors ``Ue`` of shape (n, 36)."""
        Ue = np.asarray(Ue, dtype=float)
        ub, ut = Ue[:, :NDOF], Ue[:, NDOF:]
        rot = 0.5 * (self.t_bot * ub + self.t_top * ut)
        return np.stack([np.einsum("nmk,nk->nm", self.N, ut - ub),
                         np.einsum("nmk,nk->nm", self.Nx, rot),
                         np.einsum("nmk,nk->nm", self.Ny, rot)], axis=-1)

    def damage(self, delta_max=None) -> np.ndarray:
        dm = self.delta_max if delta_max is None else delta_max
        d = bilinear_damage(np.where(np.isfinite(dm), dm, 0.0), self.props)
        d[np.broadcast_to(self.precrack[:, None], d.shape)] = 1.0
        return d

    def trial(self, Ue):
        """Trial state at ``Ue``: openings, history, damage and moduli."""
        delta = self.openings(Ue)
        dmax = np.maximum(self.delta_max, delta[..., 0])
        d = self.damage(dmax)
        return delta, dmax, d, secant_moduli(delta[..., 0], d, self.props.penalty)

    def initial_moduli(self) -> np.ndarray:
        """Moduli of the virgin state with precracked faces taken as open."""
        moduli = np.full((len(self), self.n_ip, 3), self.props.penalty)
        moduli[self.precrack] = 0.0
        return moduli

    def tractions(self, Ue) -> np.ndarray:
        delta, _, _, moduli = self.trial(Ue)
        return moduli * delta

    def stiffness_from_moduli(self, moduli) -> np.ndarray:
        """Secant stiffness matrices (n, 36, 36) for per-IP moduli (n, m, 3)."""
        wt = self.ip_weights
        sn = (wt * moduli[..., 0])[..., None] * self.N
        ss = (wt * moduli[..., 1])[..., None]
        SN = self.N.transpose(0, 2, 1) @ sn
        SS = (self.Nx.transpose(0, 2, 1) @ (ss * self.Nx)
              + self.Ny.transpose(0, 2, 1) @ (ss * self.Ny))
        hb, ht = 0.5 * self.t_bot, 0.5 * self.t_top
        K = np.empty((len(self), 2 * NDOF, 2 * NDOF))
        K[:, :NDOF, :NDOF] = SN + hb * hb * SS
        K[:, :NDOF, NDOF:] = -SN + hb * ht * SS
        K[:, NDOF:, :NDOF] = -SN + hb * ht * SS
        K[:, NDOF:, NDOF:] = SN + ht * ht * SS
        return K

    def stiffness_residual(self, Ue):
        """Secant stiffness and residual ``f = -K U`` at the trial state.

        Returns ``(K, f, dmax)``; ``dmax`` is the trial history to pass to
        :meth:`commit` once the step has converged.
        """
        _, dmax, _, moduli = self.trial(Ue)
        K = self.stiffness_from_moduli(moduli)
        f = -np.einsum("nij,nj->ni", K, np.asarray(Ue, dtype=float))
        return K, f, dmax

    def commit(self, delta_max) -> None:
        self.delta_max = np.maximum(self.delta_max, delta_max)
        self.delta_max[self.precrack] = np.inf

    def copy_state(self) -> np.ndarray:
        return self.delta_max.copy()


@dataclass
class CohesiveElement:
    """Single cohesive element, a thin wrapper over a one-element layer."""

    triangle: Triangle
    t_bot: float
    t_top: float
    props: CohesiveProps
    levels: int = 0
    n_points: int = 13
    precrack: bool = False
    dofs: np.ndarray | None = None

    def __post_init__(self):
        self.layer = CohesiveLayer(self.triangle.xy[None], self.t_bot, self.t_top,
                                   self.props, subdivide(self.levels),
                                   gauss_rule(self.n_points), [self.precrack])
        if self.dofs is None:
            self.dofs = np.arange(2 * NDOF)

    def ip_states(self) -> list[CohesiveIPState]:
        dm, d = self.layer.delta_max[0], self.layer.damage()[0]
        return [CohesiveIPState(float(a), float(b), self.precrack) for a, b in zip(dm, d)]


def opening_matrix(L, elem: CohesiveElement) -> np.ndarray:
    """B matrix (3 x 36) mapping element DOFs to openings at ``L``."""
    L = np.asarray(L, dtype=float)[None]
    g = elem.layer.geometry
    N = g.values(L)[0, 0]
    grad = g.gradients(L)[0, 0]
    hb, ht = 0.5 * elem.t_bot, 0.5 * elem.t_top
    return np.vstack([np.concatenate([-N, N]),
                      np.concatenate([hb * grad[0], ht * grad[0]]),
                      np.concatenate([hb * grad[1], ht * grad[1]])])


def openings(U, L, elem: CohesiveElement) -> np.ndarray:
    return opening_matrix(L, elem) @ np.asarray(U, dtype=float)


def ce_stiffness_residual(elem: CohesiveElement, U):
    """``(K, f)`` of one element at the trial displacement ``U``."""
    K, f, _ = elem.layer.stiffness_residual(np.asarray(U, dtype=float)[None])
    return K[0], f[0]
