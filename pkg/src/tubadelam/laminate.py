"""Ply material data and classical-laminate-theory bending stiffness.

Units throughout the package are N, mm and MPa (N/mm^2); fracture
toughnesses are in N/mm (1 kJ/m^2 == 1 N/mm).
"""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np


@dataclass(frozen=True)
class Material:
    """Orthotropic ply with interface fracture data."""

    E_xx: float
    E_yy: float
    E_zz: float
    nu_xy: float
    nu_xz: float
    nu_yz: float
    G_xy: float
    G_xz: float
    G_yz: float
    G_Ic: float
    G_IIc: float
    tau_I0: float
    tau_II0: float
    eta_BK: float

    def __post_init__(self):
        positive = ("E_xx", "E_yy", "E_zz", "G_xy", "G_xz", "G_yz",
                    "G_Ic", "G_IIc", "tau_I0", "tau_II0", "eta_BK")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.nu_xy * self.nu_yx < 1:
            raise ValueError("nu_xy * nu_yx must be < 1")

    @property
    def nu_yx(self) -> float:
        return self.nu_xy * self.E_yy / self.E_xx

    def to_dict(self) -> dict:
        return asdict(self)


# T300/1076 graphite-epoxy, unidirectional (moduli converted GPa -> MPa)
T300_1076 = Material(
    E_xx=139.4e3, E_yy=10.16e3, E_zz=10.16e3,
    nu_xy=0.3, nu_xz=0.3, nu_yz=0.436,
    G_xy=4.6e3, G_xz=4.6e3, G_yz=3.54e3,
    G_Ic=0.170, G_IIc=0.494,
    tau_I0=30.0, tau_II0=50.0,
    eta_BK=1.62,
)


@dataclass(frozen=True)
class PlateStiffness:
    """Bending stiffness of a plate with no bend-twist coupling (N mm).

    D33 multiplies the engineering twist curvature 2*w_xy.
    """

    D11: float
    D12: float
    D22: float
    D33: float

    def __post_init__(self):
        if not (self.D11 > 0 and self.D22 > 0 and self.D33 > 0
                and self.D11 * self.D22 - self.D12 ** 2 > 0):
            raise ValueError("bending stiffness must be positive definite")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.D11, self.D12, 0.0],
                         [self.D12, self.D22, 0.0],
                         [0.0, 0.0, self.D33]])

    def scaled(self, factor: float) -> "PlateStiffness":
        return PlateStiffness(self.D11 * factor, self.D12 * factor,
                              self.D22 * factor, self.D33 * factor)


def reduced_stiffness(material: Material) -> np.ndarray:
    """Plane-stress reduced stiffness Q of a 0 degree ply."""
    m = material
    denom = 1.0 - m.nu_xy * m.nu_yx
    Q11 = m.E_xx / denom
    Q22 = m.E_yy / denom
    Q12 = m.nu_xy * m.E_yy / denom
    return np.array([[Q11, Q12, 0.0], [Q12, Q22, 0.0], [0.0, 0.0, m.G_xy]])


def plate_bending_stiffness(material: Material, thickness: float,
                            ply_angle: float = 0.0) -> PlateStiffness:
    """Bending stiffness ``D = Q t^3 / 12`` of a single unidirectional ply.

    Only 0 degree plies are supported; for those the bend-twist terms
    D13 and D23 vanish identically.
    """
    if not thickness > 0:
        raise ValueError("thickness must be positive")
    if ply_angle != 0:
        raise ValueError("only 0 degree plies are supported")
    Q = reduced_stiffness(material)
    D = Q * thickness ** 3 / 12.0
    return PlateStiffness(D11=float(D[0, 0]), D12=float(D[0, 1]),
                          D22=float(D[1, 1]), D33=float(D[2, 2]))


def isotropic(E: float, nu: float, G_Ic: float = 1.0, tau_I0: float = 1.0) -> Material:
    """Isotropic material, mostly useful for verification cases."""
    G = E / (2.0 * (1.0 + nu))
    return Material(E, E, E, nu, nu, nu, G, G, G, G_Ic, G_Ic, tau_I0, tau_I0, 1.0)
