"""Beam-theory load-opening reference for the double cantilever beam.

Each arm is an Euler-Bernoulli cantilever of length ``a + delta_corr``
clamped at the crack front, so the opening of the two loaded ends is

    delta = 2 P (a + delta_corr)^3 / (3 EI)

and the energy release rate is

    G_I = P^2 (a + delta_corr)^2 / (b EI).

The root-rotation correction follows the elastic-foundation estimate

    delta_corr = h * sqrt(E_xx / (11 G_xz)) * (3 - 2 (g / (1 + g))^2),
    g = 1.18 * sqrt(E_xx E_zz) / G_xz,

with ``h`` the arm thickness.  ``delta_corr = 0`` recovers simple beam
theory.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dcb import DCBGeometry
from .laminate import Material


def root_rotation_correction(material: Material, arm_thickness: float) -> float:
    """Crack-length correction of corrected beam theory (mm)."""
    if not arm_thickness > 0:
        raise ValueError("arm thickness must be positive")
    g = 1.18 * math.sqrt(material.E_xx * material.E_zz) / material.G_xz
    return arm_thickness * math.sqrt(material.E_xx / (11.0 * material.G_xz)) * (
        3.0 - 2.0 * (g / (1.0 + g)) ** 2)


@dataclass(frozen=True)
class BeamModel:
    """One DCB arm seen as a cantilever.

    ``EI`` is the flexural rigidity of one arm (N mm^2) and ``delta_corr``
    the crack-length correction (mm).
    """

    EI: float
    width: float
    precrack: float
    G_Ic: float
    delta_corr: float = 0.0

    def __post_init__(self):
        if not self.EI > 0:
            raise ValueError("EI must be positive")
        if not self.delta_corr >= 0:
            raise ValueError("delta_corr must be non-negative")
        if not (self.width > 0 and self.precrack > 0 and self.G_Ic > 0):
            raise ValueError("width, precrack and G_Ic must be positive")

    @classmethod
    def from_specimen(cls, geom: DCBGeometry, material: Material,
                      corrected: bool = True, delta_corr: float | None = None) -> "BeamModel":
        """Beam model of ``geom`` made of ``material``.

        ``delta_corr`` overrides the computed correction; ``corrected=False``
        gives simple beam theory.
        """
        h = geom.arm_thickness
        EI = material.E_xx * geom.width * h ** 3 / 12.0
        if delta_corr is None:
            delta_corr = root_rotation_correction(material, h) if corrected else 0.0
        return cls(EI, geom.width, geom.precrack, material.G_Ic, float(delta_corr))

    @property
    def _root(self) -> float:
        return math.sqrt(self.G_Ic * self.width * self.EI)

    def compliance(self, crack_length: float) -> float:
        """Opening per unit load for a crack of length ``crack_length``."""
        return 2.0 * (crack_length + self.delta_corr) ** 3 / (3.0 * self.EI)

    def energy_release_rate(self, load, crack_length):
        ae = crack_length + self.delta_corr
        return np.asarray(load) ** 2 * ae ** 2 / (self.width * self.EI)

    @property
    def critical_load(self) -> float:
        return self._root / (self.precrack + self.delta_corr)

    @property
    def critical_opening(self) -> float:
        return self.critical_load * self.compliance(self.precrack)

    def crack_length(self, opening):
        """Crack length on the propagation branch at ``opening``."""
        opening = np.asarray(opening, dtype=float)
        ae = np.sqrt(1.5 * self.EI * opening / self._root)
        return np.maximum(ae - self.delta_corr, self.precrack)

    def load(self, opening):
        """Load at ``opening``: linear up to the critical point, then G_I = G_Ic."""
        opening = np.asarray(opening, dtype=float)
        linear = opening / self.compliance(self.precrack)
        ae = np.sqrt(1.5 * self.EI * np.maximum(opening, 0.0) / self._root)
        with np.errstate(divide="ignore"):
            propagating = self._root / ae
        return np.where(opening <= self.critical_opening, linear, propagating)


def simple_beam_critical_load(geom: DCBGeometry, material: Material) -> float:
    return BeamModel.from_specimen(geom, material, corrected=False).critical_load


def corrected_beam_critical_load(geom: DCBGeometry, material: Material,
                                 delta_corr: float | None = None) -> float:
    return BeamModel.from_specimen(geom, material, delta_corr=delta_corr).critical_load


def cbt_curve(geom: DCBGeometry, material: Material, n_samples: int = 201,
              max_opening: float = 4.0, corrected: bool = True,
              delta_corr: float | None = None) -> list[tuple[float, float]]:
    """Sampled (opening mm, load N) pairs over ``[0, max_opening]``.

    The critical point is always included as a sample so the corner of the
    curve is not cut off.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    beam = BeamModel.from_specimen(geom, material, corrected, delta_corr)
    d = np.linspace(0.0, max_opening, n_samples)
    if beam.critical_opening < max_opening:
        d = np.unique(np.append(d, beam.critical_opening))
    return [(float(x), float(p)) for x, p in zip(d, beam.load(d))]


def write_curve_csv(curve, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["opening_mm", "load_N"])
        for x, p in curve:
            w.writerow([f"{x:.8g}", f"{p:.8g}"])
    return path
