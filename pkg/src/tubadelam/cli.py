"""Batch front end: ``run <config.json>`` and the CSV/VTK writers.

A run configuration is a JSON document::

    {
      "schema": "tubadelam.run/1",
      "name": "dcb_2mm_13ip",
      "geometry": {"length": 150, "width": 25, "thickness": 3, "precrack": 30.5},
      "material": {"E_xx": 139400, ...},
      "mesh": {"h_fine": 2, "h_coarse": 5},
      "integration": {"points": 13, "levels": 0},
      "step_control": {"target": 4.0, "max_step": 0.04},
      "output": {"directory": "out/dcb_2mm_13ip", "profiles": [4.0],
                 "damage_maps": [4.0], "cbt_curve": true},
      "cbt": {"delta_corr": null}
    }

``material`` may also be the string ``"T300/1076"``.  The whole document
is validated before any mesh is built or any file is written.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import jsonschema
import numpy as np

from .cbt import cbt_curve, write_curve_csv
from .cohesive import secant_moduli
from .dcb import DCBGeometry, Mesh
from .laminate import Material, T300_1076
from .solver import (AnalysisAborted, AnalysisHistory, DCBModel, StepControl,
                     build_model, run_analysis)

log = logging.getLogger("tubadelam")

SCHEMA_VERSION = "tubadelam.run/1"
MATERIALS = {"T300/1076": T300_1076}

_positive = {"type": "number", "exclusiveMinimum": 0}
_openings = {"type": "array", "items": {"type": "number", "minimum": 0}}
_material_fields = [f.name for f in fields(Material)]

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema", "geometry", "material", "mesh", "integration"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "pattern": r"^[A-Za-z0-9_.-]+$"},
        "geometry": {
            "type": "object",
            "required": ["length", "width", "thickness", "precrack"],
            "additionalProperties": False,
            "properties": {k: _positive for k in ("length", "width", "thickness", "precrack")},
        },
        "material": {
            "oneOf": [
                {"enum": sorted(MATERIALS)},
                {"type": "object", "required": _material_fields,
                 "additionalProperties": False,
                 "properties": {k: {"type": "number"} for k in _material_fields}},
            ]
        },
        "mesh": {
            "type": "object",
            "required": ["h_fine", "h_coarse"],
            "additionalProperties": False,
            "properties": {
                "h_fine": _positive,
                "h_coarse": _positive,
                "window_before": {"type": "number", "minimum": 0},
                "window_after": {"type": "number", "minimum": 0},
            },
        },
        "integration": {
            "type": "object",
            "required": ["points"],
            "additionalProperties": False,
            "properties": {
                "points": {"enum": [1, 3, 4, 6, 7, 13]},
                "levels": {"type": "integer", "minimum": 0, "maximum": 3},
            },
        },
        "step_control": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "target": _positive, "initial": _positive, "max_step": _positive,
                "min_step": _positive, "cutback": _positive, "growth": _positive,
                "fast_iterations": {"type": "integer", "minimum": 1},
                "max_iterations": {"type": "integer", "minimum": 1},
                "secant_iterations": {"type": "integer", "minimum": 1},
                "max_cutbacks": {"type": "integer", "minimum": 0},
                "force_tol": _positive, "disp_tol": _positive,
                "acceleration": {"type": "integer", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string", "minLength": 1},
                "profiles": _openings,
                "damage_maps": _openings,
                "cbt_curve": {"type": "boolean"},
            },
        },
        "cbt": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"delta_corr": {"type": ["number", "null"], "minimum": 0}},
        },
    },
}


class ConfigError(ValueError):
    """Invalid run configuration; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class RunConfig:
    name: str
    geometry: DCBGeometry
    material: Material
    points: int
    levels: int
    control: StepControl
    out_dir: Path
    profiles: list = field(default_factory=list)
    damage_maps: list = field(default_factory=list)
    write_cbt: bool = True
    delta_corr: float | None = None

    @classmethod
    def from_dict(cls, doc: dict, default_name: str = "run") -> "RunConfig":
        validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
        if errors:
            e = errors[0]
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(path, e.message)

        name = doc.get("name", default_name)
        g, m = doc["geometry"], doc["mesh"]
        mat = doc["material"]
        try:
            material = MATERIALS[mat] if isinstance(mat, str) else Material(**mat)
        except ValueError as exc:
            raise ConfigError("material", str(exc)) from None
        try:
            geometry = DCBGeometry(length=g["length"], width=g["width"],
                                   thickness=g["thickness"], precrack=g["precrack"],
                                   **{k: v for k, v in m.items()})
        except ValueError as exc:
            raise ConfigError("mesh", str(exc)) from None

        out = doc.get("output", {})
        profiles = [float(x) for x in out.get("profiles", [])]
        maps = [float(x) for x in out.get("damage_maps", [])]
        step = dict(doc.get("step_control", {}))
        target = step.get("target", StepControl.target)
        for key, values in (("profiles", profiles), ("damage_maps", maps)):
            if any(v > target for v in values):
                raise ConfigError(f"output/{key}", "opening beyond the target opening")
        try:
            control = StepControl(**step, checkpoints=tuple(sorted(set(profiles + maps))))
        except ValueError as exc:
            raise ConfigError("step_control", str(exc)) from None

        integ = doc["integration"]
        return cls(name=name, geometry=geometry, material=material,
                   points=integ["points"], levels=integ.get("levels", 0),
                   control=control,
                   out_dir=Path(out.get("directory", Path("out") / name)),
                   profiles=profiles, damage_maps=maps,
                   write_cbt=out.get("cbt_curve", True),
                   delta_corr=doc.get("cbt", {}).get("delta_corr"))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"not valid JSON ({exc})") from None
    return RunConfig.from_dict(doc, default_name=path.stem)


def bundled_config(name: str) -> Path:
    """Path of one of the configurations shipped with the package."""
    path = Path(__file__).with_name("configs") / f"{name}.json"
    if not path.exists():
        raise FileNotFoundError(f"no bundled configuration named {name!r}")
    return path


# -- post-processing --------------------------------------------------------

def _opening_tag(opening: float) -> str:
    return f"{opening:g}"


def ip_fields(model: DCBModel, history: AnalysisHistory, opening: float):
    """Per-IP positions, mode I tractions and damage at a recorded opening."""
    snap = history.snapshot(opening)
    layer = model.layer
    delta = layer.openings(snap.U[model.cohesive_dofs])
    d = layer.damage(snap.delta_max)
    moduli = secant_moduli(delta[..., 0], d, layer.props.penalty)
    tau = moduli[..., 0] * delta[..., 0]
    return layer.ip_positions(), tau, d


def centerline_row(mesh: Mesh, width: float) -> np.ndarray:
    """Triangles of the element row just above mid-width, ordered by x."""
    j = int(np.searchsorted(mesh.y, 0.5 * width, side="right")) - 1
    j = min(max(j, 0), len(mesh.y) - 2)
    c = mesh.centroids()
    rows = np.nonzero((c[:, 1] > mesh.y[j]) & (c[:, 1] < mesh.y[j + 1]))[0]
    return rows[np.argsort(c[rows, 0], kind="stable")]


def barycentric_ip(model: DCBModel) -> np.ndarray:
    """Index, per element, of the integration point nearest the centroid."""
    pos = model.layer.ip_positions()
    cen = model.mesh.centroids()
    return np.argmin(np.linalg.norm(pos - cen[:, None, :], axis=2), axis=1)


def profile_table(model: DCBModel, history: AnalysisHistory, opening: float) -> np.ndarray:
    """(x_mm, tau_I_MPa, d) along the centerline row at ``opening``."""
    pos, tau, d = ip_fields(model, history, opening)
    row = centerline_row(model.mesh, model.geometry.width)
    ip = barycentric_ip(model)[row]
    return np.column_stack([pos[row, ip, 0], tau[row, ip], d[row, ip]])


def _write_csv(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.8g}" if isinstance(v, float) else v for v in r])
    return path


def export_profiles(history: AnalysisHistory, model: DCBModel, opening: float,
                    out_dir) -> Path:
    table = profile_table(model, history, opening)
    path = Path(out_dir) / f"profile_{_opening_tag(opening)}.csv"
    return _write_csv(path, ["x_mm", "tau_I_MPa", "d"], [list(map(float, r)) for r in table])


def write_vtk(path: Path, mesh: Mesh, cell_data: dict, title: str) -> Path:
    """Legacy ASCII VTK unstructured grid of the cohesive layer (z = 0)."""
    xyz = np.column_stack([mesh.plan_xy, np.zeros(mesh.n_plan)])
    tri = mesh.triangles
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {len(xyz)} double"]
    lines += [f"{x:.10g} {y:.10g} {z:.10g}" for x, y, z in xyz]
    lines.append(f"CELLS {len(tri)} {4 * len(tri)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in tri]
    lines.append(f"CELL_TYPES {len(tri)}")
    lines += ["5"] * len(tri)
    lines.append(f"CELL_DATA {len(tri)}")
    for name, values in cell_data.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.10g}" for v in values]
    path.write_text("\n".join(lines) + "\n")
    return path


def export_damage_map(history: AnalysisHistory, model: DCBModel, opening: float,
                      out_dir) -> tuple[Path, Path]:
    """Per-IP damage table and a VTK file of the cohesive layer."""
    pos, _, d = ip_fields(model, history, opening)
    tag = _opening_tag(opening)
    out_dir = Path(out_dir)
    rows = [[float(x), float(y), float(v)]
            for (x, y), v in zip(pos.reshape(-1, 2), d.reshape(-1))]
    csv_path = _write_csv(out_dir / f"damage_{tag}.csv", ["x_mm", "y_mm", "d"], rows)
    ip = barycentric_ip(model)
    vtk_path = write_vtk(out_dir / f"damage_{tag}.vtk", model.mesh,
                         {"damage_mean": d.mean(axis=1),
                          "damage_centroid": d[np.arange(len(d)), ip]},
                         f"cohesive damage at {tag} mm opening")
    return csv_path, vtk_path


def export_load_displacement(history: AnalysisHistory, out_dir) -> Path:
    rows = [[float(o), float(p), int(i)] for o, p, i in
            zip(history.openings, history.loads, history.iterations)]
    return _write_csv(Path(out_dir) / "load_disp.csv",
                      ["opening_mm", "load_N", "iterations"], rows)


# -- driver -------------------------------------------------------------------

def execute(cfg: RunConfig, echo: bool = True) -> int:
    """Run a validated configuration and write its outputs; returns exit status.

    The increment log goes to ``run.log`` and, with ``echo``, to stdout.
    """
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(message)s"))
    handler.setLevel(logging.INFO)
    log.addHandler(handler)
    if log.getEffectiveLevel() > logging.INFO:
        log.setLevel(logging.INFO)
    try:
        log.info("run %s: h_fine %g mm, h_coarse %g mm, %d-point rule, %d subdivision level(s)",
                 cfg.name, cfg.geometry.h_fine, cfg.geometry.h_coarse, cfg.points, cfg.levels)
        model = build_model(cfg.geometry, cfg.material, cfg.points, cfg.levels,
                            load_target=cfg.control.target)
        log.info("mesh: %d elements, %d dof", model.mesh.n_elements, model.n_dof)
        if cfg.write_cbt:
            write_curve_csv(cbt_curve(cfg.geometry, cfg.material, max_opening=cfg.control.target,
                                      delta_corr=cfg.delta_corr), out / "cbt.csv")
        status = 0
        try:
            history = run_analysis(model, cfg.control, progress=print if echo else None)
        except AnalysisAborted as exc:
            log.error("analysis aborted: %s", exc)
            history, status = exc.history, 1
        export_load_displacement(history, out)
        for openings, export in ((cfg.profiles, export_profiles),
                                 (cfg.damage_maps, export_damage_map)):
            for opening in openings:
                try:
                    export(history, model, opening, out)
                except KeyError:
                    log.warning("opening %g mm not reached; nothing exported for it", opening)
        if status == 0:
            o, p = history.peak
            log.info("peak load %.4f N at opening %.5f mm", p, o)
        return status
    finally:
        log.removeHandler(handler)
        handler.close()


def run(config_path, out_dir=None, profiles=(), damage_maps=()) -> int:
    """Validate ``config_path`` and execute it; command-line options override the file."""
    cfg = load_config(config_path)
    if out_dir is not None or profiles or damage_maps:
        doc = json.loads(Path(config_path).read_text())
        output = doc.setdefault("output", {})
        if out_dir is not None:
            output["directory"] = str(out_dir)
        if profiles:
            output["profiles"] = list(profiles)
        if damage_maps:
            output["damage_maps"] = list(damage_maps)
        cfg = RunConfig.from_dict(doc, default_name=cfg.name)
    return execute(cfg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tubadelam",
                                     description="TUBA3 plate / cohesive delamination solver")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an analysis from a JSON configuration")
    p.add_argument("config", help="configuration file, or the name of a bundled one")
    p.add_argument("--out", help="output directory (overrides the configuration)")
    p.add_argument("--profiles", nargs="+", type=float, default=[], metavar="OPENING_MM",
                   help="openings at which to write cohesive-zone profiles")
    p.add_argument("--damage-map", nargs="+", type=float, default=[], metavar="OPENING_MM",
                   help="openings at which to write damage maps")
    p.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    args = parser.parse_args(argv)

    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(logging.Formatter("%(message)s"))
    console.setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    saved = log.level, log.propagate
    log.addHandler(console)
    log.propagate = False
    log.setLevel(logging.DEBUG if args.verbose else logging.INFO)
    try:
        path = Path(args.config)
        if not path.exists():
            try:
                path = bundled_config(args.config)
            except FileNotFoundError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
        try:
            return run(path, args.out, args.profiles, args.damage_map)
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return 2
    finally:
        log.removeHandler(console)
        log.setLevel(saved[0])
        log.propagate = saved[1]


if __name__ == "__main__":
    sys.exit(main())
