"""Configuration files, benchmark presets, result writers and the CLI.

Configs are plain sectioned key=value text.  A file may start with
``preset = <name>`` to expand one of the built-in benchmark setups and
then override individual keys.  Sections: [geometry], [material],
[material.regionN], [anisotropy], [cz], [load], [solver], [output].
Unknown sections or keys are rejected with the offending name and line.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import verify
from .czm import CzParams
from .mesh import (
    Band,
    Everywhere,
    HalfPlane,
    Mesh,
    assign_regions,
    generate_sent,
    generate_three_point_bending,
    insert_interface,
)
from .model import (
    AnisotropicVoigt,
    ArbitraryAnisotropy,
    FrequencyTerm,
    Isotropic,
    MaterialParams,
    PhaseFieldKind,
    SplitKind,
    StructuralAnisotropy,
)
from .postproc import NoCrackError, band_width, crack_path_fit
from .solver import (
    BoundaryCondition,
    LoadProgram,
    SimulationResult,
    Simulation,
    SolverConfig,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config",
           "preset_names", "preset_config", "build_problem",
           "write_vtk", "write_force_csv", "cli_main", "main"]


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def _bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes", "on"):
        return True
    if s.lower() in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _strs(s: str) -> list[str]:
    return [x.strip() for x in s.split(";") if x.strip()]


_GEOMETRY = {
    "kind": str, "lx": float, "ly": float, "l0": float, "h": float,
    "span": float, "height": float,
    "refine_half_band": float, "h_coarse": float,
    "cz_plane_angle_deg": float,
    "band_x": float, "band_y": float, "band_angle_deg": float,
    "band_width": float,
}
_MATERIAL = {
    "lambda": float, "mu": float,
    "C11": float, "C12": float, "C16": float, "C22": float, "C26": float,
    "C66": float,
    "gc0": float, "sigma0": float, "lc": float, "a2": float,
    "model": str, "split": str, "grad_threshold": float,
    "bulk_modulus": float,
    # anisotropy overrides allowed per region
    "kind": str, "alpha": float, "phi_deg": float,
    "m": _ints, "kappa": _floats, "sigma0m": _floats, "alpha_m": _floats,
    "theta_prime_deg": _floats, "p_m": _floats,
}
_ANISOTROPY = {
    "kind": str, "alpha": float, "phi_deg": float,
    "m": _ints, "kappa": _floats, "sigma0m": _floats, "alpha_m": _floats,
    "theta_prime_deg": _floats, "p_m": _floats,
}
_CZ = {"k0": float, "t0": float, "lambda_f": float, "beta": float}
_LOAD = {
    "bc": _strs, "n_increments": int, "du": float, "reaction_set": str,
    "stop_force_fraction": float,
}
_SOLVER = {
    "newton_tol_rel": float, "newton_tol_abs": float, "max_newton": int,
    "stagger_tol": float, "max_stagger": int, "single_pass": _bool,
    "halve_on_fail": _bool, "max_halvings": int, "stiffness_floor": float,
}
_OUTPUT = {"vtk_every": int, "out_dir": str}


def _section_schema(name: str):
    if name == "geometry":
        return _GEOMETRY
    if name == "material" or name.startswith("material.region"):
        return _MATERIAL
    if name == "anisotropy":
        return _ANISOTROPY
    if name == "cz":
        return _CZ
    if name == "load":
        return _LOAD
    if name == "solver":
        return _SOLVER
    if name == "output":
        return _OUTPUT
    return None


@dataclass
class RunConfig:
    """Typed view of a parsed configuration; sections are plain dicts."""

    geometry: dict = field(default_factory=dict)
    material: dict = field(default_factory=dict)
    material_regions: dict[int, dict] = field(default_factory=dict)
    anisotropy: dict = field(default_factory=dict)
    cz: Optional[dict] = None
    load: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)


def _parse_raw(text: str) -> tuple[Optional[str], dict[str, dict]]:
    preset = None
    sections: dict[str, dict] = {}
    current: Optional[str] = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if _section_schema(current) is None:
                raise ConfigError(f"line {ln}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if current is None:
            if key == "preset":
                preset = val
                continue
            raise ConfigError(f"line {ln}: key {key!r} outside any section "
                              "(only 'preset' may appear there)")
        schema = _section_schema(current)
        if key not in schema:
            raise ConfigError(f"line {ln}: unknown key '{key}' in section "
                              f"[{current}]")
        try:
            sections[current][key] = schema[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {ln}: bad value for '{key}': {exc}") from exc
    return preset, sections


def _merge(base: dict[str, dict], over: dict[str, dict]) -> dict[str, dict]:
    out = {k: dict(v) for k, v in base.items()}
    for sec, kv in over.items():
        out.setdefault(sec, {}).update(kv)
    return out


def _to_runconfig(sections: dict[str, dict]) -> RunConfig:
    cfg = RunConfig()
    for sec, kv in sections.items():
        if sec == "geometry":
            cfg.geometry = kv
        elif sec == "material":
            cfg.material = kv
        elif sec.startswith("material.region"):
            try:
                idx = int(sec[len("material.region"):])
            except ValueError:
                raise ConfigError(f"bad region section [{sec}]") from None
            cfg.material_regions[idx] = kv
        elif sec == "anisotropy":
            cfg.anisotropy = kv
        elif sec == "cz":
            cfg.cz = kv
        elif sec == "load":
            cfg.load = kv
        elif sec == "solver":
            cfg.solver = kv
        elif sec == "output":
            cfg.output = kv
    _validate(cfg)
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse (and validate) sectioned key=value text into a RunConfig."""
    preset, sections = _parse_raw(text)
    if preset is not None:
        base = _parse_raw(preset_text(preset))[1]
        sections = _merge(base, sections)
    return _to_runconfig(sections)


def serialize_config(cfg: RunConfig) -> str:
    """Write a RunConfig back to config text (parse round-trips)."""
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, list):
            sep = "; " if v and isinstance(v[0], str) else ", "
            return sep.join(str(x) for x in v)
        return repr(v) if isinstance(v, float) else str(v)

    out = []
    def emit(name, kv):
        if not kv:
            return
        out.append(f"[{name}]")
        out.extend(f"{k} = {fmt(v)}" for k, v in kv.items())
        out.append("")

    emit("geometry", cfg.geometry)
    emit("material", cfg.material)
    for idx in sorted(cfg.material_regions):
        emit(f"material.region{idx}", cfg.material_regions[idx])
    emit("anisotropy", cfg.anisotropy)
    if cfg.cz:
        emit("cz", cfg.cz)
    emit("load", cfg.load)
    emit("solver", cfg.solver)
    emit("output", cfg.output)
    return "\n".join(out)


def _validate(cfg: RunConfig) -> None:
    g = cfg.geometry
    kind = g.get("kind")
    if kind not in ("sent", "bending"):
        raise ConfigError("geometry.kind must be 'sent' or 'bending'")
    if "h" not in g:
        raise ConfigError("geometry.h is required")
    need = ("lx", "ly") if kind == "sent" else ("span", "height")
    for k in need:
        if k not in g:
            raise ConfigError(f"geometry.{k} is required for kind={kind}")
    band_keys = [k for k in ("band_x", "band_y", "band_angle_deg", "band_width")
                 if k in g]
    if band_keys and len(band_keys) != 4:
        raise ConfigError("band_x, band_y, band_angle_deg, band_width must "
                          "be given together")

    m = cfg.material
    if not m:
        raise ConfigError("[material] section is required")
    iso = "lambda" in m or "mu" in m
    voigt = any(k in m for k in ("C11", "C12", "C16", "C22", "C26", "C66"))
    if iso == voigt:
        raise ConfigError("material must give either lambda/mu or C11..C66")
    for k in ("gc0", "lc"):
        if k not in m:
            raise ConfigError(f"material.{k} is required")
    model = m.get("model", "cohesive")
    if model not in ("standard", "cohesive"):
        raise ConfigError("material.model must be 'standard' or 'cohesive'")
    if "sigma0" not in m:
        raise ConfigError(f"material.sigma0 is required (model={model})")
    if m.get("split", None) not in (None, "volumetric", "none"):
        raise ConfigError("material.split must be 'volumetric' or 'none'")

    a_kind = cfg.anisotropy.get("kind", "none")
    if a_kind not in ("none", "structural", "arbitrary"):
        raise ConfigError("anisotropy.kind must be none, structural or arbitrary")
    if a_kind == "structural" and "alpha" not in cfg.anisotropy:
        raise ConfigError("structural anisotropy needs alpha")
    if a_kind == "arbitrary":
        for k in ("m", "kappa", "sigma0m"):
            if k not in cfg.anisotropy:
                raise ConfigError(f"arbitrary anisotropy needs '{k}'")

    if cfg.cz is not None and cfg.cz:
        for k in ("k0", "t0", "lambda_f"):
            if k not in cfg.cz:
                raise ConfigError(f"cz.{k} is required")
        if "cz_plane_angle_deg" not in g and kind == "sent":
            raise ConfigError("cz section given but no cz_plane_angle_deg")

    ld = cfg.load
    for k in ("bc", "n_increments", "du"):
        if k not in ld:
            raise ConfigError(f"load.{k} is required")
    for bc in ld["bc"]:
        parts = bc.split(":")
        if len(parts) != 3 or parts[1] not in ("x", "y", "both"):
            raise ConfigError(f"bad boundary condition '{bc}' "
                              "(expected set:component:rate)")
        float(parts[2])


# ---------------------------------------------------------------------------
# Building solver objects from a config
# ---------------------------------------------------------------------------

def _aniso_from(kv: dict, base_gc0: float, base_sigma0: float):
    kind = kv.get("kind", "none")
    if kind == "none":
        return None
    if kind == "structural":
        return StructuralAnisotropy(alpha=kv["alpha"],
                                    phi=math.radians(kv.get("phi_deg", 0.0)))
    ms = kv["m"]
    n = len(ms)
    def col(key, default):
        vals = kv.get(key)
        if vals is None:
            vals = [default] * n
        if len(vals) != n:
            raise ConfigError(f"anisotropy.{key} must have {n} entries")
        return vals
    kappas = col("kappa", base_gc0)
    sig = col("sigma0m", base_sigma0)
    alphas = col("alpha_m", 0.0)
    thetas = col("theta_prime_deg", 0.0)
    ps = col("p_m", 0.0)
    return ArbitraryAnisotropy([
        FrequencyTerm(m=ms[i], kappa=kappas[i], sigma0m=sig[i],
                      alpha_m=alphas[i], theta_prime=math.radians(thetas[i]),
                      p_m=ps[i])
        for i in range(n)])


def _material_from(kv: dict) -> MaterialParams:
    if "lambda" in kv:
        elastic = Isotropic(lam=kv["lambda"], mu=kv["mu"])
        default_split = "volumetric"
    else:
        elastic = AnisotropicVoigt(C11=kv["C11"], C12=kv["C12"], C16=kv["C16"],
                                   C22=kv["C22"], C26=kv["C26"], C66=kv["C66"])
        default_split = "none"
    split = SplitKind(kv.get("split", default_split))
    bulk = kv.get("bulk_modulus")
    if split is SplitKind.VOLUMETRIC and isinstance(elastic, AnisotropicVoigt) \
            and bulk is None:
        # largest bulk modulus keeping the driving energy non-negative:
        # 1 / (v^T C^-1 v) with v the in-plane trace direction
        s = np.linalg.inv(elastic.matrix())
        bulk = float(1.0 / (s[0, 0] + s[1, 1] + 2.0 * s[0, 1]))
    aniso_kv = dict(kv.get("_aniso", {}))
    return MaterialParams(
        elasticity=elastic,
        gc0=kv["gc0"], sigma0=kv["sigma0"], lc=kv["lc"],
        a2=kv.get("a2", -0.5),
        model=PhaseFieldKind(kv.get("model", "cohesive")),
        anisotropy=_aniso_from(aniso_kv, kv["gc0"], kv["sigma0"]),
        split=split,
        grad_threshold=kv.get("grad_threshold", 0.2),
        bulk_modulus=bulk)


def build_problem(cfg: RunConfig):
    """Materialise (mesh, materials, load, solver_config, cz_params)."""
    g = cfg.geometry
    if g["kind"] == "sent":
        cz_angle = g.get("cz_plane_angle_deg")
        mesh = generate_sent(
            g["lx"], g["ly"], g.get("l0", 0.0), g["h"],
            refine_half_band=g.get("refine_half_band"),
            h_coarse=g.get("h_coarse"),
            path_angle=math.radians(cz_angle) if cz_angle else 0.0)
        if "band_x" in g:
            band = Band(point=(g["band_x"], g["band_y"]),
                        angle=math.radians(g["band_angle_deg"]),
                        width=g["band_width"])
            nrm = (math.cos(math.radians(g["band_angle_deg"] - 90.0)),
                   math.sin(math.radians(g["band_angle_deg"] - 90.0)))
            left = HalfPlane(point=(g["band_x"], g["band_y"]),
                             normal=(-nrm[0], -nrm[1]))
            mesh = assign_regions(mesh, [(band, 2), (left, 0), (Everywhere(), 1)])
        if cz_angle is not None:
            yc = 0.5 * g["ly"]
            l0 = g.get("l0", 0.0)
            tip = np.array([l0, yc])
            end = np.array([g["lx"],
                            yc + (g["lx"] - l0) * math.tan(math.radians(cz_angle))])
            mesh = insert_interface(mesh, tip, end)
    else:
        mesh = generate_three_point_bending(g["span"], g["height"], g["h"])

    n_regions = int(mesh.region_id.max()) + 1
    materials = []
    for r in range(n_regions):
        kv = dict(cfg.material)
        kv["_aniso"] = dict(cfg.anisotropy)
        over = cfg.material_regions.get(r, {})
        for k, v in over.items():
            if k in _ANISOTROPY:
                kv["_aniso"][k] = v
            else:
                kv[k] = v
        materials.append(_material_from(kv))

    conds = []
    for bc in cfg.load["bc"]:
        name, comp, rate = bc.split(":")
        conds.append(BoundaryCondition(set_name=name, component=comp,
                                       rate=float(rate)))
    load = LoadProgram(
        conditions=tuple(conds),
        n_increments=cfg.load["n_increments"],
        du=cfg.load["du"],
        reaction_set=cfg.load.get("reaction_set", "top"),
        stop_force_fraction=cfg.load.get("stop_force_fraction"))

    defaults = {f.name: getattr(SolverConfig(), f.name)
                for f in dc_fields(SolverConfig)}
    defaults.update(cfg.solver)
    solver_cfg = SolverConfig(**defaults)

    cz = None
    if cfg.cz:
        cz = CzParams(k0=cfg.cz["k0"], t0=cfg.cz["t0"],
                      lambda_f=cfg.cz["lambda_f"],
                      beta=cfg.cz.get("beta", 1.0))
    return mesh, materials, load, solver_cfg, cz


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_TABLE_MATERIAL = """\
lambda = 132.6
mu = 163.4
gc0 = 0.04
sigma0 = 5.0
grad_threshold = 0.2
"""

_SENT_A_GEO = """\
[geometry]
kind = sent
lx = 4.0
ly = 4.0
l0 = 2.0
"""

_SENT_B_GEO = """\
[geometry]
kind = sent
lx = 0.5
ly = 0.5
l0 = 0.25
"""

_SENT_LOAD_A = """\
[load]
bc = bottom:both:0; top:x:0; top:y:1
n_increments = 90
du = 4.0e-4
reaction_set = top
stop_force_fraction = 0.05
"""

_SENT_LOAD_B = """\
[load]
bc = bottom:both:0; top:x:0; top:y:1
n_increments = 110
du = 4.5e-5
reaction_set = top
stop_force_fraction = 0.05
"""


def _sent_preset(geo: str, load: str, model: str, lc: float, aniso: str) -> str:
    h = lc / 4.0
    refine = ""
    if "lx = 4.0" in geo and lc <= 0.05:
        refine = "refine_half_band = 0.32\nh_coarse = 0.1\n"
    txt = geo + f"h = {h}\n" + refine
    txt += "\n[material]\n" + _TABLE_MATERIAL
    txt += f"model = {model}\nlc = {lc}\n"
    if aniso == "structural":
        txt += "\n[anisotropy]\nkind = structural\nalpha = 12.0\nphi_deg = 40.0\n"
    elif aniso == "arbitrary":
        txt += ("\n[anisotropy]\nkind = arbitrary\nm = 1\nkappa = 0.04\n"
                "sigma0m = 5.0\nalpha_m = 3.0\ntheta_prime_deg = -40.0\n"
                "p_m = 0.1\n")
    txt += "\n" + load
    return txt


def _cz_preset(beta: float) -> str:
    # elastic bulk (threshold far out of reach), cohesive plane at the angle
    # the phase-field runs select; interface properties are the directional
    # values of the anisotropic set at that angle
    angle = 20.0
    gc_eff = 0.04 * (1.0 + 12.0 * math.sin(math.radians(angle - 40.0)) ** 2)
    t0 = 5.0
    lam_f = 2.0 * gc_eff / t0
    return f"""\
[geometry]
kind = sent
lx = 0.5
ly = 0.5
l0 = 0.25
h = 0.00625
cz_plane_angle_deg = {angle}

[material]
lambda = 132.6
mu = 163.4
gc0 = 125.0
sigma0 = 1000.0
lc = 0.025
model = cohesive

[cz]
k0 = 5.0e12
t0 = {t0}
lambda_f = {lam_f:.10g}
beta = {beta}

[load]
bc = bottom:both:0; top:x:0; top:y:1
n_increments = 110
du = 4.5e-5
reaction_set = top
stop_force_fraction = 0.05
"""


def _bending_preset(lc: float) -> str:
    return f"""\
[geometry]
kind = bending
span = 20.0
height = 5.0
h = {lc / 4.0}

[material]
C11 = 142350.0
C12 = 188782.0
C16 = 115880.0
C22 = 321110.0
C26 = 192680.0
C66 = 126370.0
gc0 = 0.054
sigma0 = 10.0
lc = {lc}
split = volumetric
grad_threshold = 0.2

[anisotropy]
kind = arbitrary
m = 1
kappa = 0.054
sigma0m = 10.0
alpha_m = 3.5
theta_prime_deg = -30.0
p_m = 0.1

[load]
bc = supports:both:0; load_point:y:-1
n_increments = 100
du = 2.0e-3
reaction_set = load_point
stop_force_fraction = 0.1
"""


def _bicrystal_preset(gc_ip: float, sigma_ip: float) -> str:
    return f"""\
[geometry]
kind = sent
lx = 0.5
ly = 0.5
l0 = 0.125
h = 0.00625
band_x = 0.3
band_y = 0.25
band_angle_deg = 75.0
band_width = 0.05

[material]
lambda = 132.6
mu = 163.4
gc0 = 0.03
sigma0 = 4.0
lc = 0.025
model = cohesive

[anisotropy]
kind = structural
alpha = 12.0
phi_deg = 30.0

[material.region1]
phi_deg = -30.0

[material.region2]
gc0 = {gc_ip}
sigma0 = {sigma_ip}
phi_deg = 75.0

[load]
bc = bottom:both:0; top:x:0; top:y:1
n_increments = 130
du = 4.5e-5
reaction_set = top
stop_force_fraction = 0.05
"""


def _preset_table() -> dict[str, tuple[str, str]]:
    presets: dict[str, tuple[str, str]] = {}
    for geo_name, geo, load in (("A", _SENT_A_GEO, _SENT_LOAD_A),
                                ("B", _SENT_B_GEO, _SENT_LOAD_B)):
        lc_iso = 0.1 if geo_name == "A" else 0.025
        for model in ("spf", "cpf"):
            kind = "standard" if model == "spf" else "cohesive"
            for aniso in ("iso", "structural", "arbitrary"):
                name = f"sent-{geo_name}-{model}-{aniso}"
                lc = 0.05 if (model == "spf" and geo_name == "A"
                              and aniso == "iso") else lc_iso
                desc = (f"single-edge-notched tension, geometry {geo_name}, "
                        f"{'standard' if kind == 'standard' else 'cohesive'} "
                        f"phase field, {aniso} fracture energy")
                presets[name] = (desc, _sent_preset(geo, load, kind, lc, aniso))
    presets["sent-A-isotropic-cpf"] = (
        "alias of sent-A-cpf-iso", presets["sent-A-cpf-iso"][1])
    presets["three-point-bending"] = (
        "three-point bending, anisotropic elasticity + arbitrary fracture "
        "energy, lc = 0.4 mm", _bending_preset(0.4))
    presets["bicrystal-weak"] = (
        "bi-crystal with weak diffuse interphase (half fracture energy and "
        "strength)", _bicrystal_preset(0.015, 2.0))
    presets["bicrystal-strong"] = (
        "bi-crystal with interphase as strong as the bulk",
        _bicrystal_preset(0.03, 4.0))
    for beta in (0.01, 1.0, 100.0):
        tag = f"{beta:g}"
        presets[f"sent-B-cz-beta{tag}"] = (
            f"geometry B, elastic bulk with cohesive-zone plane at 20 deg, "
            f"beta = {tag}", _cz_preset(beta))
    return presets


def preset_names() -> list[str]:
    return sorted(_preset_table())


def preset_text(name: str) -> str:
    table = _preset_table()
    if name not in table:
        raise ConfigError(f"unknown preset '{name}' "
                          f"(available: {', '.join(sorted(table))})")
    return table[name][1]


def preset_config(name: str) -> RunConfig:
    return parse_config(preset_text(name))


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def _g9(x: float) -> str:
    return f"{x:.9g}"


def write_vtk(mesh: Mesh, state, path) -> None:
    """Legacy ASCII VTK UNSTRUCTURED_GRID with displacement, damage, region."""
    u = np.asarray(state.u).reshape(-1, 2)
    d = np.clip(np.asarray(state.d), 0.0, 1.0)
    lines = ["# vtk DataFile Version 2.0", "anisofrac output", "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_nodes} double"]
    lines += [f"{_g9(x)} {_g9(y)} 0" for x, y in mesh.nodes]
    lines.append(f"CELLS {mesh.n_elements} {5 * mesh.n_elements}")
    lines += ["4 " + " ".join(str(int(n)) for n in q) for q in mesh.quads]
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines += ["9"] * mesh.n_elements
    lines.append(f"POINT_DATA {mesh.n_nodes}")
    lines.append("VECTORS displacement double")
    lines += [f"{_g9(ux)} {_g9(uy)} 0" for ux, uy in u]
    lines.append("SCALARS damage double 1")
    lines.append("LOOKUP_TABLE default")
    lines += [_g9(v) for v in d]
    lines.append(f"CELL_DATA {mesh.n_elements}")
    lines.append("SCALARS region int 1")
    lines.append("LOOKUP_TABLE default")
    lines += [str(int(r)) for r in mesh.region_id]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_force_csv(result: SimulationResult, path) -> None:
    """Reaction-force history, one row per increment, deterministic format."""
    rows = ["step,u_applied_um,Fx_GPa_um,Fy_GPa_um,stagger_iters,converged"]
    for r in result.records:
        rows.append(f"{r.step},{r.u_applied:.12g},{r.fx:.12g},{r.fy:.12g},"
                    f"{r.stagger_iters},{int(r.converged)}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="ascii")


def _write_summary(mesh: Mesh, sim: Simulation, result: SimulationResult,
                   cfg: RunConfig, path: Path) -> None:
    summary = {
        "increments": len(result.records),
        "all_converged": all(r.converged for r in result.records),
        "peak_force": result.peak_force,
        "wall_time_s": result.wall_time,
    }
    try:
        g = cfg.geometry
        exclude = None
        if g.get("kind") == "sent" and g.get("l0", 0.0) > 0.0:
            lc = cfg.material.get("lc", 0.0)
            exclude = ((g["l0"], 0.5 * g["ly"]), 2.0 * lc)
        path_fit = crack_path_fit(mesh, sim.state.d, exclude=exclude)
        summary["crack_angle_deg"] = path_fit.angle_deg
        summary["crack_rms"] = path_fit.rms
        summary["band_width"] = band_width(mesh, sim.state.d, path_fit,
                                           exclude=exclude)
    except NoCrackError:
        summary["crack_angle_deg"] = None
    path.write_text(json.dumps(summary, indent=2) + "\n", encoding="ascii")


# ---------------------------------------------------------------------------
# Oracle suite (verify subcommand)
# ---------------------------------------------------------------------------

def _oracle_rows() -> list[tuple[str, bool, str]]:
    rows = []

    def check(name, got, want, tol):
        ok = abs(got - want) <= tol * max(abs(want), 1.0)
        rows.append((name, ok, f"got {got:.12g}, want {want:.12g}"))

    check("c0 quadratic topology", verify.c0_numeric("quadratic"), 2.0, 1e-8)
    check("c0 linear topology", verify.c0_numeric("linear"), 8.0 / 3.0, 1e-8)
    check("c0 cohesive topology", verify.c0_numeric("cohesive"), math.pi, 1e-8)

    iso = Isotropic(lam=132.6, mu=163.4)
    for lc in (0.025, 0.05, 0.1, 0.2):
        p = MaterialParams(elasticity=iso, gc0=0.04, sigma0=5.0, lc=lc,
                           model=PhaseFieldKind.COHESIVE)
        check(f"cohesive bar peak, lc = {lc}",
              verify.bar_response(p).peak_stress, 5.0, 1e-10)
    p = MaterialParams(elasticity=iso, gc0=0.04, sigma0=5.0, lc=0.05,
                       model=PhaseFieldKind.STANDARD)
    want = (9.0 / 16.0) * math.sqrt(iso.young * 0.04 / (3.0 * 0.05))
    check("standard bar peak, lc = 0.05", verify.bar_response(p).peak_stress,
          want, 1e-8)

    pc = MaterialParams(elasticity=iso, gc0=0.04, sigma0=5.0, lc=0.05)
    check("ultimate opening w_u", verify.bar_response(pc).w_u, 0.016, 1e-10)

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        grad = rng.normal(size=2) * 10 ** rng.uniform(-2, 2)
        if np.hypot(*grad) < 1e-12:
            continue
        a, b = verify.aniso_energy_check(
            grad, rng.uniform(0, 1), rng.uniform(0, 20),
            rng.uniform(-math.pi, math.pi), 0.04, 0.1)
        worst = max(worst, abs(a - b) / abs(b))
    rows.append(("structural energy identity (1000 samples)", worst < 1e-12,
                 f"worst relative deviation {worst:.3e}"))

    check("lc from strength relation",
          verify.lc_from_strength(iso.young, 0.04, 5.0), 0.0675, 1e-4)
    return rows


def _cmd_verify(out_dir: Path) -> int:
    rows = _oracle_rows()
    width = max(len(r[0]) for r in rows)
    ok_all = True
    for name, ok, detail in rows:
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    out_dir.mkdir(parents=True, exist_ok=True)
    iso = Isotropic(lam=132.6, mu=163.4)
    for kind, tag in ((PhaseFieldKind.COHESIVE, "cohesive"),
                      (PhaseFieldKind.STANDARD, "standard")):
        p = MaterialParams(elasticity=iso, gc0=0.04, sigma0=5.0, lc=0.05,
                           model=kind)
        br = verify.bar_response(p)
        rows_csv = ["strain,stress,damage"]
        rows_csv += [f"{e:.12g},{s:.12g},{d:.12g}"
                     for e, s, d in zip(br.strain, br.stress, br.damage)]
        (out_dir / f"bar_response_{tag}.csv").write_text(
            "\n".join(rows_csv) + "\n", encoding="ascii")
    print(f"bar response curves written to {out_dir}")
    return 0 if ok_all else 1


def _cmd_run(config_path: Path, out_dir: Optional[Path],
             vtk_every: Optional[int]) -> int:
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        mesh, materials, load, solver_cfg, cz = build_problem(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(out_dir) if out_dir else Path(cfg.output.get("out_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    every = vtk_every if vtk_every is not None else cfg.output.get("vtk_every", 0)

    sim = Simulation(mesh, materials, load, solver_cfg, cz)

    def on_increment(s: Simulation, rec) -> None:
        if every and (rec.step % every == 0 or rec.step == load.n_increments):
            write_vtk(s.mesh, s.state, out / f"field_{rec.step:05d}.vtk")

    result = sim.run(on_increment=on_increment)
    write_force_csv(result, out / "force.csv")
    _write_summary(mesh, sim, result, cfg, out / "summary.json")
    ok = all(r.converged for r in result.records) and result.records
    print(f"{len(result.records)} increments, peak |Fy| = "
          f"{result.peak_force:.6g}, results in {out}")
    return 0 if ok else 1


def cli_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="anisofrac",
        description="anisotropic cohesive phase-field fracture benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a config file")
    p_run.add_argument("--config", required=True, type=Path)
    p_run.add_argument("--out", type=Path, default=None)
    p_run.add_argument("--vtk-every", type=int, default=None)

    p_verify = sub.add_parser("verify",
                              help="run the closed-form oracle suite")
    p_verify.add_argument("--out", type=Path, default=Path("."))

    sub.add_parser("presets", help="list built-in benchmark configurations")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0

    if args.command == "run":
        return _cmd_run(args.config, args.out, args.vtk_every)
    if args.command == "verify":
        return _cmd_verify(args.out)
    if args.command == "presets":
        for name in preset_names():
            print(f"{name:<28} {_preset_table()[name][0]}")
        return 0
    return 2


def main() -> None:
    sys.exit(cli_main())
