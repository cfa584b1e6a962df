"""Scenario files: TOML with unit-suffixed keys, validated strictly.

A scenario file has the sections [cavity], [fiber], [atoms], [addressing],
[gate] and [sweep]; unknown keys anywhere are errors. See
``scenarios/`` in the repository for annotated files.
"""

from __future__ import annotations

import copy
import math
import re
import sys
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from nanofiber_cqed import constants as K
from nanofiber_cqed.addressing import AddressingBeam, Scenario, Site
from nanofiber_cqed.errors import ScenarioError
from nanofiber_cqed.fiber import FiberSpec
from nanofiber_cqed.gates import ResidualCoupling, alternating_assignment
from nanofiber_cqed.physics import CavitySpec


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CavitySection(_Strict):
    kappa_r_2pi_mhz: float = Field(gt=0)
    kappa_t_2pi_mhz: float = Field(K.KAPPA_T, ge=0)
    kappa_m_2pi_mhz: float = Field(K.KAPPA_M, ge=0)


class FiberSection(_Strict):
    radius_nm: float = Field(K.FIBER_RADIUS_NM, gt=0)
    n_core: float = K.FIBER_N_CORE
    n_clad: float = K.FIBER_N_CLAD
    wavenumber_per_um: float = Field(K.CS_D2_WAVENUMBER_PER_UM, gt=0)
    cavity_length_m: float = Field(K.CAVITY_LENGTH_M, gt=0)
    polarization: Literal["quasi_linear", "circular"] = "quasi_linear"
    polarization_angle_rad: float = 0.0


class SiteSection(_Strict):
    g_2pi_mhz: float | None = Field(None, ge=0)
    r_nm: float | None = Field(None, gt=0)
    delta_2pi_mhz: float = 0.0
    cavity: int | None = Field(None, ge=0, le=1)
    phi_rad: float = 0.0

    @model_validator(mode="after")
    def _one_coupling(self):
        if (self.g_2pi_mhz is None) == (self.r_nm is None):
            raise ValueError("give exactly one of g_2pi_mhz and r_nm")
        return self


class AtomsSection(_Strict):
    count: int | None = Field(None, ge=2, le=10)
    gamma_2pi_mhz: float = Field(K.CS_GAMMA, gt=0)
    target_g_2pi_mhz: float | None = Field(None, ge=0)
    target_r_nm: float | None = Field(None, gt=0)
    target_delta_2pi_mhz: float = 0.0
    nontarget_g_2pi_mhz: float | None = Field(None, ge=0)
    nontarget_r_nm: float | None = Field(None, gt=0)
    nontarget_delta_2pi_mhz: float = 0.0
    cavity_assignment: list[int] | None = None
    site: list[SiteSection] | None = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.site is not None:
            if self.count is not None and self.count != len(self.site):
                raise ValueError("count disagrees with the number of [[atoms.site]] entries")
            if len(self.site) < 2 or len(self.site) > 10:
                raise ValueError("need between 2 and 10 sites")
        else:
            if self.count is None:
                raise ValueError("give count or a list of [[atoms.site]]")
            if self.target_g_2pi_mhz is not None and self.target_r_nm is not None:
                raise ValueError("give at most one of target_g_2pi_mhz and target_r_nm")
            if self.nontarget_g_2pi_mhz is not None and self.nontarget_r_nm is not None:
                raise ValueError("give at most one of nontarget_g_2pi_mhz and nontarget_r_nm")
        if self.cavity_assignment is not None:
            if len(self.cavity_assignment) != self.n_atoms:
                raise ValueError("cavity_assignment must list every atom")
            if any(c not in (0, 1) for c in self.cavity_assignment):
                raise ValueError("cavity_assignment entries must be 0 or 1")
        return self

    @property
    def n_atoms(self) -> int:
        return len(self.site) if self.site is not None else self.count


class AddressingSection(_Strict):
    wavelength_nm: float = Field(K.ADDRESSING_WAVELENGTH_NM, gt=0)
    waist_um: float = Field(K.ADDRESSING_WAIST_UM, gt=0)
    polarizability_au: float = Field(K.ADDRESSING_POLARIZABILITY_AU, gt=0)


class GateSection(_Strict):
    kind: Literal["local", "remote", "both"] = "local"
    flavor: Literal["post_selected", "total"] = "post_selected"
    probe_detuning_2pi_mhz: float = 0.0
    residual_coupling: bool = False
    qubit_splitting_2pi_mhz: float = Field(K.CS_QUBIT_SPLITTING, gt=0)
    excited_offset_2pi_mhz: float = K.CS_EXCITED_OFFSET
    residual_dipole_ratio_sq: float = Field(K.CS_RESIDUAL_DIPOLE_RATIO_SQ, ge=0)
    pauli_rates: bool = True


class AxisSection(_Strict):
    field: str
    values: list[float] | None = None
    start: float | None = None
    stop: float | None = None
    num: int | None = Field(None, ge=1)
    scale: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _grid(self):
        if self.values is None:
            if None in (self.start, self.stop, self.num):
                raise ValueError("axis needs values or start/stop/num")
            if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
                raise ValueError("log axis needs positive start and stop")
        elif any(x is not None for x in (self.start, self.stop, self.num)):
            raise ValueError("give either values or start/stop/num, not both")
        return self

    def grid(self) -> list[float]:
        if self.values is not None:
            return [float(v) for v in self.values]
        if self.scale == "log":
            return [float(v) for v in np.geomspace(self.start, self.stop, self.num)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.num)]


class SweepSection(_Strict):
    axis: list[AxisSection] = Field(min_length=1, max_length=2)


class ScenarioFile(_Strict):
    cavity: CavitySection
    fiber: FiberSection | None = None
    atoms: AtomsSection
    addressing: AddressingSection = AddressingSection()
    gate: GateSection = GateSection()
    sweep: SweepSection | None = None

    @model_validator(mode="after")
    def _fiber_needed(self):
        a = self.atoms
        uses_position = a.target_r_nm is not None or a.nontarget_r_nm is not None
        if a.site is not None:
            uses_position = any(s.r_nm is not None for s in a.site)
        elif a.target_g_2pi_mhz is None and a.target_r_nm is None:
            # targets default to the standard fiber distance
            uses_position = True
        if uses_position and self.fiber is None:
            raise ValueError("atom positions given in nm need a [fiber] section")
        return self

    @property
    def kinds(self) -> tuple[str, ...]:
        return ("local", "remote") if self.gate.kind == "both" else (self.gate.kind,)


def _key_line(text: str | None, loc) -> int | None:
    # best effort: first line assigning the innermost string key of the location
    keys = [p for p in loc if isinstance(p, str)]
    if not text or not keys:
        return None
    pat = re.compile(rf"^\s*{re.escape(keys[-1])}\s*=")
    for n, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return n
    return None


def _format_validation(err: ValidationError, source: str, text: str | None = None) -> str:
    lines = [f"{source}: invalid scenario"]
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"])
        where = _key_line(text, e["loc"])
        at = f" (line {where})" if where else ""
        lines.append(f"  {loc or '<root>'}{at}: {e['msg']}")
    return "\n".join(lines)


def parse_scenario_text(text: str, source: str = "<string>") -> ScenarioFile:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # message carries "(at line L, column C)"
        raise ScenarioError(f"{source}: TOML parse error: {exc}") from exc
    return scenario_from_dict(raw, source, text)


def scenario_from_dict(raw: dict, source: str = "<dict>", text: str | None = None) -> ScenarioFile:
    try:
        return ScenarioFile.model_validate(raw)
    except ValidationError as exc:
        raise ScenarioError(_format_validation(exc, source, text)) from exc


def load_scenario(path: str | Path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario_text(text, str(path))


# ---------------------------------------------------------------- overrides


def _lookup(data: dict, path: str):
    node = data
    parts = path.split(".")
    for p in parts[:-1]:
        if isinstance(node, list):
            node = node[int(p)]
        else:
            node = node[p]
    return node, parts[-1]


def with_overrides(cfg: ScenarioFile, overrides: dict[str, float]) -> ScenarioFile:
    """Copy of ``cfg`` with dotted-path numeric fields replaced (e.g. ``atoms.nontarget_r_nm``)."""
    data = cfg.model_dump(exclude_none=True)
    for path, value in overrides.items():
        try:
            parent, key = _lookup(data, path)
            if isinstance(parent, list):
                key = int(key)
                current = parent[key]
            else:
                current = parent.get(key)
        except (KeyError, IndexError, ValueError, TypeError) as exc:
            raise ScenarioError(f"sweep field '{path}' does not exist") from exc
        if current is not None and (isinstance(current, bool) or not isinstance(current, (int, float))):
            raise ScenarioError(f"sweep field '{path}' is not numeric")
        if current is None and not _is_numeric_field(path):
            raise ScenarioError(f"sweep field '{path}' is not a numeric scenario field")
        if isinstance(current, int) and not float(value).is_integer():
            raise ScenarioError(f"sweep field '{path}' takes integer values")
        parent[key] = int(value) if isinstance(current, int) else float(value)
    data.pop("sweep", None)
    return scenario_from_dict(data, "<sweep point>")


def _is_numeric_field(path: str) -> bool:
    parts = path.split(".")
    model: Any = ScenarioFile
    for p in parts:
        if p.isdigit():
            continue
        fields = getattr(model, "model_fields", None)
        if fields is None or p not in fields:
            return False
        ann = fields[p].annotation
        inner = _model_in(ann)
        if inner is not None:
            model = inner
            continue
        return _numeric_annotation(ann)
    return False


def _model_in(ann):
    args = getattr(ann, "__args__", ())
    for t in (ann, *args):
        if isinstance(t, type) and issubclass(t, BaseModel):
            return t
        for sub in getattr(t, "__args__", ()):
            if isinstance(sub, type) and issubclass(sub, BaseModel):
                return sub
    return None


def _numeric_annotation(ann) -> bool:
    args = getattr(ann, "__args__", None)
    types = args if args else (ann,)
    return any(t in (int, float) for t in types)


def validate_sweep(cfg: ScenarioFile) -> list[tuple[str, list[float]]]:
    if cfg.sweep is None:
        raise ScenarioError("scenario has no [sweep] section")
    axes = []
    for ax in cfg.sweep.axis:
        if not _is_numeric_field(ax.field):
            raise ScenarioError(f"sweep field '{ax.field}' is not a numeric scenario field")
        axes.append((ax.field, ax.grid()))
    if len({f for f, _ in axes}) != len(axes):
        raise ScenarioError("sweep axes must name distinct fields")
    return axes


# ---------------------------------------------------------------- to physics


def fiber_spec(cfg: ScenarioFile) -> FiberSpec | None:
    f = cfg.fiber
    if f is None:
        return None
    return FiberSpec(f.radius_nm, f.n_core, f.n_clad, f.wavenumber_per_um, f.cavity_length_m)


def cavity_spec(cfg: ScenarioFile) -> CavitySpec:
    c = cfg.cavity
    return CavitySpec(c.kappa_r_2pi_mhz, c.kappa_t_2pi_mhz, c.kappa_m_2pi_mhz)


def addressing_beam(cfg: ScenarioFile, shift: float) -> AddressingBeam:
    a = cfg.addressing
    return AddressingBeam(a.wavelength_nm, a.waist_um, a.polarizability_au, shift=abs(shift))


def residual_coupling(cfg: ScenarioFile) -> ResidualCoupling | None:
    g = cfg.gate
    if not g.residual_coupling:
        return None
    return ResidualCoupling(g.residual_dipole_ratio_sq, g.qubit_splitting_2pi_mhz - g.excited_offset_2pi_mhz)


def _sites(cfg: ScenarioFile, kind: str) -> tuple[Site, ...]:
    a = cfg.atoms
    n = a.n_atoms
    if kind == "local":
        assignment = (0,) * n
    elif a.cavity_assignment is not None:
        assignment = tuple(a.cavity_assignment)
    elif a.site is not None and all(s.cavity is not None for s in a.site):
        assignment = tuple(s.cavity for s in a.site)
    else:
        assignment = alternating_assignment(n)
    if a.site is not None:
        return tuple(
            Site(s.delta_2pi_mhz, s.r_nm, s.g_2pi_mhz, assignment[i], s.phi_rad) for i, s in enumerate(a.site)
        )
    target_g, target_r = a.target_g_2pi_mhz, a.target_r_nm
    if target_g is None and target_r is None:
        target_r = K.TARGET_DISTANCE_NM
    non_g, non_r = a.nontarget_g_2pi_mhz, a.nontarget_r_nm
    if non_g is None and non_r is None:
        non_g, non_r = target_g, target_r
    sites = []
    for i in range(n):
        if i < 2:
            sites.append(Site(a.target_delta_2pi_mhz, target_r, target_g, assignment[i]))
        else:
            sites.append(Site(a.nontarget_delta_2pi_mhz, non_r, non_g, assignment[i]))
    return tuple(sites)


def to_scenario(cfg: ScenarioFile, kind: str) -> Scenario:
    """Physics-level scenario for one gate kind."""
    f = cfg.fiber
    return Scenario(
        kind=kind,
        cavity=cavity_spec(cfg),
        sites=_sites(cfg, kind),
        fiber=fiber_spec(cfg),
        polarization=f.polarization if f else "quasi_linear",
        polarization_angle=f.polarization_angle_rad if f else 0.0,
        gamma=cfg.atoms.gamma_2pi_mhz,
        residual=residual_coupling(cfg),
        probe_detuning=cfg.gate.probe_detuning_2pi_mhz,
        flavor=cfg.gate.flavor,
    )


def echo(cfg: ScenarioFile) -> dict:
    """Plain-dict copy of the validated configuration, for provenance."""
    return copy.deepcopy(cfg.model_dump(exclude_none=True))


def finite_or_none(x: float) -> float | None:
    return None if isinstance(x, float) and math.isnan(x) else x
