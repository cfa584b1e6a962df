"""Selective addressing by AC Stark shifts, and scenario assembly.

Non-target atoms are pushed off resonance by a tightly focused beam near the
6P3/2 -> upper-level transition, which moves only the excited state. The
detuning convention is delta = omega_transition - omega_laser, so a
red-detuned beam (delta > 0) lowers the atomic resonance by
Omega^2 / (4 delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from nanofiber_cqed.constants import (
    ADDRESSING_POLARIZABILITY_AU,
    ADDRESSING_WAIST_UM,
    ADDRESSING_WAVELENGTH_NM,
    AU_POLARIZABILITY,
    C_LIGHT,
    CS_GAMMA,
    EPS0,
    HBAR,
    RAD_PER_S,
    TARGET_DISTANCE_NM,
)
from nanofiber_cqed.errors import PhysicsError
from nanofiber_cqed.fiber import AtomPosition, FiberSpec, coupling_at
from nanofiber_cqed.gates import NodeLayout, ResidualCoupling, alternating_assignment
from nanofiber_cqed.physics import AtomSpec, CavitySpec


def stark_shift(rabi: float, detuning: float) -> float:
    """Light shift Omega^2 / (4 delta) of a two-level transition, same units as the inputs."""
    if detuning == 0:
        raise PhysicsError("Stark shift undefined on resonance")
    return rabi**2 / (4 * detuning)


def shifted_transition(omega0: float, rabi: float, detuning: float) -> float:
    """Transition frequency after the light shift, omega0 - Omega^2/(4 delta)."""
    return omega0 - stark_shift(rabi, detuning)


def effective_polarizability(scalar_ground: float, scalar_excited: float, tensor_excited: float) -> float:
    """alpha = alpha_S(e) - (2/3) alpha_T(e) - alpha_S(g), all in atomic units."""
    return scalar_excited - 2 * tensor_excited / 3 - scalar_ground


def power_for_shift(
    shift: float,
    waist_um: float = ADDRESSING_WAIST_UM,
    polarizability_au: float = ADDRESSING_POLARIZABILITY_AU,
) -> float:
    """Beam power in mW for a Stark shift ``shift`` (2 pi MHz) at the focus.

    P = 2 pi hbar c eps0 w0^2 Delta / alpha.
    """
    if waist_um <= 0 or polarizability_au <= 0:
        raise PhysicsError("need a positive waist and positive polarizability")
    if shift < 0:
        raise PhysicsError("Stark shift magnitude must be non-negative")
    alpha = polarizability_au * AU_POLARIZABILITY
    w0 = waist_um * 1e-6
    watts = 2 * math.pi * HBAR * C_LIGHT * EPS0 * w0**2 * shift * RAD_PER_S / alpha
    return watts * 1e3


def shift_for_power(
    power_mw: float,
    waist_um: float = ADDRESSING_WAIST_UM,
    polarizability_au: float = ADDRESSING_POLARIZABILITY_AU,
) -> float:
    """Inverse of ``power_for_shift``; returns the shift magnitude in 2 pi MHz."""
    if power_mw < 0:
        raise PhysicsError("beam power must be non-negative")
    return power_mw / power_for_shift(1.0, waist_um, polarizability_au)


@dataclass(frozen=True)
class AddressingBeam:
    """Addressing beam; give either ``power_mw`` or ``shift`` and the other follows."""

    wavelength_nm: float = ADDRESSING_WAVELENGTH_NM
    waist_um: float = ADDRESSING_WAIST_UM
    polarizability_au: float = ADDRESSING_POLARIZABILITY_AU
    power_mw: float | None = None
    shift: float | None = None

    def __post_init__(self):
        if (self.power_mw is None) == (self.shift is None):
            raise PhysicsError("specify exactly one of power_mw and shift")
        if self.waist_um <= 0 or self.polarizability_au == 0:
            raise PhysicsError("need a positive waist and non-zero polarizability")

    @property
    def resolved_power_mw(self) -> float:
        if self.power_mw is not None:
            return self.power_mw
        return power_for_shift(self.shift, self.waist_um, self.polarizability_au)

    @property
    def resolved_shift(self) -> float:
        if self.shift is not None:
            return self.shift
        return shift_for_power(self.power_mw, self.waist_um, self.polarizability_au)


@dataclass(frozen=True)
class Site:
    """One atom: either an explicit coupling ``g`` or a radial position on the fiber."""

    delta: float = 0.0
    r_nm: float | None = None
    g: float | None = None
    cavity: int = 0
    phi: float = 0.0

    def __post_init__(self):
        if (self.r_nm is None) == (self.g is None):
            raise PhysicsError("site needs exactly one of r_nm and g")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to build a gate layout for one parameter point.

    Qubit 0 is the control and qubit 1 the target.
    """

    kind: str
    cavity: CavitySpec
    sites: tuple[Site, ...]
    fiber: FiberSpec | None = None
    polarization: str = "quasi_linear"
    polarization_angle: float = 0.0
    gamma: float = CS_GAMMA
    residual: ResidualCoupling | None = None
    probe_detuning: float = 0.0
    flavor: str = "post_selected"
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("local", "remote"):
            raise PhysicsError("gate kind must be 'local' or 'remote'")
        if len(self.sites) < 2:
            raise PhysicsError("a two-qubit gate needs at least two atoms")

    def coupling(self, site: Site) -> float:
        if site.g is not None:
            return site.g
        if self.fiber is None:
            raise PhysicsError("site given by position but no fiber configured")
        if site.r_nm <= self.fiber.radius_nm:
            raise PhysicsError(
                f"atom at r = {site.r_nm} nm is not outside the fiber (radius {self.fiber.radius_nm} nm)"
            )
        pos = AtomPosition(site.r_nm, site.phi, self.polarization, self.polarization_angle)
        return coupling_at(self.fiber, pos)

    def couplings(self) -> list[float]:
        return [self.coupling(s) for s in self.sites]

    def layout(self) -> NodeLayout:
        atoms = tuple(AtomSpec(g, s.delta, self.gamma) for g, s in zip(self.couplings(), self.sites))
        cavity_of = tuple(s.cavity for s in self.sites)
        if self.kind == "local":
            if any(c != 0 for c in cavity_of):
                raise PhysicsError("local gate scenario places every atom in cavity 0")
            cavities = (self.cavity,)
        else:
            cavities = (self.cavity, self.cavity)
        layout = NodeLayout(cavities, atoms, cavity_of, 0, 1, self.residual)
        if self.kind == "remote" and layout.is_local:
            raise PhysicsError("remote gate needs control and target in different cavities")
        return layout


def build_scenario(
    kind: str,
    n_atoms: int,
    cavity: CavitySpec,
    *,
    fiber: FiberSpec | None = None,
    target_r_nm: float | None = TARGET_DISTANCE_NM,
    target_g: float | None = None,
    target_delta: float = 0.0,
    nontarget_r_nm: float | None = None,
    nontarget_g: float | None = None,
    nontarget_delta: float = 0.0,
    assignment: tuple[int, ...] | None = None,
    **options,
) -> Scenario:
    """Two target atoms plus ``n_atoms - 2`` identical non-targets.

    Targets sit at ``target_r_nm`` (or couple with ``target_g``) on resonance;
    non-targets sit at ``nontarget_r_nm`` (or ``nontarget_g``) with Stark
    detuning ``nontarget_delta``. Remote gates alternate atoms between the
    two cavities starting with cavity 0, unless ``assignment`` is given.
    """
    if n_atoms < 2:
        raise PhysicsError("need at least two atoms")
    if target_g is not None:
        target_r_nm = None
    if nontarget_g is None and nontarget_r_nm is None:
        nontarget_r_nm, nontarget_g = target_r_nm, target_g
    elif nontarget_g is not None:
        nontarget_r_nm = None
    if assignment is None:
        assignment = alternating_assignment(n_atoms) if kind == "remote" else (0,) * n_atoms
    if len(assignment) != n_atoms:
        raise PhysicsError("cavity assignment must list every atom")
    sites = []
    for n in range(n_atoms):
        if n < 2:
            sites.append(Site(target_delta, target_r_nm, target_g, assignment[n]))
        else:
            sites.append(Site(nontarget_delta, nontarget_r_nm, nontarget_g, assignment[n]))
    return Scenario(kind, cavity, tuple(sites), fiber, **options)
