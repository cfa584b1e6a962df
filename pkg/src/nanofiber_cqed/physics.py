"""Single-photon amplitudes for a one-sided cavity holding N two-level atoms.

A photon in the long-pulse limit leaves the cavity in one of four orthogonal
modes: reflected (r), transmitted through the end mirror (t), scattered at the
input mirror (m) or scattered by an atom (a). The closed-form amplitudes share
the denominator

    D = i (omega_p - omega_c) - kappa + g(N, omega_p),

where g(N, omega) is the collective coupling of the atoms. Frequencies are
angular and in units of 2*pi*MHz; the probe is given as a detuning from the
cavity so ``omega_c`` is normally 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from nanofiber_cqed.constants import CS_GAMMA
from nanofiber_cqed.errors import PhysicsError


@dataclass(frozen=True)
class CavitySpec:
    """Decay rates of a one-sided cavity.

    kappa_r couples to the input/output mode, kappa_t leaks through the end
    mirror and kappa_m is scattering loss at the mirrors.
    """

    kappa_r: float
    kappa_t: float = 0.0
    kappa_m: float = 0.0
    omega_c: float = 0.0

    def __post_init__(self):
        if min(self.kappa_r, self.kappa_t, self.kappa_m) < 0:
            raise PhysicsError("cavity decay rates must be non-negative")
        if self.kappa_r <= 0:
            raise PhysicsError("kappa_r must be positive")

    @property
    def kappa(self) -> float:
        return self.kappa_r + self.kappa_t + self.kappa_m

    @property
    def loss_ratio(self) -> float:
        """kappa_r / kappa."""
        return self.kappa_r / self.kappa


@dataclass(frozen=True)
class AtomSpec:
    """One atom coupled to a cavity on the |1> <-> |e> transition.

    ``delta_a`` is the signed probe detuning omega_p - omega_a of that
    transition, so Stark shifts add to it directly.
    """

    g: float
    delta_a: float = 0.0
    gamma: float = CS_GAMMA

    def __post_init__(self):
        if self.g < 0:
            raise PhysicsError("coupling strength g must be non-negative")
        if self.gamma <= 0:
            raise PhysicsError("gamma must be positive")


@dataclass(frozen=True)
class AmplitudeSet:
    """Output amplitudes (reflection, transmission, mirror loss, atom loss)."""

    r: complex
    t: complex
    m: complex
    a: complex

    @property
    def norm(self) -> float:
        return abs(self.r) ** 2 + abs(self.t) ** 2 + abs(self.m) ** 2 + abs(self.a) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.t, self.m, self.a], dtype=complex)


def _coupling_terms(atoms: Iterable[AtomSpec], omega: float) -> list[complex]:
    # each atom contributes g^2 / (i (omega - omega_a) - gamma); omega here is
    # measured from the probe frame so omega - omega_a = delta_a + (omega - omega_p)
    return [at.g**2 / complex(-at.gamma, at.delta_a + omega) for at in atoms]


def collective_coupling(atoms: Sequence[AtomSpec], omega: float = 0.0) -> complex:
    """Collective coupling g(N, omega) = sum_n g_n^2 / (i(omega - omega_a,n) - gamma).

    ``omega`` is an offset of the evaluation frequency from the probe frequency
    the atoms' ``delta_a`` refer to; leave it at 0 to evaluate at the probe.
    """
    return complex(sum(_coupling_terms(atoms, omega), 0j))


def atomic_scatter_rate(atoms: Sequence[AtomSpec], omega: float = 0.0) -> float:
    """Loss rate into atomic scattering, kappa_a = -Re g(N, omega) >= 0."""
    return sum(
        at.gamma * at.g**2 / ((at.delta_a + omega) ** 2 + at.gamma**2) for at in atoms
    )


def _from_collective(cavity: CavitySpec, gN, kappa_a, probe_detuning):
    denom = 1j * probe_detuning - cavity.kappa + gN
    if np.any(denom == 0):
        raise PhysicsError("amplitude denominator vanished; need kappa > 0 or gamma > 0")
    scale = 2 * np.sqrt(cavity.kappa_r)
    r = 1 + 2 * cavity.kappa_r / denom
    t = scale * math.sqrt(cavity.kappa_t) / denom
    m = scale * math.sqrt(cavity.kappa_m) / denom
    a = scale * np.sqrt(kappa_a) / denom
    return r, t, m, a


def amplitudes(
    cavity: CavitySpec, atoms: Sequence[AtomSpec], probe_detuning: float = 0.0
) -> AmplitudeSet:
    """Amplitudes (r, t, m, a) for a photon at omega_p = omega_c + probe_detuning.

    ``atoms`` are the atoms that couple in the current configuration; their
    ``delta_a`` are detunings from the same probe.
    """
    gN = collective_coupling(atoms)
    kappa_a = atomic_scatter_rate(atoms)
    r, t, m, a = _from_collective(
        cavity, gN, kappa_a, probe_detuning - cavity.omega_c
    )
    return AmplitudeSet(complex(r), complex(t), complex(m), complex(a))


def amplitude_arrays(
    cavity: CavitySpec, gN: np.ndarray, kappa_a: np.ndarray, probe_detuning: float = 0.0
) -> np.ndarray:
    """Vectorised amplitudes for many configurations.

    Returns an array of shape (4, n) with rows r, t, m, a.
    """
    gN = np.asarray(gN, dtype=complex)
    kappa_a = np.asarray(kappa_a, dtype=float)
    r, t, m, a = _from_collective(
        cavity, gN, kappa_a, probe_detuning - cavity.omega_c
    )
    n = gN.shape
    return np.stack(
        [r, np.broadcast_to(t, n), np.broadcast_to(m, n), a]
    ).astype(complex)


def simplified_reflection(n_atoms: int, g: float, cavity: CavitySpec, gamma: float = CS_GAMMA) -> float:
    """r(N) = 1 - 2 kappa_r / (kappa + N g^2 / gamma) for resonant, equal couplings."""
    return 1 - 2 * cavity.kappa_r / (cavity.kappa + n_atoms * g**2 / gamma)


def residual_reflection_shift(
    loss_ratio: float, gamma: float = CS_GAMMA, splitting: float = math.inf
) -> complex:
    """Additive change of r(0) from weak coupling of |0> at the fidelity optimum.

    Evaluated at the optimum cooperativity, with ``splitting`` the detuning of
    the |0> transition. Vanishes as the splitting goes to infinity.
    """
    if loss_ratio <= 0.5 or loss_ratio > 1:
        raise PhysicsError("loss ratio kappa_r/kappa must lie in (1/2, 1]")
    if math.isinf(splitting):
        return 0j
    if loss_ratio == 1:
        # g* -> infinity: |0> fully couples and r(0) -> +1
        return complex(2.0)
    coop = loss_ratio / (1 - loss_ratio) - 1
    return 2 * loss_ratio * (1 - 1 / (1 + 1j * (2 * gamma / splitting) * coop))
