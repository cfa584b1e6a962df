"""HE11 guided mode of a step-index nanofiber and the resulting atom-cavity coupling.

Lengths: fiber radius and atom positions in nm, wavenumber in 1/um. Field
components follow the standard cylindrical solution with a common, arbitrary
amplitude; only ratios to the field maximum enter the coupling strength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar
from scipy.special import jv, kv

from nanofiber_cqed.constants import (
    BOHR_RADIUS,
    C_LIGHT,
    CAVITY_LENGTH_M,
    CS_D2_PI_FACTOR,
    CS_D2_REDUCED_DIPOLE_AU,
    CS_D2_WAVENUMBER_PER_UM,
    E_CHARGE,
    EPS0,
    FIBER_N_CLAD,
    FIBER_N_CORE,
    FIBER_RADIUS_NM,
    HBAR,
    RAD_PER_S,
)
from nanofiber_cqed.errors import PhysicsError, SolverError

J1_FIRST_ZERO = 3.8317059702075125
POLARIZATIONS = ("quasi_linear", "circular")


def j1_prime(x):
    """J_1'(x) = J_0(x) - J_1(x)/x, finite at x = 0."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0, 1.0, x)
    return np.where(x == 0, 0.5, jv(0, x) - jv(1, x) / safe)


def k1_prime(x):
    """K_1'(x) = -K_0(x) - K_1(x)/x."""
    x = np.asarray(x, dtype=float)
    return -kv(0, x) - kv(1, x) / x


def _j1_over_x(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0, 1.0, x)
    return np.where(x == 0, 0.5, jv(1, x) / safe)


@dataclass(frozen=True)
class FiberSpec:
    radius_nm: float = FIBER_RADIUS_NM
    n_core: float = FIBER_N_CORE
    n_clad: float = FIBER_N_CLAD
    wavenumber_per_um: float = CS_D2_WAVENUMBER_PER_UM
    cavity_length_m: float = CAVITY_LENGTH_M

    def __post_init__(self):
        if self.radius_nm <= 0 or self.wavenumber_per_um <= 0 or self.cavity_length_m <= 0:
            raise PhysicsError("fiber radius, wavenumber and cavity length must be positive")
        if self.n_core <= self.n_clad:
            raise PhysicsError("core index must exceed cladding index for a guided mode")

    @property
    def radius_um(self) -> float:
        return self.radius_nm * 1e-3

    @property
    def v_number(self) -> float:
        return self.radius_um * self.wavenumber_per_um * math.sqrt(self.n_core**2 - self.n_clad**2)


@dataclass(frozen=True)
class AtomPosition:
    """Atom at distance ``r_nm`` from the fiber axis and azimuth ``phi``.

    For the quasi-linear mode ``polarization_angle`` is the axis phi_0 of the
    polarisation; for the circular mode ``handedness`` is +1 or -1.
    """

    r_nm: float
    phi: float = 0.0
    polarization: str = "quasi_linear"
    polarization_angle: float = 0.0
    handedness: int = 1

    def __post_init__(self):
        if self.r_nm < 0:
            raise PhysicsError("radial position must be non-negative")
        if self.polarization not in POLARIZATIONS:
            raise PhysicsError(f"polarization must be one of {POLARIZATIONS}")
        if self.handedness not in (1, -1):
            raise PhysicsError("handedness must be +1 or -1")


@dataclass(frozen=True)
class ModeSolution:
    """HE11 eigenvalues; ``beta`` in 1/um, mode quantities filled by ``solve_mode``."""

    u: float
    w: float
    beta: float
    s: float
    v: float
    residual: float
    peak_intensity: float = math.nan  # max eps |E|^2 over the cross-section
    transverse_integral_um2: float = math.nan  # int eps |E|^2 dA
    mode_volume_um3: float = math.nan

    @property
    def effective_area_um2(self) -> float:
        return self.transverse_integral_um2 / self.peak_intensity


def characteristic(u: float, fiber: FiberSpec) -> float:
    """Residual of the HE/EH characteristic equation for l = 1 at core parameter ``u``."""
    v = fiber.v_number
    w = math.sqrt(v * v - u * u)
    n1, n0 = fiber.n_core**2, fiber.n_clad**2
    jj = float(j1_prime(u)) / (u * jv(1, u))
    kk = float(k1_prime(w)) / (w * kv(1, w))
    lhs = (n1 / u**2 + n0 / w**2) * (1 / u**2 + 1 / w**2)
    return lhs - (n1 * jj + n0 * kk) * (jj + kk)


def _solve_eigenvalue(fiber: FiberSpec, n_scan: int = 4000) -> ModeSolution:
    v = fiber.v_number
    hi = min(v, J1_FIRST_ZERO)
    grid = np.linspace(hi * 1e-4, hi * (1 - 1e-9), n_scan)
    with np.errstate(all="ignore"):
        vals = np.array([characteristic(x, fiber) for x in grid])
    root = None
    for i in range(n_scan - 1):
        if not (np.isfinite(vals[i]) and np.isfinite(vals[i + 1])):
            continue
        if np.sign(vals[i]) != np.sign(vals[i + 1]):
            cand = brentq(characteristic, grid[i], grid[i + 1], args=(fiber,), xtol=1e-15, rtol=1e-15)
            if abs(characteristic(cand, fiber)) < 1e-10:
                root = cand
                break
    if root is None:
        raise SolverError(f"no HE11 root found for v = {v:.6g}")
    u = root
    w = math.sqrt(v * v - u * u)
    a = fiber.radius_um
    k = fiber.wavenumber_per_um
    beta = math.sqrt(fiber.n_core**2 * k**2 - (u / a) ** 2)
    jj = float(j1_prime(u)) / (u * jv(1, u))
    kk = float(k1_prime(w)) / (w * kv(1, w))
    s = float((1 / u**2 + 1 / w**2) / (jj + kk))
    return ModeSolution(float(u), w, beta, s, v, float(abs(characteristic(u, fiber))))


def cylindrical_components(mode: ModeSolution, fiber: FiberSpec, r_nm) -> np.ndarray:
    """(e_r, e_phi, e_z) of the l = +1 mode at radius ``r_nm``, without the e^{i(phi - beta z)} factor.

    Returns an array of shape (3,) + shape(r_nm).
    """
    rho = np.asarray(r_nm, dtype=float) / fiber.radius_nm
    a, u, w, beta, s = fiber.radius_um, mode.u, mode.w, mode.beta, mode.s
    inside = rho < 1
    x = u * rho
    y = w * np.where(inside, 1.0, rho)
    ab = a * beta
    e_in = np.stack(
        [
            -1j * ab / u * (j1_prime(x) - s * _j1_over_x(x)),
            ab / u * (_j1_over_x(x) - s * j1_prime(x)),
            jv(1, x) + 0j,
        ]
    )
    f = jv(1, u) / kv(1, w)
    e_out = np.stack(
        [
            f * 1j * ab / w * (k1_prime(y) - s * kv(1, y) / y),
            -f * ab / w * (kv(1, y) / y - s * k1_prime(y)),
            f * kv(1, y) + 0j,
        ]
    )
    return np.where(inside, e_in, e_out)


def field_at(mode: ModeSolution, fiber: FiberSpec, position: AtomPosition, z: float = 0.0) -> np.ndarray:
    """Cartesian field (E_x, E_y, E_z) at an atom position; ``z`` in um."""
    er, ephi, ez = cylindrical_components(mode, fiber, position.r_nm)
    phi = position.phi
    prop = np.exp(-1j * mode.beta * z)
    if position.polarization == "circular":
        p = position.handedness
        comp = np.array([er, p * ephi, ez]) * np.exp(1j * p * phi)
    else:
        d = phi - position.polarization_angle
        # (E_+ e^{-i phi0} + E_- e^{i phi0}) / sqrt(2)
        comp = math.sqrt(2) * np.array([er * math.cos(d), 1j * ephi * math.sin(d), ez * math.cos(d)])
    comp = comp * prop
    c, sn = math.cos(phi), math.sin(phi)
    return np.array([c * comp[0] - sn * comp[1], sn * comp[0] + c * comp[1], comp[2]])


def intensity(mode: ModeSolution, fiber: FiberSpec, r_nm, phi=0.0, polarization="quasi_linear", polarization_angle=0.0):
    """eps(r) |E|^2 on a grid of radii (and azimuths)."""
    er, ephi, ez = np.abs(cylindrical_components(mode, fiber, r_nm)) ** 2
    if polarization == "circular":
        i = er + ephi + ez
    else:
        d = np.asarray(phi) - polarization_angle
        i = 2 * ((er + ez) * np.cos(d) ** 2 + ephi * np.sin(d) ** 2)
    rho = np.asarray(r_nm) / fiber.radius_nm
    eps = np.where(rho < 1, fiber.n_core**2, fiber.n_clad**2)
    return eps * i


def _peak_intensity(mode: ModeSolution, fiber: FiberSpec, polarization: str) -> float:
    a = fiber.radius_nm
    best = 0.0
    phis = [0.0] if polarization == "circular" else [0.0, math.pi / 2]
    for phi in phis:
        def neg(r):
            return -float(intensity(mode, fiber, r, phi, polarization))

        for lo, hi in ((0.0, a * (1 - 1e-12)), (a, 3 * a)):
            grid = np.linspace(lo, hi, 801)
            vals = intensity(mode, fiber, grid, phi, polarization)
            k = int(np.argmax(vals))
            cand = float(vals[k])
            if 0 < k < len(grid) - 1:
                res = minimize_scalar(neg, bounds=(grid[k - 1], grid[k + 1]), method="bounded", options={"xatol": 1e-9})
                cand = max(cand, -res.fun)
            best = max(best, cand)
    return best


def _outer_cutoff(mode: ModeSolution, tol: float = 1e-12) -> float:
    # radius (in units of a) beyond which the evanescent intensity envelope is below tol
    target = math.sqrt(tol) * kv(1, mode.w)
    hi = 2.0
    while kv(1, mode.w * hi) > target:
        hi *= 2
    return brentq(lambda rho: kv(1, mode.w * rho) - target, 1.0, hi)


def mode_volume(mode: ModeSolution, fiber: FiberSpec, polarization: str = "quasi_linear") -> ModeSolution:
    """Fill in the peak intensity, cross-section integral and mode volume.

    The azimuthal integral is done analytically (the same for both
    polarisations); the radial one with adaptive quadrature split at the
    core boundary and truncated where the evanescent tail drops below 1e-12.
    """
    a = fiber.radius_nm

    def radial(rho):
        er, ephi, ez = np.abs(cylindrical_components(mode, fiber, rho * a)) ** 2
        eps = fiber.n_core**2 if rho < 1 else fiber.n_clad**2
        return eps * float(er + ephi + ez) * rho

    cut = _outer_cutoff(mode)
    inner, err_in = quad(radial, 0.0, 1.0, epsabs=0, epsrel=1e-11, limit=200)
    outer, err_out = quad(radial, 1.0, cut, epsabs=0, epsrel=1e-11, limit=400)
    total = inner + outer
    if (err_in + err_out) > 1e-6 * total:
        raise SolverError("mode integral did not converge")
    integral = 2 * math.pi * fiber.radius_um**2 * total
    peak = _peak_intensity(mode, fiber, polarization)
    length_um = fiber.cavity_length_m * 1e6
    return replace(
        mode,
        peak_intensity=peak,
        transverse_integral_um2=integral,
        mode_volume_um3=integral * length_um / peak,
    )


@lru_cache(maxsize=64)
def solve_mode(fiber: FiberSpec, polarization: str = "quasi_linear") -> ModeSolution:
    """Solve for the HE11 mode and its volume inside a cavity of the fiber's length."""
    if polarization not in POLARIZATIONS:
        raise PhysicsError(f"polarization must be one of {POLARIZATIONS}")
    return mode_volume(_solve_eigenvalue(fiber), fiber, polarization)


def transition_dipole(reduced_au: float = CS_D2_REDUCED_DIPOLE_AU, factor: float = CS_D2_PI_FACTOR) -> float:
    """Transition dipole moment in C m."""
    return abs(reduced_au * factor) * E_CHARGE * BOHR_RADIUS


def peak_coupling(mode: ModeSolution, fiber: FiberSpec, dipole: float | None = None) -> float:
    """Coupling at the field maximum, in units of 2 pi MHz."""
    if dipole is None:
        dipole = transition_dipole()
    omega = C_LIGHT * fiber.wavenumber_per_um * 1e6
    vol = mode.mode_volume_um3 * 1e-18
    return math.sqrt(dipole**2 * omega / (2 * HBAR * EPS0 * vol)) / RAD_PER_S


def coupling_strength(
    mode: ModeSolution, fiber: FiberSpec, position: AtomPosition, dipole: float | None = None
) -> float:
    """g(r) = sqrt(mu^2 omega / (2 hbar eps0 V)) |E(r)| / sqrt(max eps |E|^2), in 2 pi MHz."""
    e = field_at(mode, fiber, position)
    amp = math.sqrt(float(np.sum(np.abs(e) ** 2)) / mode.peak_intensity)
    return peak_coupling(mode, fiber, dipole) * amp


def coupling_profile(fiber: FiberSpec, r_nm, polarization_angle: float = 0.0) -> dict[str, np.ndarray]:
    """g versus radius for circular polarisation and for quasi-linear along and across phi_0."""
    r_nm = np.atleast_1d(np.asarray(r_nm, dtype=float))
    lin = solve_mode(fiber, "quasi_linear")
    circ = solve_mode(fiber, "circular")
    out = {"r_nm": r_nm}
    out["g_circular_2pi_mhz"] = np.array(
        [coupling_strength(circ, fiber, AtomPosition(r, 0.0, "circular")) for r in r_nm]
    )
    out["g_linear_parallel_2pi_mhz"] = np.array(
        [coupling_strength(lin, fiber, AtomPosition(r, polarization_angle, "quasi_linear", polarization_angle)) for r in r_nm]
    )
    out["g_linear_orthogonal_2pi_mhz"] = np.array(
        [
            coupling_strength(lin, fiber, AtomPosition(r, polarization_angle + math.pi / 2, "quasi_linear", polarization_angle))
            for r in r_nm
        ]
    )
    return out


def coupling_at(fiber: FiberSpec, position: AtomPosition) -> float:
    """Solve the mode (cached) and evaluate g at ``position``."""
    mode = solve_mode(fiber, position.polarization)
    return coupling_strength(mode, fiber, position)
