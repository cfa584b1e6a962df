"""Numerical optimisation of the two-qubit local gate over the coupling strength."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from nanofiber_cqed.constants import CS_GAMMA, KAPPA_M, KAPPA_T
from nanofiber_cqed.errors import PhysicsError, SolverError
from nanofiber_cqed.fidelity import (
    entanglement_fidelity,
    gate_fidelity,
    locate_fidelity_maximum,
    maximize_on_interval,
    optimum_cooperativity,
    superposition_fidelity,
)
from nanofiber_cqed.gates import ResidualCoupling, ideal_unitary, local_channel, local_layout
from nanofiber_cqed.physics import AtomSpec, CavitySpec

_METRICS = ("F_avg", "F_e", "F_superposition")


def two_qubit_fidelity(
    cavity: CavitySpec,
    g: float,
    gamma: float = CS_GAMMA,
    residual: ResidualCoupling | None = None,
    metric: str = "F_avg",
    flavor: str = "post_selected",
) -> float:
    """Fidelity of the local CZ for two resonant atoms with equal coupling ``g``."""
    layout = local_layout(cavity, [AtomSpec(g, 0.0, gamma)] * 2, residual=residual)
    chan = local_channel(layout, flavor=flavor)
    u = ideal_unitary(layout)
    if metric == "F_avg":
        return gate_fidelity(chan, u)
    if metric == "F_e":
        return entanglement_fidelity(chan, u)
    if metric == "F_superposition":
        return superposition_fidelity(chan, u)
    raise ValueError(f"metric must be one of {_METRICS}")


@dataclass(frozen=True)
class NumericOptimum:
    g: float
    fidelity: float
    g_analytic: float | None  # None when the analytic branch does not apply

    @property
    def relative_offset(self) -> float | None:
        if self.g_analytic is None or not math.isfinite(self.g_analytic):
            return None
        return self.g / self.g_analytic - 1


def numeric_optimum(
    cavity: CavitySpec,
    gamma: float = CS_GAMMA,
    residual: ResidualCoupling | None = None,
    metric: str = "F_avg",
) -> NumericOptimum:
    """Coupling that maximises the gate fidelity at fixed cavity rates.

    Searches [g*/4, 4 g*] around the analytic optimum; if kappa_r/kappa <= 1/2
    there is none, and a wide scan around sqrt(gamma kappa) is used instead.
    """

    def fid(g):
        return two_qubit_fidelity(cavity, g, gamma, residual, metric)

    try:
        _, g_star = optimum_cooperativity(cavity.kappa_r, cavity.kappa, gamma)
    except PhysicsError:
        g_star = None
    if g_star is not None and math.isfinite(g_star):
        g, f = locate_fidelity_maximum(fid, g_star)
    else:
        scale = math.sqrt(gamma * cavity.kappa)
        g, f = maximize_on_interval(fid, 1e-2 * scale, 1e2 * scale, n_grid=96)
    return NumericOptimum(g, f, g_star)


@dataclass(frozen=True)
class SplittingCeiling:
    infidelity: float
    loss_ratio: float
    g: float

    @property
    def fidelity(self) -> float:
        return 1 - self.infidelity


def splitting_ceiling(
    residual: ResidualCoupling,
    gamma: float = CS_GAMMA,
    kappa_t: float = KAPPA_T,
    kappa_m: float = KAPPA_M,
    metric: str = "F_superposition",
) -> SplittingCeiling:
    """Best fidelity reachable at the analytic optimum coupling once |0> couples weakly.

    Along the curve g = g*(kappa_r/kappa) the ideal infidelity falls with the
    loss ratio while the residual coupling grows with g*, so the fidelity peaks
    at a finite loss ratio. The optimisation variable is log(1 - kappa_r/kappa).
    """
    loss = kappa_t + kappa_m
    if loss <= 0:
        raise PhysicsError("need a non-zero intrinsic cavity loss")

    def infid(log_one_minus_x):
        x = 1 - math.exp(log_one_minus_x)
        cav = CavitySpec(loss * x / (1 - x), kappa_t, kappa_m)
        _, g_star = optimum_cooperativity(cav.kappa_r, cav.kappa, gamma)
        return 1 - two_qubit_fidelity(cav, g_star, gamma, residual, metric)

    res = minimize_scalar(infid, bounds=(math.log(1e-5), math.log(0.3)), method="bounded", options={"xatol": 1e-8})
    if not res.success:
        raise SolverError(f"splitting ceiling search failed: {res.message}")
    x = 1 - math.exp(res.x)
    cav = CavitySpec(loss * x / (1 - x), kappa_t, kappa_m)
    _, g_star = optimum_cooperativity(cav.kappa_r, cav.kappa, gamma)
    return SplittingCeiling(float(res.fun), x, g_star)
