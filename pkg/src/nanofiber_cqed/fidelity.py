"""Gate fidelities, closed-form limits and optimum coupling.

Channels are callables mapping a stack of matrices (..., d, d) to the same
shape, with an optional boolean attribute ``post_selected``. Post-selected
channels are renormalised by the mean success probability before comparison
with the ideal unitary.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from nanofiber_cqed.constants import CS_GAMMA, SPLITTING_FLOOR_COEFF
from nanofiber_cqed.errors import PhysicsError, SolverError

Channel = Callable[[np.ndarray], np.ndarray]


def _is_post_selected(channel, post_selected):
    if post_selected is None:
        return bool(getattr(channel, "post_selected", False))
    return post_selected


def choi_matrix(channel: Channel, dim: int) -> np.ndarray:
    """chi = sum_ij |i><j| (x) eps(|i><j|) / d, built explicitly.

    Index order is (i, a), (j, b) with i, j the reference system. Meant for
    small registers; ``entanglement_fidelity`` avoids materialising it.
    """
    basis = np.zeros((dim, dim, dim, dim), complex)
    for i in range(dim):
        basis[i, np.arange(dim), i, np.arange(dim)] = 1.0
    out = channel(basis.reshape(dim * dim, dim, dim)).reshape(dim, dim, dim, dim)
    # out[i, j] = eps(|i><j|); reorder to chi[(i,a),(j,b)]
    return out.transpose(0, 2, 1, 3).reshape(dim * dim, dim * dim) / dim


def entanglement_fidelity(channel: Channel, unitary: np.ndarray, post_selected: bool | None = None) -> float:
    """F_e = <Phi| (I (x) U^dag eps U) |Phi> with |Phi> maximally entangled.

    Computed as (1/d^2) sum_ij <i| U^dag eps(|i><j|) U |j>, one row of input
    operators at a time. Post-selected channels are divided by Tr(chi).
    """
    u = np.asarray(unitary, dtype=complex)
    d = u.shape[0]
    ps = _is_post_selected(channel, post_selected)
    ud = u.conj().T
    num = 0j
    trace = 0.0
    cols = np.arange(d)
    for i in range(d):
        ops = np.zeros((d, d, d), complex)
        ops[cols, i, cols] = 1.0
        out = channel(ops)
        rotated = ud @ out @ u
        num += rotated[cols, i, cols].sum()
        trace += np.trace(out[i]).real
    fe = num / d**2
    if abs(fe.imag) > 1e-8:
        raise PhysicsError(f"entanglement fidelity has imaginary part {fe.imag:.3e}")
    fe = fe.real
    if ps:
        if trace <= 0:
            raise PhysicsError("channel has zero success probability")
        fe /= trace / d
    return float(fe)


def average_fidelity(entanglement_fid: float, dim: int) -> float:
    """Average over Haar-random pure inputs, (d F_e + 1) / (d + 1)."""
    return (dim * entanglement_fid + 1) / (dim + 1)


def gate_fidelity(channel: Channel, unitary: np.ndarray, post_selected: bool | None = None) -> float:
    """Average gate fidelity via the entanglement fidelity."""
    d = np.asarray(unitary).shape[0]
    return average_fidelity(entanglement_fidelity(channel, unitary, post_selected), d)


def superposition_fidelity(channel: Channel, unitary: np.ndarray, post_selected: bool | None = None) -> float:
    """Fidelity for the single input |+>^N, normalised by its own success probability."""
    u = np.asarray(unitary, dtype=complex)
    d = u.shape[0]
    psi = np.full(d, 1 / math.sqrt(d), complex)
    out = channel(np.outer(psi, psi.conj()))
    if _is_post_selected(channel, post_selected):
        out = out / np.trace(out).real
    target = u @ psi
    return float((target.conj() @ out @ target).real)


def haar_states(dim: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure states, shape (samples, dim)."""
    z = rng.standard_normal((samples, dim)) + 1j * rng.standard_normal((samples, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_average_fidelity(
    channel: Channel,
    unitary: np.ndarray,
    samples: int,
    rng: np.random.Generator | int | None = None,
    post_selected: bool | None = None,
    batch: int = 4096,
) -> tuple[float, float]:
    """Monte-Carlo average fidelity over Haar-random inputs, returns (mean, standard error).

    Post-selected channels weight each input by its success probability, the
    same normalisation used by ``entanglement_fidelity``.
    """
    rng = np.random.default_rng(rng)
    u = np.asarray(unitary, dtype=complex)
    d = u.shape[0]
    ps = _is_post_selected(channel, post_selected)
    fids = []
    probs = []
    left = samples
    while left > 0:
        n = min(batch, left)
        left -= n
        psi = haar_states(d, n, rng)
        rho = psi[:, :, None] * psi.conj()[:, None, :]
        out = channel(rho)
        target = psi @ u.T
        fids.append(np.einsum("si,sij,sj->s", target.conj(), out, target).real)
        probs.append(np.trace(out, axis1=1, axis2=2).real)
    f = np.concatenate(fids)
    p = np.concatenate(probs)
    if not ps:
        return float(f.mean()), float(f.std(ddof=1) / math.sqrt(samples))
    # ratio estimator mean(f) / mean(p), delta-method error
    mf, mp = f.mean(), p.mean()
    ratio = mf / mp
    resid = f - ratio * p
    return float(ratio), float(resid.std(ddof=1) / (mp * math.sqrt(samples)))


# ---------------------------------------------------------------- closed forms


def _sign_vector(n_qubits: int, n: int, m: int) -> np.ndarray:
    # 1-based positions; the sign is flipped where both qubits read 0
    k = np.arange(2**n_qubits)
    hit = ((k >> (n - 1)) & 1 == 0) & ((k >> (m - 1)) & 1 == 0)
    return np.where(hit, -1.0, 1.0)


def analytic_local_fidelity_full(g_matrix, n: int, m: int, n_qubits: int) -> float:
    """Superposition fidelity s G s / (2^N Tr G) for a CZ on 1-based qubits n, m."""
    if n == m:
        raise PhysicsError("CZ needs two distinct qubits")
    g = np.asarray(g_matrix, dtype=complex)
    if g.shape != (2**n_qubits, 2**n_qubits):
        raise PhysicsError("G matrix does not match the qubit count")
    s = _sign_vector(n_qubits, n, m)
    return float((s @ g @ s).real / (2**n_qubits * np.trace(g).real))


def analytic_local_fidelity_simple(r0: complex, r1: complex, r2: complex) -> float:
    """Two-qubit local gate from the three configuration reflections (r1 for one coupled atom)."""
    den = 4 * (abs(r0) ** 2 + 2 * abs(r1) ** 2 + abs(r2) ** 2)
    if den == 0:
        raise PhysicsError("all reflection coefficients vanish")
    return abs(r0 - 2 * r1 - r2) ** 2 / den


def analytic_remote_branches(r0: complex, r1: complex) -> tuple[float, float]:
    """Separately normalised fidelities of the H and V detection branches for identical cavities."""
    fh_num = abs(r0**2 + 4 * r0 + 2 * r1 * r0 - r1**2 - 2) ** 2
    fh_den = (
        abs(r0**2 + 2 * r0 - 1) ** 2
        + 2 * abs(r1 * r0 + r1 + r0 - 1) ** 2
        + abs(r1**2 + 2 * r1 - 1) ** 2
    )
    fv_num = abs(r0**2 - 2 * r0 + r1**2 + 2 * r1 + 2) ** 2
    fv_den = (
        abs(r0**2 + 1) ** 2
        + abs(r1 * r0 + r1 - r0 + 1) ** 2
        + abs(r1 * r0 + r0 - r1 + 1) ** 2
        + abs(r1**2 + 1) ** 2
    )
    if fh_den == 0 or fv_den == 0:
        raise PhysicsError("degenerate reflection coefficients; a detection branch has zero probability")
    return fh_num / (4 * fh_den), fv_num / (4 * fv_den)


def analytic_remote_fidelity(r0: complex, r1: complex) -> float:
    """Mean of the two branch fidelities for a remote gate with one atom per cavity."""
    fh, fv = analytic_remote_branches(r0, r1)
    return 0.5 * (fh + fv)


def branch_fidelities(channel, unitary: np.ndarray) -> tuple[float, float]:
    """Superposition fidelity of each detection branch of a remote channel, each normalised on its own."""
    u = np.asarray(unitary, dtype=complex)
    d = u.shape[0]
    psi = np.full(d, 1 / math.sqrt(d), complex)
    target = u @ psi
    out = []
    for rho in channel.branches(np.outer(psi, psi.conj())):
        rho = rho / np.trace(rho).real
        out.append(float((target.conj() @ rho @ target).real))
    return out[0], out[1]


# ---------------------------------------------------------------- optimum


def _check_ratio(x: float) -> None:
    if not 0.5 < x <= 1:
        raise PhysicsError(f"loss ratio kappa_r/kappa = {x:.6g} outside (1/2, 1]; no analytic optimum")


def optimum_cooperativity(kappa_r: float, kappa: float, gamma: float = CS_GAMMA) -> tuple[float, float]:
    """Optimum (C*, g*) for the two-qubit local gate, with C* = x/(1-x) - 1 and x = kappa_r/kappa."""
    x = kappa_r / kappa
    _check_ratio(x)
    if x == 1:
        return math.inf, math.inf
    coop = x / (1 - x) - 1
    return coop, math.sqrt(coop * gamma * kappa)


def loss_ratio_from_cooperativity(coop: float) -> float:
    return (coop + 1) / (coop + 2)


def optimum_performance(
    kappa_r: float | None = None, kappa: float | None = None, *, cooperativity: float | None = None
) -> tuple[float, float]:
    """(F_max, p_s*) at the optimum coupling.

    Pass either ``kappa_r`` and ``kappa`` or the optimum ``cooperativity``.
    """
    if cooperativity is not None:
        x = loss_ratio_from_cooperativity(cooperativity)
    elif kappa_r is not None and kappa is not None:
        x = kappa_r / kappa
    else:
        raise ValueError("need kappa_r and kappa, or cooperativity")
    _check_ratio(x)
    q = 7 * x**2 - 4 * x + 1
    f_max = 1 - 3 * (1 - x) ** 2 / (4 * q)
    p_s = q / (3 * x - 1) ** 2 * (1 - 2 * x) ** 2
    return f_max, p_s


def required_loss_ratio(fidelity: float) -> float:
    """Smallest kappa_r/kappa whose optimum reaches ``fidelity`` (valid on (3/4, 1])."""
    if not 0.75 < fidelity <= 1:
        raise PhysicsError("target fidelity must lie in (3/4, 1]")
    root = math.sqrt(fidelity * (1 - fidelity))
    return 1 - (20 * root + math.sqrt(48) * (1 - fidelity)) / (math.sqrt(75) + 28 * root)


def qubit_splitting_floor(
    gamma: float = CS_GAMMA,
    splitting: float = math.inf,
    dipole_ratio_sq: float = 1.0,
    excited_offset: float = 0.0,
) -> float:
    """Lower bound on 1 - F from residual coupling of |0>, linear in 2 gamma / omega_q'."""
    eff = splitting - excited_offset
    if eff <= 0:
        raise PhysicsError("effective qubit splitting must be positive")
    if math.isinf(eff):
        return 0.0
    return SPLITTING_FLOOR_COEFF * dipole_ratio_sq * 2 * gamma / eff


def maximize_on_interval(
    func: Callable[[float], float], lo: float, hi: float, n_grid: int = 48, xtol: float = 1e-7
) -> tuple[float, float]:
    """Maximise a scalar function on [lo, hi] (log-spaced scan, then bounded Brent refinement)."""
    if not 0 < lo < hi:
        raise SolverError("invalid search interval")
    grid = np.geomspace(lo, hi, n_grid)
    vals = np.array([func(g) for g in grid])
    if not np.all(np.isfinite(vals)):
        raise SolverError("objective not finite on search grid")
    k = int(np.argmax(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, n_grid - 1)]
    res = minimize_scalar(
        lambda lg: -func(math.exp(lg)),
        bounds=(math.log(a), math.log(b)),
        method="bounded",
        options={"xatol": xtol},
    )
    if not res.success:
        raise SolverError(f"maximisation failed: {res.message}")
    best = math.exp(res.x)
    fbest = -res.fun
    if vals[k] > fbest:
        best, fbest = grid[k], vals[k]
    return float(best), float(fbest)


def locate_fidelity_maximum(
    fidelity_of_g: Callable[[float], float], g_star: float, lo_factor: float = 0.25, hi_factor: float = 4.0
) -> tuple[float, float]:
    """Coupling that maximises a fidelity curve, searched on [g*/4, 4 g*]."""
    if not math.isfinite(g_star) or g_star <= 0:
        raise SolverError("reference coupling must be finite and positive")
    return maximize_on_interval(fidelity_of_g, g_star * lo_factor, g_star * hi_factor)
