"""Photon-mediated CZ gates acting on atomic density matrices.

Qubit ordering is little-endian: qubit index 0 (q_1 in ket notation) is the least
significant bit of a basis-state index, i.e. the rightmost position in
|q_N ... q_2 q_1>. An atom couples to its cavity only while its qubit is in
|1>; with residual coupling enabled, atoms in |0> couple weakly through a
second excited level detuned by the effective qubit splitting.

Channels returned here are linear maps on arrays of shape (..., d, d). They
are *not* renormalised: for post-selected gates the trace of the output is the
success probability and callers divide by it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from nanofiber_cqed.constants import (
    CS_EXCITED_OFFSET,
    CS_QUBIT_SPLITTING,
    CS_RESIDUAL_DIPOLE_RATIO_SQ,
)
from nanofiber_cqed.errors import PhysicsError
from nanofiber_cqed.physics import AtomSpec, CavitySpec, amplitude_arrays

MAX_QUBITS = 10

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2)

FLAVORS = ("total", "post_selected")


@dataclass(frozen=True)
class ResidualCoupling:
    """Weak coupling of |0> through |e'>.

    ``splitting`` is the effective detuning omega_q' added to the |0> atom's
    probe detuning; ``dipole_ratio_sq`` is |mu_0/mu_1|^2.
    """

    dipole_ratio_sq: float = CS_RESIDUAL_DIPOLE_RATIO_SQ
    splitting: float = CS_QUBIT_SPLITTING - CS_EXCITED_OFFSET

    @classmethod
    def same_excited_state(cls, splitting: float = CS_QUBIT_SPLITTING) -> "ResidualCoupling":
        return cls(dipole_ratio_sq=1.0, splitting=splitting)


@dataclass(frozen=True)
class NodeLayout:
    """Atoms distributed over one or two cavities, with the gate's qubit pair.

    ``cavity_of[n]`` is the cavity index of qubit n. ``control`` and
    ``target`` are 0-based qubit indices.
    """

    cavities: tuple[CavitySpec, ...]
    atoms: tuple[AtomSpec, ...]
    cavity_of: tuple[int, ...]
    control: int = 0
    target: int = 1
    residual: ResidualCoupling | None = None
    max_qubits: int = field(default=MAX_QUBITS, compare=False)

    def __post_init__(self):
        n = len(self.atoms)
        if n == 0:
            raise PhysicsError("layout needs at least one atom")
        if n > self.max_qubits:
            raise PhysicsError(f"{n} qubits exceeds the configured cap of {self.max_qubits}")
        if len(self.cavity_of) != n:
            raise PhysicsError("cavity_of must name a cavity for every atom")
        if any(c < 0 or c >= len(self.cavities) for c in self.cavity_of):
            raise PhysicsError("cavity index out of range")
        for q in (self.control, self.target):
            if q < 0 or q >= n:
                raise PhysicsError(f"qubit index {q} out of range for {n} qubits")
        if self.control == self.target and n > 1:
            raise PhysicsError("control and target must be distinct qubits")

    @property
    def n_qubits(self) -> int:
        return len(self.atoms)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def is_local(self) -> bool:
        return self.cavity_of[self.control] == self.cavity_of[self.target]

    def atoms_in(self, cavity_index: int) -> list[int]:
        return [n for n, c in enumerate(self.cavity_of) if c == cavity_index]


def local_layout(
    cavity: CavitySpec,
    atoms: Sequence[AtomSpec],
    control: int = 0,
    target: int | None = None,
    residual: ResidualCoupling | None = None,
) -> NodeLayout:
    """All atoms in one cavity; ``target`` defaults to qubit 1 (qubit 0 for a lone atom)."""
    if target is None:
        target = 1 if len(atoms) > 1 else 0
    return NodeLayout((cavity,), tuple(atoms), (0,) * len(atoms), control, target, residual)


def alternating_assignment(n_atoms: int, first: int = 0) -> tuple[int, ...]:
    """Cavity indices for a remote gate: q1 -> first, q2 -> other, then alternate."""
    return tuple((first + n) % 2 for n in range(n_atoms))


def remote_layout(
    cavity_1: CavitySpec,
    atoms: Sequence[AtomSpec],
    cavity_2: CavitySpec | None = None,
    assignment: Sequence[int] | None = None,
    residual: ResidualCoupling | None = None,
) -> NodeLayout:
    """Control q1 in cavity 0, target q2 in cavity 1, extra atoms alternating."""
    if assignment is None:
        assignment = alternating_assignment(len(atoms))
    layout = NodeLayout(
        (cavity_1, cavity_2 or cavity_1), tuple(atoms), tuple(assignment), 0, 1, residual
    )
    if layout.is_local:
        raise PhysicsError("remote gate needs control and target in different cavities")
    return layout


def basis_bits(n_qubits: int) -> np.ndarray:
    """(2^N, N) 0/1 array; entry [i, n] is qubit n of basis state i."""
    idx = np.arange(2**n_qubits)[:, None]
    return (idx >> np.arange(n_qubits)[None, :]) & 1


def _per_atom_terms(layout: NodeLayout, cavity_index: int):
    """Coupling and scatter contributions of each atom in its |1> and |0> state."""
    n = layout.n_qubits
    c1 = np.zeros(n, complex)
    s1 = np.zeros(n)
    c0 = np.zeros(n, complex)
    s0 = np.zeros(n)
    for q in layout.atoms_in(cavity_index):
        at = layout.atoms[q]
        c1[q] = at.g**2 / complex(-at.gamma, at.delta_a)
        s1[q] = -c1[q].real
        if layout.residual is not None:
            res = layout.residual
            c0[q] = res.dipole_ratio_sq * at.g**2 / complex(-at.gamma, at.delta_a + res.splitting)
            s0[q] = -c0[q].real
    return c1, s1, c0, s0


def configuration_amplitudes(
    layout: NodeLayout, cavity_index: int = 0, probe_detuning: float = 0.0
) -> np.ndarray:
    """Amplitudes for every atomic basis state, shape (4, 2^N), rows r, t, m, a."""
    bits = basis_bits(layout.n_qubits)
    c1, s1, c0, s0 = _per_atom_terms(layout, cavity_index)
    gN = bits @ c1 + (1 - bits) @ c0
    kappa_a = bits @ s1 + (1 - bits) @ s0
    return amplitude_arrays(layout.cavities[cavity_index], gN, kappa_a, probe_detuning)


def reflection_vector(
    layout: NodeLayout, cavity_index: int = 0, probe_detuning: float = 0.0
) -> np.ndarray:
    return configuration_amplitudes(layout, cavity_index, probe_detuning)[0]


@dataclass(frozen=True)
class GMatrix:
    """Photonic overlap matrix; the gate acts as rho -> rho o G."""

    matrix: np.ndarray
    flavor: str

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


def build_g_matrix(
    layout: NodeLayout, cavity_index: int = 0, probe_detuning: float = 0.0, flavor: str = "post_selected"
) -> GMatrix:
    """(G_total)_ij = <p_j|p_i>, (G_ps)_ij = r_i r_j^*."""
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}")
    amps = configuration_amplitudes(layout, cavity_index, probe_detuning)
    if flavor == "post_selected":
        amps = amps[:1]
    return GMatrix(amps.T @ amps.conj(), flavor)


class SchurChannel:
    """rho -> rho o G."""

    def __init__(self, g: GMatrix | np.ndarray, post_selected: bool):
        self.g = np.asarray(g, dtype=complex)
        self.post_selected = post_selected

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return rho * self.g


def local_channel(
    layout: NodeLayout, probe_detuning: float = 0.0, flavor: str = "post_selected"
) -> SchurChannel:
    cav = layout.cavity_of[layout.control]
    g = build_g_matrix(layout, cav, probe_detuning, flavor)
    return SchurChannel(g, post_selected=(flavor == "post_selected"))


def _reflection_operator(r: np.ndarray) -> np.ndarray:
    # H block reflects off the cavity, V block bypasses it
    return np.concatenate([r, np.ones_like(r)])


def _photon_hadamard(ext: np.ndarray, d: int) -> np.ndarray:
    # (H (x) I) ext (H (x) I)^dagger without forming the Kronecker product
    shape = ext.shape
    t = ext.reshape(shape[:-2] + (2, d, 2, d))
    t = np.einsum("ab,...bjck,dc->...ajdk", HADAMARD, t, HADAMARD)
    return t.reshape(shape)


def _reflect(ext: np.ndarray, r: np.ndarray) -> np.ndarray:
    v = _reflection_operator(r)
    return v[:, None] * ext * v.conj()[None, :]


class RemoteChannel:
    """Remote CZ: H, cavity-1 reflection, H, cavity-2 reflection, H, measure.

    The photon starts in |H>; a |V> detection is followed by Z on the control.
    Only atoms in the respective cavity enter each reflection. The channel is
    post-selected on photon detection.
    """

    post_selected = True

    def __init__(self, layout: NodeLayout, probe_detuning: float = 0.0):
        if layout.is_local:
            raise PhysicsError("remote gate needs control and target in different cavities")
        self.layout = layout
        self.r1 = reflection_vector(layout, layout.cavity_of[layout.control], probe_detuning)
        self.r2 = reflection_vector(layout, layout.cavity_of[layout.target], probe_detuning)
        bits = basis_bits(layout.n_qubits)
        self.z_control = 1.0 - 2.0 * bits[:, layout.control]

    @property
    def dim(self) -> int:
        return self.layout.dim

    def photon_state(self, rho: np.ndarray) -> np.ndarray:
        """Photon (x) atom density matrix after the last Hadamard, before measurement."""
        d = self.dim
        rho = np.asarray(rho, dtype=complex)
        ext = np.zeros(rho.shape[:-2] + (2 * d, 2 * d), complex)
        ext[..., :d, :d] = rho
        ext = _photon_hadamard(ext, d)
        ext = _reflect(ext, self.r1)
        ext = _photon_hadamard(ext, d)
        ext = _reflect(ext, self.r2)
        return _photon_hadamard(ext, d)

    def branches(self, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unnormalised atomic states for the H and V outcomes (Z already applied to V)."""
        d = self.dim
        ext = self.photon_state(rho)
        rho_h = ext[..., :d, :d]
        z = self.z_control
        rho_v = z[:, None] * ext[..., d:, d:] * z[None, :]
        return rho_h, rho_v

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho_h, rho_v = self.branches(rho)
        return rho_h + rho_v


def remote_photon_amplitudes(r_c1, r_c2) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form (H, V) photon amplitudes after the remote sequence."""
    r_c1 = np.asarray(r_c1)
    r_c2 = np.asarray(r_c2)
    norm = 2 * math.sqrt(2)
    h = (r_c2 * r_c1 + r_c2 + r_c1 - 1) / norm
    v = (r_c2 * r_c1 + r_c2 - r_c1 + 1) / norm
    return h, v


class GateResult(NamedTuple):
    rho: np.ndarray
    success_probability: float


def check_density_matrix(rho: np.ndarray, dim: int | None = None, atol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise PhysicsError("density matrix must be square")
    if dim is not None and rho.shape[0] != dim:
        raise PhysicsError(f"density matrix has dimension {rho.shape[0]}, expected {dim}")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise PhysicsError("density matrix is not Hermitian")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise PhysicsError("density matrix is not positive semidefinite")
    if np.trace(rho).real > 1 + atol:
        raise PhysicsError("density matrix trace exceeds 1")
    return rho


def _finish(out: np.ndarray, post_selected: bool) -> GateResult:
    p = float(np.trace(out).real)
    if post_selected:
        if p <= 0:
            raise PhysicsError("post-selection probability is zero for this input")
        out = out / p
    return GateResult(out, p)


def apply_local_gate(
    rho: np.ndarray, layout: NodeLayout, probe_detuning: float = 0.0, flavor: str = "post_selected"
) -> GateResult:
    """Local CZ on the layout's qubit pair.

    ``total`` traces out the photon (trace preserving); ``post_selected``
    conditions on a reflected photon and renormalises, returning the success
    probability alongside.
    """
    if not layout.is_local:
        raise PhysicsError("local gate needs control and target in the same cavity")
    rho = check_density_matrix(rho, layout.dim)
    chan = local_channel(layout, probe_detuning, flavor)
    return _finish(chan(rho), chan.post_selected)


def apply_atom_photon_gate(
    rho: np.ndarray,
    layout: NodeLayout,
    probe_detuning: float = 0.0,
    tau_delay: float = 0.0,
    cavity_index: int | None = None,
) -> np.ndarray:
    """Atom-photon CPF on a photon (x) atoms density matrix (photon is the leading factor).

    The H component reflects off the cavity and picks up the configuration's
    reflection coefficient; the V component is untouched. Lost photons are
    dropped, so the output trace is the probability the photon returns.
    """
    if tau_delay != 0:
        raise PhysicsError("only tau_delay = 0 is supported")
    d = layout.dim
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2 * d, 2 * d):
        raise PhysicsError(
            f"expected a photon-extended state of shape {(2 * d, 2 * d)}, got {rho.shape}"
        )
    if cavity_index is None:
        cavity_index = layout.cavity_of[layout.control]
    r = reflection_vector(layout, cavity_index, probe_detuning)
    return _reflect(rho, r)


def apply_remote_gate(rho: np.ndarray, layout: NodeLayout, probe_detuning: float = 0.0) -> GateResult:
    """Remote CZ, post-selected on detecting the photon."""
    chan = RemoteChannel(layout, probe_detuning)
    rho = check_density_matrix(rho, layout.dim)
    return _finish(chan(rho), True)


def success_probability(layout: NodeLayout, probe_detuning: float = 0.0, kind: str | None = None) -> float:
    """Channel-averaged success probability.

    Local: Tr(G_ps) / 2^N. Remote: Tr[(H_N G1 H_N^dag) o G2] / 2^(N+1), with
    G1, G2 the photon-extended reflection matrices of the two cavities.
    """
    if kind is None:
        kind = "local" if layout.is_local else "remote"
    d = layout.dim
    if kind == "local":
        cav = layout.cavity_of[layout.control]
        return build_g_matrix(layout, cav, probe_detuning, "post_selected").trace() / d
    if kind != "remote":
        raise ValueError("kind must be 'local' or 'remote'")
    if layout.is_local:
        raise PhysicsError("remote gate needs control and target in different cavities")
    v1 = _reflection_operator(reflection_vector(layout, layout.cavity_of[layout.control], probe_detuning))
    v2 = _reflection_operator(reflection_vector(layout, layout.cavity_of[layout.target], probe_detuning))
    g1 = np.outer(v1, v1.conj())
    g2 = np.outer(v2, v2.conj())
    h_n = np.kron(HADAMARD, np.eye(d))
    return float(np.trace((h_n @ g1 @ h_n.conj().T) * g2).real / (2 * d))


def gate_channel(layout: NodeLayout, probe_detuning: float = 0.0, flavor: str = "post_selected"):
    """Local or remote channel depending on where control and target sit."""
    if layout.is_local:
        return local_channel(layout, probe_detuning, flavor)
    return RemoteChannel(layout, probe_detuning)


def ideal_cz(n_qubits: int, qubit_a: int, qubit_b: int, flip_state: str = "00") -> np.ndarray:
    """Diagonal unitary exp(i pi |xy><xy|) on two qubits of an N-qubit register."""
    if flip_state not in ("00", "11"):
        raise ValueError("flip_state must be '00' or '11'")
    bits = basis_bits(n_qubits)
    val = 0 if flip_state == "00" else 1
    hit = (bits[:, qubit_a] == val) & (bits[:, qubit_b] == val)
    return np.diag(np.where(hit, -1.0, 1.0)).astype(complex)


def ideal_unitary(layout: NodeLayout) -> np.ndarray:
    """exp(i pi |00><00|) for local gates, exp(i pi |11><11|) for remote ones."""
    flip = "00" if layout.is_local else "11"
    return ideal_cz(layout.n_qubits, layout.control, layout.target, flip)
