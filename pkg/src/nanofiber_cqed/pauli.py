"""Pauli-channel description of a gate's error.

The error channel is Lambda(rho) = U^dag eps(rho) U. Its Pauli-transfer
diagonal R_ii = Tr(sigma_i Lambda(sigma_i)) / 2^N is mapped to Pauli error
rates with the inverse of the Walsh-type matrix A_1^{(x)N}. No twirling is
applied to the channel itself; the rates are those of its Pauli-twirled
version, and they sum to the channel's success probability.

Pauli strings are indexed in base 4, little-endian: digit n (0=I, 1=X, 2=Y,
3=Z) acts on qubit n. Labels are written in ket order, highest qubit first,
so "IZ" means Z on qubit 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

PAULI_LETTERS = "IXYZ"
PAULI_MATRICES = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# Tr(sigma_a sigma_b sigma_a sigma_b)/2 table
_A1 = np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float)

DEPHASING_LABELS = ("IZ", "ZI", "ZZ")
_BLOCK = 256


def pauli_digits(index: int, n_qubits: int) -> list[int]:
    return [(index >> (2 * n)) & 3 for n in range(n_qubits)]


def pauli_label(index: int, n_qubits: int) -> str:
    return "".join(PAULI_LETTERS[d] for d in reversed(pauli_digits(index, n_qubits)))


def pauli_index(label: str) -> int:
    return sum(PAULI_LETTERS.index(ch) << (2 * n) for n, ch in enumerate(reversed(label.upper())))


def pauli_operator(index: int, n_qubits: int) -> np.ndarray:
    """Kronecker product sigma_{q_N} (x) ... (x) sigma_{q_1}."""
    mats = [PAULI_MATRICES[d] for d in reversed(pauli_digits(index, n_qubits))]
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def _pauli_stack(indices, n_qubits: int) -> np.ndarray:
    return np.stack([pauli_operator(int(i), n_qubits) for i in indices])


def pauli_transfer_diagonal(channel, unitary: np.ndarray) -> np.ndarray:
    """R_ii = Tr(sigma_i U^dag eps(sigma_i) U) / 2^N for every Pauli string."""
    u = np.asarray(unitary, dtype=complex)
    d = u.shape[0]
    n = int(round(math.log2(d)))
    if u.shape != (d, d) or 2**n != d:
        raise ValueError("unitary must be square with dimension 2^N")
    dim = getattr(channel, "dim", d)
    if dim != d:
        raise ValueError(f"channel acts on dimension {dim}, unitary on {d}")
    total = 4**n
    out = np.empty(total)
    ud = u.conj().T
    for start in range(0, total, _BLOCK):
        idx = np.arange(start, min(start + _BLOCK, total))
        paulis = _pauli_stack(idx, n)
        lam = ud @ channel(paulis) @ u
        vals = np.einsum("kij,kji->k", paulis, lam) / d
        out[idx] = vals.real
    return out


def rates_from_transfer(diagonal: np.ndarray) -> np.ndarray:
    """Pauli error rates p = A_N^{-1} R with A_N^{-1} = A_1^{(x)N} / 4^N."""
    diagonal = np.asarray(diagonal, dtype=float)
    n = int(round(math.log(diagonal.size, 4))) if diagonal.size else -1
    if n < 0 or 4**n != diagonal.size:
        raise ValueError(f"transfer diagonal length {diagonal.size} is not a power of 4")
    t = diagonal.reshape((4,) * n) if n else diagonal.reshape(())
    for axis in range(n):
        t = np.moveaxis(np.tensordot(_A1 / 4, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


@dataclass(frozen=True)
class PauliChannel:
    """Pauli error rates of an N-qubit gate, with the marginal on its qubit pair."""

    rates: np.ndarray
    n_qubits: int
    pair: tuple[int, int]
    marginal: dict[str, float] = field(repr=False)

    @property
    def success_probability(self) -> float:
        return float(self.rates.sum())

    @property
    def bias(self) -> float:
        return noise_bias(self.marginal)

    def rate(self, label: str) -> float:
        if len(label) != self.n_qubits:
            raise ValueError(f"label must have {self.n_qubits} characters")
        return float(self.rates[pauli_index(label)])

    def as_dict(self, threshold: float = 0.0) -> dict[str, float]:
        """Full rate table by label; entries with |p| < threshold are reported as 0."""
        return {
            pauli_label(i, self.n_qubits): (0.0 if abs(p) < threshold else float(p))
            for i, p in enumerate(self.rates)
        }


def marginal_rates(rates: np.ndarray, n_qubits: int, pair: tuple[int, int]) -> dict[str, float]:
    """Sum rates over all qubits outside ``pair``; labels are ordered high qubit first."""
    lo, hi = sorted(pair)
    t = np.asarray(rates).reshape((4,) * n_qubits)
    # axis k of the reshaped tensor is qubit n_qubits - 1 - k
    keep = {n_qubits - 1 - hi, n_qubits - 1 - lo}
    drop = tuple(k for k in range(n_qubits) if k not in keep)
    m = t.sum(axis=drop) if drop else t
    return {
        PAULI_LETTERS[a] + PAULI_LETTERS[b]: float(m[a, b]) for a in range(4) for b in range(4)
    }


def error_rates(channel, unitary: np.ndarray, pair: tuple[int, int] = (0, 1)) -> PauliChannel:
    """Pauli error rates of ``channel`` relative to ``unitary``, not renormalised."""
    diag = pauli_transfer_diagonal(channel, unitary)
    rates = rates_from_transfer(diag)
    n = int(round(math.log(rates.size, 4)))
    if n < 2:
        raise ValueError("need at least two qubits for a pair marginal")
    return PauliChannel(rates, n, tuple(pair), marginal_rates(rates, n, pair))


def noise_bias(marginal: dict[str, float], floor: float = 1e-12) -> float:
    """eta = (p_IZ + p_ZI + p_ZZ) / (sum of the other non-identity rates); +inf below ``floor``."""
    dephasing = sum(marginal[k] for k in DEPHASING_LABELS)
    other = sum(v for k, v in marginal.items() if k != "II" and k not in DEPHASING_LABELS)
    if other < floor:
        return math.inf
    return dephasing / other
