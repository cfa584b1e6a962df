import itertools

import numpy as np
import pytest

from nanofiber_cqed.fidelity import entanglement_fidelity
from nanofiber_cqed.gates import (
    RemoteChannel,
    ideal_cz,
    ideal_unitary,
    local_channel,
    local_layout,
    remote_layout,
    success_probability,
)
from nanofiber_cqed.pauli import (
    PAULI_MATRICES,
    error_rates,
    marginal_rates,
    noise_bias,
    pauli_index,
    pauli_label,
    pauli_operator,
    pauli_transfer_diagonal,
    rates_from_transfer,
)
from nanofiber_cqed.physics import AtomSpec

NON_DEPHASING = [a + b for a in "IXYZ" for b in "IXYZ" if a + b not in ("II", "IZ", "ZI", "ZZ")]


def twirl_oracle(channel, unitary, n):
    """Rates of the explicitly twirled error channel, read off its Choi matrix."""
    d = 2**n
    u = np.asarray(unitary)
    paulis = [pauli_operator(k, n) for k in range(4**n)]

    def error(rho):
        return u.conj().T @ channel(rho) @ u

    def twirled(rho):
        return sum(p.conj().T @ error(p @ rho @ p.conj().T) @ p for p in paulis) / 4**n

    rates = []
    for p in paulis:
        acc = 0j
        for i, j in itertools.product(range(d), repeat=2):
            e = np.zeros((d, d), complex)
            e[i, j] = 1
            acc += (p.conj().T @ twirled(e) @ p)[i, j]
        rates.append(acc.real / d**2)
    return np.array(rates)


def test_trivial_transfer_diagonals():
    u = np.eye(2)
    assert np.allclose(pauli_transfer_diagonal(lambda r: r, u), 1)
    z = PAULI_MATRICES[3]
    np.testing.assert_allclose(pauli_transfer_diagonal(lambda r: z @ r @ z, u), [1, -1, -1, 1])
    cz = ideal_cz(2, 0, 1)
    assert np.allclose(pauli_transfer_diagonal(lambda r: cz @ r @ cz.conj().T, cz), 1)


def test_trivial_rates():
    np.testing.assert_allclose(rates_from_transfer(np.ones(16)), np.eye(16)[0], atol=1e-15)
    np.testing.assert_allclose(rates_from_transfer([1, -1, -1, 1]), [0, 0, 0, 1], atol=1e-15)
    with pytest.raises(ValueError):
        rates_from_transfer(np.ones(8))


def test_dimension_mismatch(cavity, pair):
    chan = local_channel(local_layout(cavity, pair))
    with pytest.raises(ValueError):
        pauli_transfer_diagonal(chan, np.eye(8))


def test_labels():
    assert pauli_label(pauli_index("XZ"), 2) == "XZ"
    # ket order: "IZ" is Z on qubit 0
    np.testing.assert_allclose(pauli_operator(pauli_index("IZ"), 2), np.kron(np.eye(2), PAULI_MATRICES[3]))
    for k in range(64):
        assert pauli_index(pauli_label(k, 3)) == k


def test_local_gate_rates(cavity, pair):
    layout = local_layout(cavity, pair)
    pc = error_rates(local_channel(layout), ideal_unitary(layout))
    m = pc.marginal
    assert m["ZZ"] == pytest.approx(1.12197e-3, abs=2e-8)
    assert m["IZ"] == pytest.approx(1.38875e-4, abs=2e-9)
    assert m["IZ"] == pytest.approx(m["ZI"], abs=1e-12)
    assert max(abs(m[k]) for k in NON_DEPHASING) < 1e-12
    assert pc.bias == float("inf")
    assert pc.success_probability == pytest.approx(success_probability(layout), abs=1e-10)


def test_remote_gate_asymmetry(cavity, pair):
    layout = remote_layout(cavity, pair)
    pc = error_rates(RemoteChannel(layout), ideal_unitary(layout))
    assert abs(pc.marginal["IZ"] - pc.marginal["ZI"]) > 1e-4
    assert pc.bias == float("inf")


@pytest.mark.parametrize("kind, n", [("local", 1), ("local", 2), ("remote", 2)])
def test_brute_force_twirl(kind, n, cavity, rng):
    atoms = [AtomSpec(7.8 * rng.uniform(0.5, 1.5), rng.uniform(-5, 5)) for _ in range(n)]
    if kind == "local":
        layout = local_layout(cavity, atoms)
        chan = local_channel(layout, flavor="total")
    else:
        layout = remote_layout(cavity, atoms)
        chan = RemoteChannel(layout)
    u = ideal_unitary(layout)
    fast = rates_from_transfer(pauli_transfer_diagonal(chan, u))
    np.testing.assert_allclose(fast, twirl_oracle(chan, u, n), atol=1e-10)


def test_rates_sum_to_success_probability(cavity):
    atoms = [AtomSpec(7.8), AtomSpec(7.8), AtomSpec(6.0, 40.0)]
    local = local_layout(cavity, atoms)
    remote = remote_layout(cavity, atoms)
    for layout, chan in ((local, local_channel(local)), (remote, RemoteChannel(remote))):
        pc = error_rates(chan, ideal_unitary(layout))
        assert pc.success_probability == pytest.approx(success_probability(layout), abs=1e-10)
        assert pc.rates.min() > -1e-10


def test_identity_rate_is_entanglement_fidelity(cavity, pair):
    layout = local_layout(cavity, pair)
    chan = local_channel(layout, flavor="total")
    u = ideal_unitary(layout)
    pc = error_rates(chan, u)
    assert pc.rates.sum() == pytest.approx(1, abs=1e-10)
    assert pc.rate("II") == pytest.approx(entanglement_fidelity(chan, u), abs=1e-10)


def test_marginal_traces_out_spectators():
    rates = np.zeros(64)
    rates[pauli_index("XZI")] = 0.3  # X on qubit 2 is a spectator error
    rates[pauli_index("IZI")] = 0.7
    m = marginal_rates(rates, 3, (0, 1))
    assert m["ZI"] == pytest.approx(1.0)
    m = marginal_rates(rates, 3, (0, 2))
    assert m["XI"] == pytest.approx(0.3) and m["II"] == pytest.approx(0.7)


def test_noise_bias():
    uniform = {a + b: (0.0 if a + b == "II" else 0.01) for a in "IXYZ" for b in "IXYZ"}
    assert noise_bias(uniform) == pytest.approx(0.25)
    pure_z = dict.fromkeys(uniform, 0.0)
    pure_z["ZZ"] = 0.1
    assert noise_bias(pure_z) == float("inf")
