import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanofiber_cqed.errors import PhysicsError
from nanofiber_cqed.physics import (
    AtomSpec,
    CavitySpec,
    amplitudes,
    atomic_scatter_rate,
    collective_coupling,
    residual_reflection_shift,
    simplified_reflection,
)


def test_collective_coupling_examples():
    assert collective_coupling([]) == 0
    assert collective_coupling([AtomSpec(7.8)]) == pytest.approx(-23.4 + 0j, abs=1e-12)
    assert collective_coupling([AtomSpec(7.8, 2.6)]) == pytest.approx(-11.7 - 11.7j, abs=1e-12)


def test_scatter_rate_examples():
    assert atomic_scatter_rate([]) == 0
    assert atomic_scatter_rate([AtomSpec(7.8)]) == pytest.approx(23.4)
    assert atomic_scatter_rate([AtomSpec(7.8, 2.6)]) == pytest.approx(11.7)


def test_empty_cavity_flips_phase():
    amp = amplitudes(CavitySpec(2.5), [])
    assert amp.r == pytest.approx(-1)
    assert amp.t == amp.m == amp.a == 0


def test_single_atom_reflection(cavity):
    amp = amplitudes(cavity, [AtomSpec(7.8)])
    assert amp.r.real == pytest.approx(1 - 5 / (2.7 + 23.4), abs=1e-12)
    assert amp.r.real == pytest.approx(0.80843, abs=5e-6)
    assert amp.norm == pytest.approx(1, abs=1e-12)


def test_reflection_zero_crossing(cavity):
    g0 = math.sqrt(2.6 * (2 * 2.5 - 2.7))
    assert g0 == pytest.approx(2.4455, abs=1e-4)
    assert abs(amplitudes(cavity, [AtomSpec(g0)]).r) < 1e-14


def test_simplified_reflection_examples(cavity):
    assert simplified_reflection(0, 7.8, CavitySpec(2.5)) == pytest.approx(-1)
    assert simplified_reflection(2, 10.8, cavity) == pytest.approx(0.94590, abs=5e-6)
    # 1 - 5/(2.7 + 44.862) = 0.894873; the five-digit quote 0.89486 is truncated
    assert simplified_reflection(1, 10.8, cavity) == pytest.approx(1 - 5 / (2.7 + 10.8**2 / 2.6), abs=1e-14)
    assert simplified_reflection(1, 10.8, cavity) == pytest.approx(0.89486, abs=2e-5)


def test_cavity_validation():
    with pytest.raises(PhysicsError):
        CavitySpec(0.0)
    with pytest.raises(PhysicsError):
        CavitySpec(1.0, -0.1)
    with pytest.raises(PhysicsError):
        AtomSpec(-1.0)
    with pytest.raises(PhysicsError):
        AtomSpec(1.0, 0.0, 0.0)


rates = st.floats(0.0, 20.0)
positive = st.floats(1e-3, 20.0)
atom = st.builds(AtomSpec, st.floats(0.0, 50.0), st.floats(-1e3, 1e3), st.floats(1e-2, 10.0))


@settings(max_examples=10_000, deadline=None)
@given(positive, rates, rates, st.floats(-50, 50), st.lists(atom, max_size=5), st.floats(-100, 100))
def test_amplitude_normalization(kr, kt, km, wc, atoms, probe):
    amp = amplitudes(CavitySpec(kr, kt, km, wc), atoms, probe)
    assert amp.norm == pytest.approx(1, abs=1e-12)


@settings(max_examples=500, deadline=None)
@given(st.lists(atom, max_size=6), st.floats(-1e3, 1e3))
def test_collective_coupling_dissipative(atoms, omega):
    assert collective_coupling(atoms, omega).real <= 0


@settings(max_examples=500, deadline=None)
@given(positive, rates, rates, st.integers(0, 8), st.floats(0, 40), st.floats(0.1, 10))
def test_simplified_matches_general(kr, kt, km, n, g, gamma):
    cav = CavitySpec(kr, kt, km)
    full = amplitudes(cav, [AtomSpec(g, 0.0, gamma)] * n).r
    assert abs(full.imag) < 1e-14
    assert full.real == pytest.approx(simplified_reflection(n, g, cav, gamma), abs=1e-14)


def test_reflection_limits(cavity):
    assert amplitudes(CavitySpec(2.5), [AtomSpec(1e-6)]).r == pytest.approx(-1, abs=1e-12)
    gs = np.geomspace(1, 1e4, 60)
    r = [amplitudes(cavity, [AtomSpec(g)] * 2).r.real for g in gs]
    assert np.all(np.diff(r) > 0)
    assert r[-1] == pytest.approx(1, abs=1e-6)


def test_residual_shift_limits():
    assert residual_reflection_shift(0.9696) == 0
    assert abs(residual_reflection_shift(0.9696, splitting=1e12)) < 1e-8
    small = residual_reflection_shift(0.9696, splitting=9192.6)
    assert 0 < abs(small) < 0.2
    with pytest.raises(PhysicsError):
        residual_reflection_shift(0.4, splitting=9192.6)


def test_residual_shift_matches_explicit_term():
    # A detuned |0> term of strength g*^2 moves r(0) by the closed form with
    # gamma/omega_q in place of 2 gamma/omega_q, i.e. at twice the splitting.
    x = 0.9696
    kappa = 1.0
    cav = CavitySpec(x * kappa, (1 - x) * kappa)
    coop = x / (1 - x) - 1
    g = math.sqrt(coop * 2.6 * kappa)
    split = 9192.6
    with_term = amplitudes(cav, [AtomSpec(g, split, 2.6)]).r
    bare = amplitudes(cav, []).r
    closed = residual_reflection_shift(x, 2.6, 2 * split)
    # agreement to leading order in gamma/omega_q; scattering adds O((gamma/omega_q)^2)
    assert (with_term - bare).imag == pytest.approx(closed.imag, rel=1e-4)
    assert (with_term - bare).real == pytest.approx(closed.real, abs=1e-5)
