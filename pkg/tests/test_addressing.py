import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanofiber_cqed.addressing import (
    AddressingBeam,
    Scenario,
    Site,
    build_scenario,
    effective_polarizability,
    power_for_shift,
    shift_for_power,
    shifted_transition,
    stark_shift,
)
from nanofiber_cqed.errors import PhysicsError
from nanofiber_cqed.evaluate import evaluate_gate
from nanofiber_cqed.fiber import AtomPosition, FiberSpec, coupling_at
from nanofiber_cqed.physics import CavitySpec

FIBER = FiberSpec()
CAVITY = CavitySpec(2.5, 0.1, 0.1)


def test_stark_shift_examples():
    assert stark_shift(0.0, 50.0) == 0
    assert stark_shift(2 * 37.0, 37.0) == pytest.approx(37.0)
    with pytest.raises(PhysicsError):
        stark_shift(1.0, 0.0)


def test_red_detuning_lowers_transition():
    # delta = omega_transition - omega_laser > 0 for a red-detuned beam
    assert shifted_transition(100.0, 20.0, 50.0) < 100.0
    assert shifted_transition(100.0, 20.0, -50.0) > 100.0


def test_power_examples():
    assert power_for_shift(0.0) == 0
    assert power_for_shift(1e3) == pytest.approx(100.38, rel=1e-3)
    assert 1 / power_for_shift(1.0) == pytest.approx(9.96, rel=1e-3)
    with pytest.raises(PhysicsError):
        power_for_shift(10.0, polarizability_au=-5.0)
    with pytest.raises(PhysicsError):
        power_for_shift(-1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(0.1, 20), st.floats(1.0, 1e6))
def test_power_round_trip(shift, waist, alpha):
    back = shift_for_power(power_for_shift(shift, waist, alpha), waist, alpha)
    assert back == pytest.approx(shift, rel=1e-12)


def test_effective_polarizability():
    assert effective_polarizability(0, 0, 0) == 0
    assert effective_polarizability(400.0, 27409.98, 450.0) == pytest.approx(26709.98)
    assert effective_polarizability(0, 100, 10) < effective_polarizability(0, 100, 5)


def test_addressing_beam():
    beam = AddressingBeam(shift=1e3)
    assert beam.resolved_power_mw == pytest.approx(power_for_shift(1e3))
    assert AddressingBeam(power_mw=beam.resolved_power_mw).resolved_shift == pytest.approx(1e3)
    with pytest.raises(PhysicsError):
        AddressingBeam()
    with pytest.raises(PhysicsError):
        AddressingBeam(power_mw=1.0, shift=1.0)
    with pytest.raises(PhysicsError):
        AddressingBeam(waist_um=0.0, shift=1.0)


def test_sites_inside_fiber_rejected():
    sc = build_scenario("local", 3, CAVITY, fiber=FIBER, nontarget_r_nm=150.0)
    with pytest.raises(PhysicsError):
        sc.layout()
    with pytest.raises(PhysicsError):
        build_scenario("local", 2, CAVITY, fiber=FIBER, target_r_nm=200.0).layout()


def test_targets_use_fiber_coupling():
    sc = build_scenario("local", 4, CAVITY, fiber=FIBER, nontarget_r_nm=800.0, nontarget_delta=10.0)
    g = sc.couplings()
    assert g[0] == g[1] == pytest.approx(coupling_at(FIBER, AtomPosition(300.0)))
    assert g[2] == pytest.approx(coupling_at(FIBER, AtomPosition(800.0)))
    atoms = sc.layout().atoms
    assert atoms[0].delta_a == 0 and atoms[3].delta_a == 10.0


def test_remote_assignment_alternates():
    sc = build_scenario("remote", 5, CAVITY, target_g=7.8)
    assert sc.layout().cavity_of == (0, 1, 0, 1, 0)


def test_two_atoms_ignore_nontarget_settings():
    base = evaluate_gate(build_scenario("local", 2, CAVITY, fiber=FIBER), pauli=False)
    other = evaluate_gate(
        build_scenario("local", 2, CAVITY, fiber=FIBER, nontarget_r_nm=900.0, nontarget_delta=300.0), pauli=False
    )
    assert other["F_avg"] == base["F_avg"]


def test_degenerate_corner_is_unaddressed():
    a = build_scenario("local", 4, CAVITY, fiber=FIBER, nontarget_r_nm=300.0, nontarget_delta=0.0)
    b = build_scenario("local", 4, CAVITY, fiber=FIBER)
    assert a.couplings() == b.couplings()


@pytest.mark.parametrize("r", [1000.0, 1200.0, 1500.0])
def test_far_nontargets_need_no_shift(r):
    sc = build_scenario("local", 4, CAVITY, fiber=FIBER, nontarget_r_nm=r)
    assert evaluate_gate(sc, pauli=False)["F_avg"] >= 0.97


@pytest.mark.parametrize("kind", ["local", "remote"])
def test_baseline_recovery(kind):
    # F_e is compared: the F_avg map depends on the register size
    base = evaluate_gate(build_scenario(kind, 2, CAVITY, fiber=FIBER), pauli=False)
    far = evaluate_gate(
        build_scenario(kind, 4, CAVITY, fiber=FIBER, nontarget_r_nm=3000.0, nontarget_delta=1e5), pauli=False
    )
    assert far["F_e"] == pytest.approx(base["F_e"], abs=1e-4)


def test_scenario_validation():
    with pytest.raises(PhysicsError):
        Site()
    with pytest.raises(PhysicsError):
        Scenario("teleport", CAVITY, (Site(g=1.0), Site(g=1.0)))
    with pytest.raises(PhysicsError):
        Scenario("local", CAVITY, (Site(g=1.0),))
    with pytest.raises(PhysicsError):
        Scenario("local", CAVITY, (Site(g=1.0), Site(r_nm=300.0))).layout()


def _grid_infidelity(kind):
    rs = np.linspace(300, 1500, 20)
    deltas = np.concatenate([[0.0], np.geomspace(1, 1e3, 19)])
    out = np.empty((20, 20))
    for i, r in enumerate(rs):
        for j, d in enumerate(deltas):
            sc = build_scenario(kind, 4, CAVITY, fiber=FIBER, nontarget_r_nm=r, nontarget_delta=d)
            out[i, j] = 1 - evaluate_gate(sc, pauli=False)["F_avg"]
    return out


@pytest.mark.slow
def test_remote_infidelity_monotone_in_detuning():
    inf = _grid_infidelity("remote")
    assert np.all(np.diff(inf, axis=1) <= 1e-12)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="local infidelity rises with small detunings at r = r0; see decisions log")
def test_local_infidelity_monotone_in_detuning():
    inf = _grid_infidelity("local")
    assert np.all(np.diff(inf, axis=1) <= 1e-12)
