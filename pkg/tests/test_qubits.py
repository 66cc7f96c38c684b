import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from oracles import bose_einstein_mp, projector_jumps
from qengine.qubits import (A_COLD, A_HOT, PHI_0, PHI_11, PHI_MINUS, PHI_PLUS,
                            DegenerateSteadyStateError, QubitMachineParams, density_fidelity,
                            dissipator_superop, evolve_density, global_jump_set, liouvillian,
                            local_jump_set, plateau_current, qubit_hamiltonian,
                            qubit_heat_current, qubit_steady, steady_state, unvec, vec)


def fig8(g=0.05, **kw):
    base = dict(omega=1.0, g=g, kappa_c=0.005, kappa_h=0.005, kT_c=0.5, kT_h=5.0)
    base.update(kw)
    return QubitMachineParams.from_kappas(**base)


def ket(bits):
    v = np.zeros(4)
    v[int(bits, 2)] = 1.0
    return v


def thermal_qubit(omega, kT):
    w = np.array([1.0, math.exp(-omega / kT)])
    return np.diag(w / w.sum())


def test_params_validation():
    with pytest.raises(ValueError):
        fig8(g=1.0)
    with pytest.raises(ValueError):
        fig8(g=-0.1)
    with pytest.raises(ValueError):
        QubitMachineParams(1.0, 0.1, 0.0, 0.005, 0.5, 5.0)
    p = fig8()
    assert p.kappa_c == pytest.approx(0.005)
    assert p.replace(g=0.2).g == 0.2


def test_hamiltonian_spectrum_and_eigenvectors():
    h0 = qubit_hamiltonian(fig8(g=0.0))
    assert np.array_equal(h0, np.diag([0, 1, 1, 2]).astype(complex))
    h = qubit_hamiltonian(fig8(g=0.1))
    assert np.allclose(np.linalg.eigvalsh(h), [0, 0.9, 1.1, 2], atol=1e-14)
    for vec_, e in ((PHI_0, 0.0), (PHI_MINUS, 0.9), (PHI_PLUS, 1.1), (PHI_11, 2.0)):
        assert np.max(np.abs(h @ vec_ - e * vec_)) < 1e-12


def test_local_jumps():
    p = fig8()
    jc, jh = local_jump_set(p)
    assert (jc.bath, jh.bath) == ("c", "h")
    assert np.allclose(jc.matrix @ ket("10"), ket("00"))
    assert np.allclose(jc.matrix @ ket("01"), 0)
    assert np.allclose(jh.matrix @ ket("01"), ket("00"))
    assert jc.gamma_down == pytest.approx(0.00578259, abs=1e-8)
    assert jc.gamma_down == pytest.approx(0.005 * (1 + bose_einstein_mp(1, 0.5)), rel=1e-13)
    assert jc.gamma_down / jc.gamma_up == pytest.approx(math.e ** 2, rel=1e-12)


@settings(max_examples=50)
@given(g=st.floats(0.0, 0.9), nc=st.floats(1e-3, 0.1), nh=st.floats(1e-3, 0.1),
       tc=st.floats(0.1, 10), th=st.floats(0.1, 10))
def test_detailed_balance_property(g, nc, nh, tc, th):
    p = QubitMachineParams(1.0, g, nc, nh, tc, th)
    for j in local_jump_set(p) + global_jump_set(p):
        kT = p.kT(j.bath)
        assert j.gamma_down / j.gamma_up == pytest.approx(math.exp(j.energy / kT), rel=1e-10)
        assert j.gamma_down - j.gamma_up == pytest.approx(p.nu(j.bath) * j.energy, rel=1e-10)


def test_global_jumps_match_projector_construction():
    p = fig8(g=0.2)
    h = qubit_hamiltonian(p)
    jumps = {(j.bath, round(j.energy, 12)): j.matrix for j in global_jump_set(p)}
    for bath, a in (("c", A_COLD), ("h", A_HOT)):
        for e, op in projector_jumps(h, a).items():
            assert np.allclose(jumps[bath, round(e, 12)], op, atol=1e-12)
    c_hi = jumps["c", 1.2]
    assert np.allclose(c_hi @ PHI_PLUS, PHI_0 / math.sqrt(2))


def test_global_rate_ratio():
    p = fig8(g=0.2)
    hot = {round(j.energy, 12): j for j in global_jump_set(p) if j.bath == "h"}
    ratio = hot[1.2].gamma_down / hot[0.8].gamma_down
    expected = 1.2 * (bose_einstein_mp(1.2, 5) + 1) / (0.8 * (bose_einstein_mp(0.8, 5) + 1))
    assert ratio == pytest.approx(expected, rel=1e-12)


def test_global_equals_local_at_zero_coupling():
    p = fig8(g=0.0)
    a = dissipator_superop(global_jump_set(p))
    b = dissipator_superop(local_jump_set(p))
    assert np.max(np.abs(a - b)) < 1e-12
    lv_g = liouvillian(qubit_hamiltonian(p), global_jump_set(p))
    lv_l = liouvillian(qubit_hamiltonian(p), local_jump_set(p))
    assert np.max(np.abs(lv_g - lv_l)) < 1e-12
    # the two operators of each bath sum to the local lowering operator
    split = global_jump_set(fig8(g=0.2))
    for bath, a_loc in (("c", A_COLD), ("h", A_HOT)):
        total = sum(j.matrix for j in split if j.bath == bath)
        assert np.allclose(total, a_loc, atol=1e-15)


def test_global_set_merges_float_degenerate_energies():
    p = fig8(g=1e-120)
    assert len(global_jump_set(p)) == 2
    assert qubit_steady(p, "global").J_h == pytest.approx(0.0, abs=1e-12)
    assert len(global_jump_set(fig8(g=1e-6))) == 4


def test_secular_generator_is_discontinuous_at_zero_coupling():
    # distinct Bohr frequencies never recombine, so the g -> 0+ limit keeps a
    # finite current while g = 0 gives none
    assert qubit_steady(fig8(g=1e-8), "global").J_h == pytest.approx(plateau_current(fig8()), rel=1e-6)
    assert abs(qubit_steady(fig8(g=0.0), "global").J_h) < 1e-12


def test_liouvillian_structure():
    p = fig8(g=0.1)
    h = qubit_hamiltonian(p)
    pure = liouvillian(h, [])
    assert np.max(np.abs(np.linalg.eigvals(pure).real)) < 1e-12
    with pytest.raises(ValueError):
        liouvillian(h + np.triu(np.ones((4, 4)), 1), [])
    trace_row = vec(np.eye(4)).conj()
    for jumps in (local_jump_set(p), global_jump_set(p)):
        lv = liouvillian(h, jumps)
        assert np.max(np.abs(trace_row @ lv)) < 1e-12
        assert abs(np.trace(unvec(lv @ vec(np.eye(4) / 4)))) < 1e-12
        assert np.max(np.linalg.eigvals(lv).real) <= 1e-12


def test_vec_is_column_stacking():
    rho = np.arange(16.0).reshape(4, 4)
    assert np.array_equal(vec(rho)[:4], rho[:, 0])
    assert np.array_equal(unvec(vec(rho)), rho)
    a, b = np.random.default_rng(0).normal(size=(2, 4, 4))
    assert np.allclose(vec(a @ rho @ b), np.kron(b.T, a) @ vec(rho))


def test_local_steady_state_uncoupled_is_product():
    p = fig8(g=0.0)
    r = qubit_steady(p, "local")
    expected = np.kron(thermal_qubit(1.0, 0.5), thermal_qubit(1.0, 5.0))
    assert np.allclose(r.rho, expected, atol=1e-12)
    assert r.J_h == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("method", ["local", "global"])
def test_equal_temperatures_null_current(method):
    p = fig8(g=0.1, kT_h=0.5)
    r = qubit_steady(p, method)
    assert abs(r.J_h) < 1e-12 and abs(r.J_c) < 1e-12


def test_global_equilibrium_is_gibbs():
    p = fig8(g=0.3, kT_h=0.7, kT_c=0.7)
    h = qubit_hamiltonian(p)
    gibbs = expm(-h / 0.7)
    gibbs /= np.trace(gibbs)
    assert np.max(np.abs(qubit_steady(p, "global").rho - gibbs)) < 1e-10


@pytest.mark.parametrize("method", ["local", "global"])
def test_steady_state_against_long_time_evolution(method):
    p = fig8(g=0.05)
    r = qubit_steady(p, method)
    h = qubit_hamiltonian(p)
    jumps = local_jump_set(p) if method == "local" else global_jump_set(p)
    lv = liouvillian(h, jumps)
    assert np.linalg.norm(lv @ vec(r.rho)) < 1e-12
    rho_t = evolve_density(lv, np.eye(4) / 4, 6000.0)
    assert np.max(np.abs(rho_t - r.rho)) < 1e-9


def test_evolution_preserves_trace_and_positivity():
    p = fig8(g=0.2)
    lv = liouvillian(qubit_hamiltonian(p), global_jump_set(p))
    psi = (ket("01") + 1j * ket("10")) / math.sqrt(2)
    rho0 = np.outer(psi, psi.conj())
    for t in (1.0, 10.0, 100.0, 1000.0):
        rho = evolve_density(lv, rho0, t)
        assert abs(np.trace(rho) - 1) < 1e-9
        assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] > -1e-9


@settings(max_examples=30, deadline=None)
@given(g=st.floats(0.0, 0.9), kc=st.floats(1e-3, 0.05), kh=st.floats(1e-3, 0.05),
       tc=st.floats(0.2, 5), th=st.floats(0.2, 5))
def test_current_balance_and_second_law(g, kc, kh, tc, th):
    p = QubitMachineParams.from_kappas(1.0, g, kc, kh, tc, th)
    for method in ("local", "global"):
        r = qubit_steady(p, method)
        assert abs(r.J_c + r.J_h) < 1e-10
    loc = qubit_steady(p, "local")
    if g * g > 0 and abs(th - tc) > 1e-3 and abs(loc.J_h) > 1e-15:
        assert np.sign(loc.J_h) == np.sign(th - tc)


def test_heat_current_is_dissipator_resolved():
    p = fig8(g=0.1)
    h = qubit_hamiltonian(p)
    jumps = global_jump_set(p)
    rho = qubit_steady(p, "global").rho
    total = qubit_heat_current(h, jumps, rho, "h") + qubit_heat_current(h, jumps, rho, "c")
    drho = unvec(dissipator_superop(jumps) @ vec(rho))
    assert total == pytest.approx(np.trace(h @ drho).real, abs=1e-15)


def test_plateau_and_vanishing_local_current():
    p = fig8(g=1e-4)
    assert plateau_current(p) == pytest.approx(0.0019214, abs=1e-7)
    assert abs(qubit_steady(p, "local").J_h) < 1e-6
    assert qubit_steady(p, "global").J_h == pytest.approx(plateau_current(p), rel=0.02)


def test_local_current_scales_as_g_squared():
    j1 = qubit_steady(fig8(g=1e-4), "local").J_h
    j2 = qubit_steady(fig8(g=2e-4), "local").J_h
    assert j2 / j1 == pytest.approx(4.0, rel=1e-3)


def test_fidelity_properties():
    p = fig8(g=0.05)
    rl, rg = qubit_steady(p, "local").rho, qubit_steady(p, "global").rho
    assert density_fidelity(rl, rl) == pytest.approx(1.0, abs=1e-10)
    assert density_fidelity(rl, rg) == pytest.approx(density_fidelity(rg, rl), abs=1e-12)
    assert density_fidelity(rl, rg) >= 0.99
    p00 = np.outer(ket("00"), ket("00"))
    p11 = np.outer(ket("11"), ket("11"))
    assert density_fidelity(p00, p11) == 0.0
    # pure versus mixed: <psi|sigma|psi> under the square root
    assert density_fidelity(p00, np.eye(4) / 4) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_rejects_invalid():
    with pytest.raises(ValueError):
        density_fidelity(np.eye(4), np.eye(4) / 4)
    with pytest.raises(ValueError):
        density_fidelity(np.diag([1.5, -0.5, 0, 0]), np.eye(4) / 4)
    with pytest.raises(ValueError):
        density_fidelity(np.triu(np.ones((4, 4))) / 4, np.eye(4) / 4)


def test_degenerate_kernel_detected():
    with pytest.raises(DegenerateSteadyStateError):
        steady_state(liouvillian(qubit_hamiltonian(fig8(g=0.1)), []))


def test_qubit_steady_rejects_unknown_method():
    with pytest.raises(ValueError):
        qubit_steady(fig8(), "exact")
