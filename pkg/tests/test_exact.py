import functools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import thermal_bias
from oracles import mean_force_occupation, two_mode_beat
from qengine.exact import (BathDiscretization, RecurrenceWarning, assemble_dynamics,
                           bath_energy_and_current, convergence_study, discretize_bath,
                           energy_rates, evolve, exact_power, exact_steady_report,
                           initial_compound_state, initial_occupations, make_baths,
                           sample_window, total_energy)
from qengine.gaussian import (CovarianceMatrix, mode_occupation, symplectic_form,
                              thermal_covariance, two_mode_fidelity)
from qengine.global_me import global_report
from qengine.local_me import local_report
from qengine.model import bose_einstein


@functools.lru_cache(maxsize=None)
def exact(p, **kw):
    return exact_steady_report(p, **kw)


def decoupled(p, n=20):
    """Model whose baths have zero couplings."""
    return assemble_dynamics(p, (discretize_bath(0.0, p.omega_h, n, 3.0),
                                 discretize_bath(0.0, p.omega_c, n, 3.0)))


def test_discretization_examples():
    b = discretize_bath(0.05, 1.0, 400, 3.0)
    assert b.frequencies[200] == pytest.approx(1.5, abs=1e-15)
    assert b.couplings[0] == 0
    assert b.couplings[400] == pytest.approx(0.0133809, abs=1e-6)
    assert b.slope == pytest.approx(0.0079577, abs=1e-7)
    assert b.recurrence_time == pytest.approx(2 * np.pi * 400 / 3)
    with pytest.raises(ValueError):
        discretize_bath(0.05, 1.0, 0, 3.0)
    with pytest.raises(ValueError):
        discretize_bath(0.05, 1.0, 10, -1.0)


@given(kref=st.floats(1e-4, 0.5), wref=st.floats(0.2, 4.0), n=st.integers(1, 500), wc=st.floats(0.5, 10))
def test_discretized_ohmic_identity(kref, wref, n, wc):
    b = discretize_bath(kref, wref, n, wc)
    rho = b.slope * b.frequencies
    assert np.allclose(b.couplings ** 2, rho * wc / n, rtol=1e-12, atol=0)


def test_layout_and_generator_structure(fig3_params):
    m = assemble_dynamics(fig3_params, make_baths(fig3_params, 10, 3.0))
    assert m.n_modes == 24
    assert list(m.idx_bath_h) == list(range(11))
    assert (m.idx_h, m.idx_c) == (11, 12)
    assert list(m.idx_bath_c) == list(range(13, 24))
    mm = m.hamiltonian_matrix
    assert np.array_equal(mm, mm.T)
    assert np.allclose(m.generator, symplectic_form(24) @ mm)
    # system modes carry no free term in the rotating frame
    assert m.hopping[m.idx_h, m.idx_h] == m.hopping[m.idx_c, m.idx_c] == 0
    assert m.hopping[m.idx_h, m.idx_c] == 0.1


def test_resonant_bath_mode_has_no_free_term(fig3_params):
    # omega_k = k * 3 / 30 hits omega = 1 at k = 10
    m = assemble_dynamics(fig3_params, make_baths(fig3_params, 30, 3.0))
    k = 10
    assert m.hopping[m.idx_bath_h[k], m.idx_bath_h[k]] == 0
    assert m.hopping[m.idx_bath_c[k], m.idx_bath_c[k]] == 0


def test_mode_cap(fig3_params):
    with pytest.raises(ValueError):
        assemble_dynamics(fig3_params, make_baths(fig3_params, 400, 3.0), max_modes=500)


def test_decoupled_generator_is_block_diagonal():
    p = thermal_bias(g=0.0)
    m = decoupled(p)
    a = m.generator
    n = m.n_modes
    sys = [m.idx_h, m.idx_c, m.idx_h + n, m.idx_c + n]
    others = [i for i in range(2 * n) if i not in sys]
    assert not np.any(a[np.ix_(sys, others)])
    assert not np.any(a[np.ix_(others, sys)])
    assert not np.any(a[np.ix_(sys, sys)])


def test_initial_state(fig3_params):
    m = assemble_dynamics(fig3_params, make_baths(fig3_params, 400, 3.0))
    c0 = initial_compound_state(m)
    assert c0.is_physical(tol=1e-10)
    occ = initial_occupations(m)
    assert occ[m.idx_bath_h[0]] == occ[m.idx_bath_c[0]] == 0
    w = m.bath_h.frequencies
    assert occ[m.idx_bath_h[37]] == pytest.approx(bose_einstein(w[37], 5.0), rel=1e-14)
    sys = m.system_state(c0)
    assert np.allclose(sys.data, thermal_covariance([1.0, 1.0], [fig3_params.nB_h, fig3_params.nB_c]).data)


def test_initial_state_zero_temperature_is_vacuum():
    p = thermal_bias(kT_c=1e-4, kT_h=1e-4)
    m = assemble_dynamics(p, make_baths(p, 20, 3.0))
    assert np.array_equal(initial_compound_state(m).data, 0.5 * np.eye(2 * m.n_modes))


def test_evolve_identity_and_errors(fig3_params):
    m = assemble_dynamics(fig3_params, make_baths(fig3_params, 20, 3.0))
    c0 = initial_compound_state(m)
    assert evolve(m, c0, 0.0) == c0
    with pytest.raises(ValueError):
        evolve(m, c0, -1.0)


@pytest.mark.parametrize("t", [3.0, 10.0, 31.4])
def test_decoupled_beat_oracle(t):
    p = thermal_bias(g=0.1)
    m = decoupled(p)
    c = evolve(m, initial_compound_state(m), t)
    nh, nc = two_mode_beat(p.nB_h, p.nB_c, 0.1, t)
    assert mode_occupation(c, m.idx_h) == pytest.approx(nh, abs=1e-10)
    assert mode_occupation(c, m.idx_c) == pytest.approx(nc, abs=1e-10)
    for bath in ("h", "c"):
        assert bath_energy_and_current(m, c, bath)[1] == 0


def test_full_population_exchange():
    p = thermal_bias(g=0.1, kT_c=1e-4)
    m = decoupled(p)
    c = evolve(m, initial_compound_state(m), np.pi / 0.2)
    assert mode_occupation(c, m.idx_c) == pytest.approx(p.nB_h, abs=1e-10)
    assert mode_occupation(c, m.idx_h) == pytest.approx(0.0, abs=1e-10)


def test_symplectic_propagator(fig3_params):
    m = assemble_dynamics(fig3_params, make_baths(fig3_params, 100, 3.0))
    s = m.propagator(400.0)
    j = symplectic_form(m.n_modes)
    assert np.max(np.abs(s @ j @ s.T - j)) < 1e-9


def test_energy_conservation_and_rate_bookkeeping(fig4_params):
    m = assemble_dynamics(fig4_params, make_baths(fig4_params, 100, 3.0))
    c0 = initial_compound_state(m)
    e0 = total_energy(m, c0)
    for t in (50.0, 200.0, 400.0):
        c = evolve(m, c0, t)
        assert abs(total_energy(m, c) - e0) < 1e-8 * abs(e0)
        rates = energy_rates(m, c)
        scale = max(abs(v) for v in rates.values())
        assert abs(sum(rates.values())) < 1e-8 * scale
        assert c.is_physical(tol=1e-9)


def test_bath_current_equals_minus_energy_derivative(fig3_params):
    m = assemble_dynamics(fig3_params, make_baths(fig3_params, 60, 3.0))
    c0 = initial_compound_state(m)
    t, h = 40.0, 1e-3
    e_plus = bath_energy_and_current(m, evolve(m, c0, t + h), "h")[0]
    e_minus = bath_energy_and_current(m, evolve(m, c0, t - h), "h")[0]
    current = bath_energy_and_current(m, evolve(m, c0, t), "h")[1]
    assert current == pytest.approx(-(e_plus - e_minus) / (2 * h), rel=1e-5)


def test_current_vanishes_without_correlations(fig3_params):
    m = assemble_dynamics(fig3_params, make_baths(fig3_params, 60, 3.0))
    c0 = initial_compound_state(m)
    assert bath_energy_and_current(m, c0, "h")[1] == 0
    assert bath_energy_and_current(m, c0, "c")[1] == 0
    with pytest.raises(ValueError):
        bath_energy_and_current(m, c0, "x")


def test_window_sampling_matches_full_evolution(fig4_params):
    m = assemble_dynamics(fig4_params, make_baths(fig4_params, 60, 3.0))
    c0 = initial_compound_state(m)
    series = sample_window(m, 20.0, 60.0, samples=5)
    for i, t in enumerate(series.times):
        c = evolve(m, c0, float(t))
        assert series.J_h[i] == pytest.approx(bath_energy_and_current(m, c, "h")[1], rel=1e-9, abs=1e-13)
        assert series.J_c[i] == pytest.approx(bath_energy_and_current(m, c, "c")[1], rel=1e-9, abs=1e-13)
        red = c.data[np.ix_([m.idx_h, m.idx_c, m.idx_h + m.n_modes, m.idx_c + m.n_modes],
                            [m.idx_h, m.idx_c, m.idx_h + m.n_modes, m.idx_c + m.n_modes])]
        assert np.allclose(series.system[i], red, atol=1e-10)
    with pytest.raises(ValueError):
        sample_window(m, 10.0, 5.0)


def test_sampled_reduced_states_physical(fig3_params):
    m = assemble_dynamics(fig3_params, make_baths(fig3_params, 400, 3.0))
    series = sample_window(m, 320.0, 400.0, samples=50)
    for c in series.system:
        assert CovarianceMatrix(c, (1.0, 1.0)).is_physical(tol=1e-9)


def test_exact_power_examples(fig3_params):
    cov = local_report(fig3_params).covariance
    assert exact_power(fig3_params, cov) == 0.0
    p4 = fig3_params.replace(omega_h=2.0)
    assert exact_power(p4, local_report(p4).covariance) == pytest.approx(local_report(p4).P, rel=1e-9)
    with pytest.raises(ValueError):
        exact_power(fig3_params, thermal_covariance([1.0], [0.1]))


def test_recurrence_warning():
    p = thermal_bias()
    with pytest.warns(RecurrenceWarning):
        exact_steady_report(p, n=50, omega_cut=3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RecurrenceWarning)
        r = exact_steady_report(p, n=50, omega_cut=3.0, clip_to_recurrence=True)
    assert r.extra["horizon"] == pytest.approx(0.9 * 2 * np.pi * 50 / 3)


def test_zero_coupling_exact():
    p = thermal_bias(g=0.0)
    r = exact(p)
    assert abs(r.J_h) < 1e-3 and abs(r.J_c) < 1e-3 and r.P == 0
    # each uncoupled oscillator relaxes to its mean-force occupation, a few
    # percent above n_B at this bath coupling strength
    for bath, occ, omega, kT in (("h", r.n_h, p.omega_h, p.kT_h), ("c", r.n_c, p.omega_c, p.kT_c)):
        b = make_baths(p)[0 if bath == "h" else 1]
        oracle = mean_force_occupation(omega, b.frequencies[1:], b.couplings[1:], kT)
        assert occ == pytest.approx(oracle, rel=2e-3)


def test_fig3_current_within_five_percent(fig3_params):
    r = exact(fig3_params)
    assert r.method == "exact"
    assert r.extra == {"n": 400, "omega_cut": 3.0, "horizon": 400.0}
    assert abs(r.J_h - 0.102591) / 0.102591 < 0.05
    assert two_mode_fidelity(local_report(fig3_params).covariance, r.covariance) >= 0.99


def test_fig4_power_and_first_law(fig4_params):
    r = exact(fig4_params)
    assert abs(r.P - 0.044158) / 0.044158 < 0.1
    assert abs(r.P - r.J_c - r.J_h) / abs(r.P) < 0.05


def test_equilibrium_global_beats_local():
    p = thermal_bias(kT_h=0.5, g=0.25)
    r = exact(p)
    fg = two_mode_fidelity(global_report(p).covariance, r.covariance)
    fl = two_mode_fidelity(local_report(p).covariance, r.covariance)
    assert fg > fl


def test_convergence_study_structure(fig3_params):
    pts = convergence_study(fig3_params, n_list=(40, 60), omega_cut_list=(2.0,), n_fixed=60)
    assert [(q.n, q.omega_cut) for q in pts] == [(40, 3.0), (60, 3.0), (60, 2.0)]
    ref = local_report(fig3_params).J_h
    assert all(q.J_h_local == ref for q in pts)
    assert pts[0].deviation == abs(pts[0].J_h - ref) / ref


@settings(max_examples=10, deadline=None)
@given(g=st.floats(0.0, 0.5), kT_h=st.floats(0.2, 5.0), oh=st.floats(1.0, 2.0))
def test_small_bath_rate_bookkeeping_property(g, kT_h, oh):
    p = thermal_bias(g=g, kT_h=kT_h, omega_h=oh)
    m = assemble_dynamics(p, make_baths(p, 30, 3.0))
    c = evolve(m, initial_compound_state(m), 25.0)
    rates = energy_rates(m, c)
    scale = max(1e-12, max(abs(v) for v in rates.values()))
    assert abs(sum(rates.values())) < 1e-8 * scale


def test_bath_discretization_is_value_type():
    a = BathDiscretization(10, 3.0, 0.05, 1.0)
    assert a == discretize_bath(0.05, 1.0, 10, 3.0)
    assert hash(a) == hash(discretize_bath(0.05, 1.0, 10, 3.0))
