"""Exact benchmark: unitary Gaussian dynamics of the two oscillators and two
finite, uniformly discretized Ohmic baths in the rotating frame.

Mode layout of the compound (N = 2(n + 2) modes)::

    [ bath_h k=0..n | system h | system c | bath_c k=0..n ]

All compound covariances use unit quadratures, x = (a + a^dag)/sqrt(2) and
p = i(a^dag - a)/sqrt(2), i.e. frequency metadata 1 for every mode. This keeps
the zero-frequency bath mode well defined. Reduced system states are rescaled
to the oscillator frequencies on the way out.
"""
from __future__ import annotations

import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .gaussian import CovarianceMatrix, cross_coherence, mode_occupation, reduce_to_modes, symplectic_form
from .local_me import local_report
from .model import EngineParams, bose_einstein
from .report import SteadyReport, efficiency

DEFAULT_N = 400
DEFAULT_OMEGA_CUT = 3.0
DEFAULT_HORIZON_FACTOR = 20.0
DEFAULT_WINDOW_FRACTION = 0.2
DEFAULT_SAMPLES = 50
RECURRENCE_MARGIN = 0.9
MAX_MODES = 2000


class RecurrenceWarning(UserWarning):
    """Simulation horizon reaches the recurrence time of the finite baths."""


@dataclass(frozen=True)
class BathDiscretization:
    n: int
    omega_cut: float
    kappa_ref: float
    omega_ref: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.omega_cut <= 0 or self.omega_ref <= 0 or self.kappa_ref < 0:
            raise ValueError("invalid bath parameters")

    @property
    def slope(self) -> float:
        """Ohmic constant eta in rho(w) = eta w, fixed by kappa_ref = 2 pi eta omega_ref."""
        return self.kappa_ref / (2 * math.pi * self.omega_ref)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.n + 1) * (self.omega_cut / self.n)

    @property
    def couplings(self) -> np.ndarray:
        k = np.arange(self.n + 1)
        return np.sqrt(self.slope * k) * (self.omega_cut / self.n)

    @property
    def recurrence_time(self) -> float:
        """Inverse level spacing 2 pi n / omega_cut."""
        return 2 * math.pi * self.n / self.omega_cut


def discretize_bath(kappa_ref: float, omega_ref: float, n: int, omega_cut: float) -> BathDiscretization:
    return BathDiscretization(int(n), float(omega_cut), float(kappa_ref), float(omega_ref))


_PROPAGATORS: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
_CACHE_SIZE = 4


class CompoundModel:
    """Quadratic rotating-frame Hamiltonian H = sum_ij h_ij a_i^dag a_j of
    system plus baths, and its quadrature generator A = J M with
    M = diag(h, h)."""

    def __init__(self, params: EngineParams, bath_h: BathDiscretization,
                 bath_c: BathDiscretization, max_modes: int = MAX_MODES):
        self.params = params
        self.bath_h = bath_h
        self.bath_c = bath_c
        nh, nc = bath_h.n + 1, bath_c.n + 1
        self.n_modes = nh + nc + 2
        if self.n_modes > max_modes:
            raise ValueError(f"{self.n_modes} modes exceeds the cap of {max_modes}")
        self.idx_bath_h = np.arange(nh)
        self.idx_h = nh
        self.idx_c = nh + 1
        self.idx_bath_c = np.arange(nh + 2, nh + 2 + nc)

        p = params
        h = np.zeros((self.n_modes, self.n_modes))
        h[self.idx_h, self.idx_c] = h[self.idx_c, self.idx_h] = p.g
        for idx, bath, omega, site in ((self.idx_bath_h, bath_h, p.omega_h, self.idx_h),
                                       (self.idx_bath_c, bath_c, p.omega_c, self.idx_c)):
            h[idx, idx] = bath.frequencies - omega
            h[idx, site] = h[site, idx] = bath.couplings
        self.hopping = h

        lab = np.empty(self.n_modes)
        lab[self.idx_bath_h] = bath_h.frequencies
        lab[self.idx_bath_c] = bath_c.frequencies
        lab[self.idx_h], lab[self.idx_c] = p.omega_h, p.omega_c
        self.lab_frequencies = lab

    @property
    def key(self) -> tuple:
        p = self.params
        return (p.omega_c, p.omega_h, p.g, p.kappa_c, p.kappa_h,
                self.bath_h, self.bath_c)

    @property
    def hamiltonian_matrix(self) -> np.ndarray:
        z = np.zeros_like(self.hopping)
        return np.block([[self.hopping, z], [z, self.hopping]])

    @property
    def generator(self) -> np.ndarray:
        return symplectic_form(self.n_modes) @ self.hamiltonian_matrix

    def bath_indices(self, bath: str) -> np.ndarray:
        if bath == "h":
            return self.idx_bath_h
        if bath == "c":
            return self.idx_bath_c
        raise ValueError(f"bath must be 'c' or 'h', got {bath!r}")

    def system_index(self, bath: str) -> int:
        return self.idx_h if bath == "h" else self.idx_c

    def bath(self, bath: str) -> BathDiscretization:
        return self.bath_h if bath == "h" else self.bath_c

    def propagator(self, t: float) -> np.ndarray:
        """S(t) = exp(A t), cached across models with the same dynamics."""
        key = self.key + (float(t),)
        if key in _PROPAGATORS:
            _PROPAGATORS.move_to_end(key)
            return _PROPAGATORS[key]
        s = expm(self.generator * t) if t != 0 else np.eye(2 * self.n_modes)
        if not np.all(np.isfinite(s)):
            raise FloatingPointError("matrix exponential did not converge")
        s.flags.writeable = False
        _PROPAGATORS[key] = s
        while len(_PROPAGATORS) > _CACHE_SIZE:
            _PROPAGATORS.popitem(last=False)
        return s

    def system_state(self, cov: CovarianceMatrix) -> CovarianceMatrix:
        """Reduced (h, c) state with quadratures scaled to the oscillator frequencies."""
        red = reduce_to_modes(cov, [self.idx_h, self.idx_c])
        return red.rescaled((self.params.omega_h, self.params.omega_c))


def assemble_dynamics(p: EngineParams, baths=None, max_modes: int = MAX_MODES) -> CompoundModel:
    if baths is None:
        baths = (discretize_bath(p.kappa_h, p.omega_h, DEFAULT_N, DEFAULT_OMEGA_CUT),
                 discretize_bath(p.kappa_c, p.omega_c, DEFAULT_N, DEFAULT_OMEGA_CUT))
    bath_h, bath_c = baths
    return CompoundModel(p, bath_h, bath_c, max_modes=max_modes)


def make_baths(p: EngineParams, n: int = DEFAULT_N, omega_cut: float = DEFAULT_OMEGA_CUT):
    """(hot, cold) discretizations whose Ohmic laws match kappa at each oscillator."""
    return (discretize_bath(p.kappa_h, p.omega_h, n, omega_cut),
            discretize_bath(p.kappa_c, p.omega_c, n, omega_cut))


def initial_occupations(model: CompoundModel) -> np.ndarray:
    """Lab-frame thermal occupations of every compound mode.

    The k = 0 bath mode sits at zero frequency with zero coupling; it is kept
    in the layout but left empty, since n_B diverges there and the mode never
    interacts.
    """
    p = model.params
    occ = np.zeros(model.n_modes)
    for bath, kT in (("h", p.kT_h), ("c", p.kT_c)):
        idx = model.bath_indices(bath)
        w = model.bath(bath).frequencies
        occ[idx[1:]] = bose_einstein(w[1:], kT)
    occ[model.idx_h] = bose_einstein(p.omega_h, p.kT_h)
    occ[model.idx_c] = bose_einstein(p.omega_c, p.kT_c)
    return occ


def initial_compound_state(model: CompoundModel) -> CovarianceMatrix:
    occ = initial_occupations(model)
    diag = np.concatenate([occ + 0.5, occ + 0.5])
    return CovarianceMatrix(np.diag(diag), (1.0,) * model.n_modes)


def evolve(model: CompoundModel, cov0: CovarianceMatrix, t: float) -> CovarianceMatrix:
    if t < 0:
        raise ValueError("t must be >= 0")
    s = model.propagator(t)
    return CovarianceMatrix(s @ cov0.data @ s.T, cov0.frequencies)


def _occupations(model: CompoundModel, c: np.ndarray, idx) -> np.ndarray:
    m = model.n_modes
    return 0.5 * (c[idx, idx] + c[idx + m, idx + m] - 1.0)


def _occupation_rates(model: CompoundModel, c: np.ndarray, idx) -> np.ndarray:
    """d<a^dag a>/dt for the modes in idx, from dC/dt = AC + CA^T."""
    a = model.generator
    m = model.n_modes
    rows = np.concatenate([idx, idx + m])
    diag = np.einsum("ij,ji->i", a[rows], c[:, rows])  # (AC)_ii
    return diag[: len(idx)] + diag[len(idx):]


def bath_energy_and_current(model: CompoundModel, cov: CovarianceMatrix, bath: str):
    """Lab-frame bath energy and the heat current J = -dE_bath/dt it releases."""
    idx = model.bath_indices(bath)
    w = model.bath(bath).frequencies
    c = cov.data
    energy = float(w @ _occupations(model, c, idx))
    current = -float(w @ _occupation_rates(model, c, idx))
    return energy, current


def energy_rates(model: CompoundModel, cov: CovarianceMatrix) -> dict:
    """Rates of change of each piece of the rotating-frame Hamiltonian.

    Keys: ``system``, ``bath_h``, ``bath_c``, ``coupling_h``, ``coupling_c``.
    The values sum to zero for closed dynamics.
    """
    h = model.hopping
    a_c = model.generator @ cov.data
    m = model.n_modes
    sys_idx = np.array([model.idx_h, model.idx_c])

    def rate(mask):
        piece = np.where(mask, h, 0.0)
        big = np.block([[piece, np.zeros_like(piece)], [np.zeros_like(piece), piece]])
        return float(np.sum(big * a_c.T))  # Tr(M_piece A C)

    out = {}
    sys_mask = np.zeros((m, m), bool)
    sys_mask[np.ix_(sys_idx, sys_idx)] = True
    out["system"] = rate(sys_mask)
    for bath in ("h", "c"):
        idx = model.bath_indices(bath)
        site = model.system_index(bath)
        own = np.zeros((m, m), bool)
        own[idx, idx] = True
        out[f"bath_{bath}"] = rate(own)
        cpl = np.zeros((m, m), bool)
        cpl[idx, site] = cpl[site, idx] = True
        out[f"coupling_{bath}"] = rate(cpl)
    return out


def total_energy(model: CompoundModel, cov: CovarianceMatrix) -> float:
    """Rotating-frame <H>, normal ordered."""
    return 0.5 * float(np.sum(model.hamiltonian_matrix * cov.data)) - 0.5 * float(np.trace(model.hopping))


def exact_power(p: EngineParams, reduced: CovarianceMatrix) -> float:
    """Work output rate from the coherence <a_h^dag a_c> of an (h, c) state."""
    if reduced.n_modes != 2:
        raise ValueError("exact_power takes the two-mode system state")
    return -2 * p.g * p.drive * cross_coherence(reduced, 0, 1).imag


@dataclass(frozen=True)
class WindowSeries:
    """Observables sampled over the averaging window."""

    times: np.ndarray
    J_h: np.ndarray
    J_c: np.ndarray
    system: np.ndarray  # unit-quadrature (h, c) covariances, shape (len(times), 4, 4)


def sample_window(model: CompoundModel, t_start: float, t_end: float,
                  samples: int = DEFAULT_SAMPLES) -> WindowSeries:
    """Evolve the product thermal initial state and sample the reduced system
    state and both bath heat currents on a uniform grid in [t_start, t_end].

    Only a handful of rows of the propagator are needed: the four system
    quadratures, and for each bath the two vectors u with u_k = omega_k gamma_k
    whose overlap with the system rows of C gives the bath energy rate
    dE/dt = C[p_a, :] . u_x - C[x_a, :] . u_p. Those rows are advanced by
    right-multiplication with exp(A dt).
    """
    if samples < 2 or t_end <= t_start or t_start < 0:
        raise ValueError("need samples >= 2 and 0 <= t_start < t_end")
    m = model.n_modes
    c0 = np.concatenate([initial_occupations(model) + 0.5] * 2)

    sys_rows = [model.idx_h, model.idx_c, model.idx_h + m, model.idx_c + m]
    sel = np.zeros((8, 2 * m))
    sel[range(4), sys_rows] = 1.0
    for j, bath in enumerate(("h", "c")):
        idx = model.bath_indices(bath)
        b = model.bath(bath)
        u = b.frequencies * b.couplings
        sel[4 + 2 * j, idx] = u          # x-quadrature weights
        sel[5 + 2 * j, idx + m] = u      # p-quadrature weights

    dt = (t_end - t_start) / (samples - 1)
    rows = sel @ model.propagator(t_start)
    step = model.propagator(dt)
    times = t_start + dt * np.arange(samples)
    jh, jc, red = np.empty(samples), np.empty(samples), np.empty((samples, 4, 4))
    for i in range(samples):
        if i:
            rows = rows @ step
        weighted = rows * c0
        red[i] = weighted[:4] @ rows[:4].T
        corr = weighted[:4] @ rows[4:].T  # C[sys, :] . u for each u
        # system row order (x_h, x_c, p_h, p_c); u order (x_h, p_h, x_c, p_c)
        de_h = corr[2, 0] - corr[0, 1]
        de_c = corr[3, 2] - corr[1, 3]
        jh[i], jc[i] = -de_h, -de_c
    return WindowSeries(times, jh, jc, red)


def exact_steady_report(p: EngineParams, n: int = DEFAULT_N, omega_cut: float = DEFAULT_OMEGA_CUT,
                        horizon_factor: float = DEFAULT_HORIZON_FACTOR,
                        window_fraction: float = DEFAULT_WINDOW_FRACTION,
                        samples: int = DEFAULT_SAMPLES,
                        clip_to_recurrence: bool = False) -> SteadyReport:
    """Steady observables from the finite-bath evolution.

    Runs to t = horizon_factor / max(kappa) and averages currents and the
    reduced state over the last ``window_fraction`` of the horizon. With
    ``clip_to_recurrence`` the horizon is shortened to a fraction
    RECURRENCE_MARGIN of the bath recurrence time when it would exceed it;
    otherwise such a horizon only triggers a RecurrenceWarning.
    """
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    model = assemble_dynamics(p, make_baths(p, n, omega_cut))
    horizon = horizon_factor / max(p.kappa_h, p.kappa_c)
    t_rec = min(model.bath_h.recurrence_time, model.bath_c.recurrence_time)
    if clip_to_recurrence:
        horizon = min(horizon, RECURRENCE_MARGIN * t_rec)
    elif horizon >= t_rec:
        warnings.warn(f"horizon {horizon:g} exceeds bath recurrence time {t_rec:g}; "
                      "increase n", RecurrenceWarning, stacklevel=2)
    series = sample_window(model, (1 - window_fraction) * horizon, horizon, samples)
    red_unit = CovarianceMatrix(series.system.mean(axis=0), (1.0, 1.0))
    red = red_unit.rescaled((p.omega_h, p.omega_c))
    jh, jc = float(series.J_h.mean()), float(series.J_c.mean())
    power = exact_power(p, red)
    return SteadyReport(
        method="exact", params=p,
        n_h=mode_occupation(red, 0), n_c=mode_occupation(red, 1),
        s=cross_coherence(red, 0, 1),
        J_h=jh, J_c=jc, P=power, eta=efficiency(power, jh), covariance=red,
        extra={"n": n, "omega_cut": omega_cut, "horizon": horizon},
    )


@dataclass(frozen=True)
class ConvergencePoint:
    n: int
    omega_cut: float
    J_h: float
    J_h_local: float

    @property
    def deviation(self) -> float:
        return abs(self.J_h - self.J_h_local) / abs(self.J_h_local)


def convergence_study(p: EngineParams, n_list=(100, 200, 400),
                      omega_cut_list=(1.0, 1.5, 2.0, 3.0, 4.0, 5.0),
                      n_fixed: int = DEFAULT_N, omega_cut_fixed: float = DEFAULT_OMEGA_CUT,
                      **kwargs) -> list:
    """Exact hot current against bath size (at ``omega_cut_fixed``) and
    against cutoff (at ``n_fixed``), with the local closed form as reference.

    Small baths recur before 20/kappa, so every point runs with the horizon
    clipped below the recurrence time.
    """
    kwargs.setdefault("clip_to_recurrence", True)
    ref = local_report(p).J_h
    pts = []
    for n in n_list:
        r = exact_steady_report(p, n=n, omega_cut=omega_cut_fixed, **kwargs)
        pts.append(ConvergencePoint(n, omega_cut_fixed, r.J_h, ref))
    for wc in omega_cut_list:
        r = exact_steady_report(p, n=n_fixed, omega_cut=wc, **kwargs)
        pts.append(ConvergencePoint(n_fixed, wc, r.J_h, ref))
    return pts
