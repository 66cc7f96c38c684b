"""Global (secular) Lindblad description in terms of the eigenmodes
a_(+/-) = (a_h +/- a_c) / sqrt(2) of the coupled oscillators.

Each eigenmode sees both baths at the shifted transition frequencies
omega_alpha +/- g. Heat currents are resolved per bath and per eigenmode
channel from the dissipator split, never from system observables, which would
give zero power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import covariance_from_moments
from .model import EngineParams, SpectralDensity, bose_einstein, ohmic_kappa
from .report import SteadyReport, efficiency

SIGNS = (+1, -1)
_BATHS = ("h", "c")


@dataclass(frozen=True)
class EigenmodeRates:
    """Transition frequencies, damping rates and occupations keyed by
    ``(bath, sign)``."""

    params: EngineParams
    omega: dict
    kappa: dict
    nB: dict

    def gamma_up(self, sign: int) -> float:
        return sum(self.kappa[b, sign] * self.nB[b, sign] for b in _BATHS)

    def gamma_down(self, sign: int) -> float:
        return sum(self.kappa[b, sign] * (self.nB[b, sign] + 1) for b in _BATHS)

    def total_kappa(self, sign: int) -> float:
        return self.kappa["h", sign] + self.kappa["c", sign]


def eigenmode_rates(p: EngineParams, sd_c: SpectralDensity = None,
                    sd_h: SpectralDensity = None) -> EigenmodeRates:
    if sd_c is None or sd_h is None:
        sd_c, sd_h = p.spectral_densities()
    if p.g >= min(p.omega_c, p.omega_h):
        raise ValueError(
            f"g = {p.g} >= oscillator frequency: eigenmode frequency would be nonpositive")
    omega, kappa, nB = {}, {}, {}
    for bath, w0, kT, sd in (("h", p.omega_h, p.kT_h, sd_h), ("c", p.omega_c, p.kT_c, sd_c)):
        for sign in SIGNS:
            w = w0 + sign * p.g
            omega[bath, sign] = w
            kappa[bath, sign] = ohmic_kappa(sd, w)
            nB[bath, sign] = bose_einstein(w, kT)
    return EigenmodeRates(p, omega, kappa, nB)


@dataclass(frozen=True)
class GlobalState:
    n_plus: float
    n_minus: float
    c: complex = 0j

    def as_vector(self) -> np.ndarray:
        return np.array([self.n_plus, self.n_minus, self.c.real, self.c.imag])

    @classmethod
    def from_vector(cls, y) -> "GlobalState":
        return cls(float(y[0]), float(y[1]), complex(y[2], y[3]))

    def occupation(self, sign: int) -> float:
        return self.n_plus if sign > 0 else self.n_minus


def global_steady(rates: EigenmodeRates) -> GlobalState:
    occ = {}
    for sign in SIGNS:
        kh, kc = rates.kappa["h", sign], rates.kappa["c", sign]
        occ[sign] = (kh * rates.nB["h", sign] + kc * rates.nB["c", sign]) / (kh + kc)
    return GlobalState(occ[+1], occ[-1], 0j)


def global_rhs(rates: EigenmodeRates, st: GlobalState) -> GlobalState:
    dn = {
        sign: 0.5 * sum(rates.kappa[b, sign] * (rates.nB[b, sign] - st.occupation(sign))
                        for b in _BATHS)
        for sign in SIGNS
    }
    total = sum(rates.kappa.values())
    dc = (2j * rates.params.g - 0.25 * total) * st.c
    return GlobalState(dn[+1], dn[-1], dc)


def channel_currents(rates: EigenmodeRates, st: GlobalState, bath: str) -> dict:
    """Heat current from ``bath`` through each eigenmode channel.

    Uses J = -kT Tr[(L_{bath,sign} rho) ln rho_{bath,sign}], which for a
    Gaussian state reduces to omega_{bath,sign} times the rate at which that
    single dissipator changes the channel occupation. Valid for any state, not
    only the steady one.
    """
    if bath not in _BATHS:
        raise ValueError(f"bath must be 'c' or 'h', got {bath!r}")
    return {
        sign: rates.omega[bath, sign] * 0.5 * rates.kappa[bath, sign]
        * (rates.nB[bath, sign] - st.occupation(sign))
        for sign in SIGNS
    }


def global_heat_current(rates: EigenmodeRates, bath: str):
    """Steady-state heat current from ``bath``: (total, {sign: channel})."""
    if bath not in _BATHS:
        raise ValueError(f"bath must be 'c' or 'h', got {bath!r}")
    other = "c" if bath == "h" else "h"
    per = {}
    for sign in SIGNS:
        ka, kb = rates.kappa[bath, sign], rates.kappa[other, sign]
        per[sign] = (0.5 * rates.omega[bath, sign] * ka * kb / (ka + kb)
                     * (rates.nB[bath, sign] - rates.nB[other, sign]))
    return per[+1] + per[-1], per


@dataclass(frozen=True)
class GlobalThermo:
    P: float
    eta: float | None
    eta_plus: float
    eta_minus: float
    weight: float | None  # share of the hot current carried by the + channel
    J_h: float
    J_c: float
    J_h_channels: dict


def global_power_and_efficiency(rates: EigenmodeRates) -> GlobalThermo:
    jh, jh_ch = global_heat_current(rates, "h")
    jc, _ = global_heat_current(rates, "c")
    power = jc + jh
    eta_ch = {s: 1.0 - rates.omega["c", s] / rates.omega["h", s] for s in SIGNS}
    weight = jh_ch[+1] / jh if jh != 0 else None
    return GlobalThermo(power, efficiency(power, jh), eta_ch[+1], eta_ch[-1],
                        weight, jh, jc, jh_ch)


def global_state_in_local_modes(st: GlobalState, p: EngineParams):
    """Covariance of the (h, c) oscillators for an eigenmode state."""
    eig = np.array([[st.n_plus, st.c], [np.conj(st.c), st.n_minus]])
    # a_h = (a_+ + a_-)/sqrt2, a_c = (a_+ - a_-)/sqrt2
    u = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2)
    local = u @ eig @ u.T
    return covariance_from_moments(local, (p.omega_h, p.omega_c))


def global_report(p: EngineParams, omega_cut: float = math.inf) -> SteadyReport:
    rates = eigenmode_rates(p, *p.spectral_densities(omega_cut))
    st = global_steady(rates)
    th = global_power_and_efficiency(rates)
    cov = global_state_in_local_modes(st, p)
    return SteadyReport(
        method="global", params=p,
        n_h=0.5 * (st.n_plus + st.n_minus), n_c=0.5 * (st.n_plus + st.n_minus),
        s=complex(0.5 * (st.n_plus - st.n_minus), 0.0),
        J_h=th.J_h, J_c=th.J_c, P=th.P, eta=th.eta, covariance=cov,
        extra={
            "J_h_plus": th.J_h_channels[+1], "J_h_minus": th.J_h_channels[-1],
            "eta_plus": th.eta_plus, "eta_minus": th.eta_minus,
        },
    )
