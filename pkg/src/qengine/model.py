"""Machine parameters, thermal occupations, Ohmic spectral densities and
validity diagnostics for the driven two-oscillator engine.

Energies are in units of the cold oscillator frequency, hbar = k_B = 1.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Mapping

import numpy as np

__all__ = [
    "EngineParams",
    "SpectralDensity",
    "ValidityReport",
    "bose_einstein",
    "ohmic_kappa",
    "validity_ratios",
    "lamb_shift",
    "load_params",
]


def toml_loads(text: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)


def bose_einstein(omega, kT):
    """Bose-Einstein occupation ``1 / (exp(omega/kT) - 1)``.

    Works elementwise on arrays. Written as ``e^{-x} / (1 - e^{-x})`` so that
    the low-temperature limit underflows to zero instead of overflowing.
    """
    omega = np.asarray(omega, dtype=float)
    kT = np.asarray(kT, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("bose_einstein requires omega > 0")
    if np.any(kT <= 0):
        raise ValueError("bose_einstein requires kT > 0")
    x = omega / kT
    out = np.exp(-x) / -np.expm1(-x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EngineParams:
    """Parameters of the two-oscillator engine.

    ``kappa_c`` and ``kappa_h`` are energy damping rates evaluated at the
    respective oscillator frequency.
    """

    omega_c: float
    omega_h: float
    g: float
    kappa_c: float
    kappa_h: float
    kT_c: float
    kT_h: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{f.name} must be a finite real, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        for name in ("omega_c", "omega_h", "kappa_c", "kappa_h", "kT_c", "kT_h"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.g < 0:
            raise ValueError("g must be >= 0")
        if self.omega_h < self.omega_c:
            raise ValueError("omega_h must be >= omega_c (drive frequency E >= 0)")

    @property
    def drive(self) -> float:
        """Drive frequency E = omega_h - omega_c."""
        return self.omega_h - self.omega_c

    @property
    def nB_h(self) -> float:
        return bose_einstein(self.omega_h, self.kT_h)

    @property
    def nB_c(self) -> float:
        return bose_einstein(self.omega_c, self.kT_c)

    @property
    def carnot(self) -> float:
        return 1.0 - self.kT_c / self.kT_h

    def replace(self, **changes) -> "EngineParams":
        return EngineParams(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "EngineParams":
        names = [f.name for f in fields(cls)]
        missing = [k for k in names if k not in data]
        if missing:
            raise KeyError(f"missing engine parameters: {', '.join(missing)}")
        return cls(**{k: data[k] for k in names})

    def spectral_densities(self, omega_cut: float = math.inf):
        """Ohmic densities (cold, hot) referenced at each oscillator frequency."""
        return (
            SpectralDensity(self.kappa_c, self.omega_c, omega_cut),
            SpectralDensity(self.kappa_h, self.omega_h, omega_cut),
        )


def load_params(path) -> EngineParams:
    """Read :class:`EngineParams` from a TOML or JSON file.

    The keys may sit at top level or inside a ``[params]`` table.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        data = toml_loads(text)
    if "params" in data and isinstance(data["params"], Mapping):
        data = data["params"]
    return EngineParams.from_mapping(data)


@dataclass(frozen=True)
class SpectralDensity:
    """Ohmic energy-damping law with a hard cutoff.

    kappa(w) = kappa_ref * w / omega_ref for 0 <= w <= omega_cut, else 0.
    The spectral density itself is rho(w) = kappa(w) / (2 pi).
    """

    kappa_ref: float
    omega_ref: float
    omega_cut: float = math.inf
    kind: str = "ohmic"

    def __post_init__(self):
        if self.kind != "ohmic":
            raise ValueError(f"unsupported spectral density kind {self.kind!r}")
        if self.kappa_ref < 0:
            raise ValueError("kappa_ref must be >= 0")
        if self.omega_ref <= 0 or self.omega_cut <= 0:
            raise ValueError("omega_ref and omega_cut must be > 0")

    @property
    def slope(self) -> float:
        """rho(w) / w, the Ohmic coupling density constant."""
        return self.kappa_ref / (2 * math.pi * self.omega_ref)


def ohmic_kappa(sd: SpectralDensity, omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("ohmic_kappa requires omega >= 0")
    out = np.where(omega <= sd.omega_cut, sd.kappa_ref * omega / sd.omega_ref, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ValidityReport:
    """Dimensionless ratios that should all be small for the local and
    Markovian treatments to hold.

    Dictionaries are keyed by ``(bath, sign)`` with bath in ``{"c", "h"}`` and
    sign in ``{+1, -1}``.
    """

    delta_n: dict
    n_scale: dict
    delta_kappa: dict
    markov: dict
    secular: dict

    @property
    def local_ratios(self) -> dict:
        out = {}
        for key, dn in self.delta_n.items():
            out[("n",) + key] = dn / self.n_scale[key[0]]
            out[("kappa",) + key] = self.delta_kappa[key]
        return out

    def max_local_ratio(self) -> float:
        return max(self.local_ratios.values())


def validity_ratios(p: EngineParams, sd_c: SpectralDensity = None,
                    sd_h: SpectralDensity = None) -> ValidityReport:
    if sd_c is None or sd_h is None:
        sd_c, sd_h = p.spectral_densities()
    delta_n, n_scale, delta_kappa, markov, secular = {}, {}, {}, {}, {}
    for bath, omega, kT, sd in (("c", p.omega_c, p.kT_c, sd_c), ("h", p.omega_h, p.kT_h, sd_h)):
        n0 = bose_einstein(omega, kT)
        k0 = ohmic_kappa(sd, omega)
        n_scale[bath] = max(1.0, n0)
        for sign in (+1, -1):
            w = omega + sign * p.g
            if w <= 0:
                delta_n[(bath, sign)] = math.inf
                delta_kappa[(bath, sign)] = math.inf
                continue
            delta_n[(bath, sign)] = abs(bose_einstein(w, kT) - n0)
            delta_kappa[(bath, sign)] = abs(ohmic_kappa(sd, w) - k0) / k0
        markov[bath] = k0 / omega
        secular[bath] = k0 / p.g if p.g > 0 else math.inf
    return ValidityReport(delta_n, n_scale, delta_kappa, markov, secular)


def lamb_shift(sd: SpectralDensity, omega0: float) -> float:
    """Principal-value frequency shift P int_0^wc rho(w) / (omega0 - w) dw.

    Diagnostic only; the master equations here never include it.
    """
    if omega0 <= 0:
        raise ValueError("omega0 must be > 0")
    wc = sd.omega_cut
    if not math.isfinite(wc):
        raise ValueError("Lamb shift of an Ohmic density diverges without a finite cutoff")
    if omega0 == wc:
        raise ValueError("omega0 coincides with the cutoff (logarithmic singularity)")
    return sd.slope * (-wc + omega0 * math.log(abs(omega0 / (omega0 - wc))))
