"""Steady-state summary shared by the local, global and exact descriptions."""
from __future__ import annotations

from dataclasses import dataclass, field

from .gaussian import CovarianceMatrix
from .model import EngineParams

REVERSIBLE = "reversible"

BASE_COLUMNS = (
    "method", "omega_c", "omega_h", "g", "kappa_c", "kappa_h", "kT_c", "kT_h",
    "n_h", "n_c", "Re_s", "Im_s", "J_h", "J_c", "P", "eta",
)
CHANNEL_COLUMNS = ("J_h_plus", "J_h_minus", "eta_plus", "eta_minus")
EXACT_COLUMNS = ("n", "omega_cut", "horizon")


def efficiency(power: float, heat_hot: float):
    """P / J_h, or None at the reversible point J_h = 0."""
    if heat_hot == 0:
        return None
    return power / heat_hot


@dataclass(frozen=True)
class SteadyReport:
    """Steady-state observables of one description of the engine.

    ``s`` is the coherence <a_h^dag a_c> in the rotating frame and
    ``covariance`` the reduced two-mode state ordered (h, c).
    ``eta`` is None at the reversible point (J_h = 0).
    """

    method: str
    params: EngineParams
    n_h: float
    n_c: float
    s: complex
    J_h: float
    J_c: float
    P: float
    eta: float | None
    covariance: CovarianceMatrix
    extra: dict = field(default_factory=dict)

    @property
    def is_reversible(self) -> bool:
        return self.eta is None

    def first_law_residual(self) -> float:
        return self.P - self.J_c - self.J_h

    def row(self) -> dict:
        out = {"method": self.method}
        out.update(self.params.to_dict())
        out.update(
            n_h=self.n_h, n_c=self.n_c, Re_s=self.s.real, Im_s=self.s.imag,
            J_h=self.J_h, J_c=self.J_c, P=self.P,
            eta=REVERSIBLE if self.eta is None else self.eta,
        )
        for key in CHANNEL_COLUMNS + EXACT_COLUMNS:
            out[key] = self.extra.get(key, "")
        return out
