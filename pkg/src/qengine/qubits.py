"""Two degenerate qubits coupled by a flip-flop interaction, each attached to
its own bosonic bath: local and global GKSL generators, steady states and
heat currents.

Product basis ``|c h>`` ordered ``|00>, |01>, |10>, |11>``; the first factor
is the cold qubit. Superoperators act on column-stacked density matrices,
``vec(A rho B) = (B^T kron A) vec(rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .model import bose_einstein

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|
I2 = np.eye(2)
A_COLD = np.kron(SIGMA_MINUS, I2)
A_HOT = np.kron(I2, SIGMA_MINUS)

_S = 1 / math.sqrt(2)
PHI_0 = np.array([1.0, 0.0, 0.0, 0.0])
PHI_PLUS = np.array([0.0, _S, _S, 0.0])    # energy omega + g
PHI_MINUS = np.array([0.0, _S, -_S, 0.0])  # energy omega - g
PHI_11 = np.array([0.0, 0.0, 0.0, 1.0])

STEADY_RESIDUAL = 1e-12


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian kernel is not one-dimensional."""


@dataclass(frozen=True)
class QubitMachineParams:
    """Degenerate gap ``omega`` and Ohmic slopes, kappa_alpha(e) = nu_alpha * e."""

    omega: float
    g: float
    nu_c: float
    nu_h: float
    kT_c: float
    kT_h: float

    def __post_init__(self):
        for name in ("omega", "nu_c", "nu_h", "kT_c", "kT_h"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise ValueError(f"g must be nonnegative, got {self.g!r}")
        if self.g >= self.omega:
            raise ValueError("need omega > g so that both transition energies are positive")

    @classmethod
    def from_kappas(cls, omega, g, kappa_c, kappa_h, kT_c, kT_h) -> "QubitMachineParams":
        return cls(omega, g, kappa_c / omega, kappa_h / omega, kT_c, kT_h)

    @property
    def kappa_c(self) -> float:
        return self.nu_c * self.omega

    @property
    def kappa_h(self) -> float:
        return self.nu_h * self.omega

    def nu(self, bath: str) -> float:
        return self.nu_h if bath == "h" else self.nu_c

    def kT(self, bath: str) -> float:
        return self.kT_h if bath == "h" else self.kT_c

    def replace(self, **changes) -> "QubitMachineParams":
        d = self.to_dict()
        d.update(changes)
        return QubitMachineParams(**d)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("omega", "g", "nu_c", "nu_h", "kT_c", "kT_h")}


def qubit_hamiltonian(p: QubitMachineParams) -> np.ndarray:
    n1 = np.diag([0.0, 1.0])
    h0 = p.omega * (np.kron(n1, I2) + np.kron(I2, n1))
    hint = np.zeros((4, 4))
    hint[1, 2] = hint[2, 1] = p.g
    return (h0 + hint).astype(complex)


@dataclass(frozen=True)
class JumpOperator:
    """Lowering operator L of energy ``energy``; L^dag is applied at rate
    ``gamma_up`` and L at rate ``gamma_down``."""

    matrix: np.ndarray
    energy: float
    bath: str
    gamma_up: float
    gamma_down: float


def _jump(p: QubitMachineParams, bath: str, energy: float, matrix) -> JumpOperator:
    kappa = p.nu(bath) * energy
    n = float(bose_einstein(energy, p.kT(bath)))
    return JumpOperator(np.asarray(matrix, dtype=complex), energy, bath, kappa * n, kappa * (n + 1))


def local_jump_set(p: QubitMachineParams) -> list:
    return [_jump(p, "c", p.omega, A_COLD), _jump(p, "h", p.omega, A_HOT)]


def global_jump_set(p: QubitMachineParams) -> list:
    """Jumps between eigenstates of the coupled Hamiltonian.

    Operators of one bath that share a transition energy are summed. When
    omega - g and omega + g coincide (g = 0, or g below float resolution of
    omega) this recombines them into the local set.
    """
    o = np.outer
    lo, hi = p.omega - p.g, p.omega + p.g
    ops = [
        ("c", lo, _S * o(PHI_PLUS, PHI_11) - _S * o(PHI_0, PHI_MINUS)),
        ("c", hi, _S * o(PHI_MINUS, PHI_11) + _S * o(PHI_0, PHI_PLUS)),
        ("h", lo, _S * o(PHI_PLUS, PHI_11) + _S * o(PHI_0, PHI_MINUS)),
        ("h", hi, -_S * o(PHI_MINUS, PHI_11) + _S * o(PHI_0, PHI_PLUS)),
    ]
    grouped: dict = {}
    for bath, e, m in ops:
        grouped[bath, e] = grouped.get((bath, e), 0) + m
    return [_jump(p, bath, e, m) for (bath, e), m in grouped.items()]


def _dissipator(op: np.ndarray) -> np.ndarray:
    eye = np.eye(op.shape[0])
    ldl = op.conj().T @ op
    return np.kron(op.conj(), op) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye)


def dissipator_superop(jumps) -> np.ndarray:
    out = np.zeros((16, 16), dtype=complex)
    for j in jumps:
        out += j.gamma_up * _dissipator(j.matrix.conj().T) + j.gamma_down * _dissipator(j.matrix)
    return out


def liouvillian(h: np.ndarray, jumps) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if not np.allclose(h, h.conj().T, atol=1e-14):
        raise ValueError("Hamiltonian must be Hermitian")
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye)) + dissipator_superop(jumps)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = math.isqrt(v.size)
    return np.asarray(v).reshape((d, d), order="F")


def steady_state(lv: np.ndarray, kernel_tol: float = 1e-10) -> np.ndarray:
    """Density matrix spanning the kernel of the Liouvillian."""
    _, sv, vh = np.linalg.svd(lv)
    scale = max(sv[0], 1.0)
    if sv[-2] < kernel_tol * scale:
        raise DegenerateSteadyStateError(
            f"kernel dimension > 1 (singular values {sv[-2]:.3e}, {sv[-1]:.3e})")
    rho = unvec(vh[-1].conj())
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    residual = np.linalg.norm(lv @ vec(rho))
    if residual > STEADY_RESIDUAL:
        raise RuntimeError(f"steady-state residual {residual:.3e} too large")
    return rho


def evolve_density(lv: np.ndarray, rho0: np.ndarray, t: float) -> np.ndarray:
    return unvec(expm(lv * t) @ vec(rho0))


def qubit_heat_current(h: np.ndarray, jumps, rho: np.ndarray, bath: str) -> float:
    """Tr[H D_bath(rho)] with D_bath the dissipator of the jumps from ``bath``."""
    own = [j for j in jumps if j.bath == bath]
    drho = unvec(dissipator_superop(own) @ vec(rho))
    return float(np.trace(h @ drho).real)


def _validate_density(rho: np.ndarray):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho) - 1) > 1e-8:
        raise ValueError("density matrix must have unit trace")
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    if w[0] < -1e-10:
        raise ValueError(f"density matrix has negative eigenvalue {w[0]:.3e}")
    return rho, np.clip(w, 0, None), v


def density_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)) (not squared)."""
    _, w, v = _validate_density(rho)
    sigma, _, _ = _validate_density(sigma)
    root = (v * np.sqrt(w)) @ v.conj().T
    m = root @ sigma @ root
    ev = np.clip(np.linalg.eigvalsh(0.5 * (m + m.conj().T)), 0, None)
    return float(min(np.sum(np.sqrt(ev)), 1.0))


def plateau_current(p: QubitMachineParams) -> float:
    """Hot current of the global generator in the limit g -> 0+.

    The eigenmode coherences are secularized away, leaving a four-level ladder
    driven by both baths with equal weights.
    """
    kc, kh = p.kappa_c, p.kappa_h
    nc = float(bose_einstein(p.omega, p.kT_c))
    nh = float(bose_einstein(p.omega, p.kT_h))
    return p.omega * kc * kh * (nh - nc) / (kc * (2 * nc + 1) + kh * (2 * nh + 1))


@dataclass(frozen=True)
class QubitSteady:
    method: str
    params: QubitMachineParams
    rho: np.ndarray
    J_h: float
    J_c: float


def qubit_steady(p: QubitMachineParams, method: str) -> QubitSteady:
    if method == "local":
        jumps = local_jump_set(p)
    elif method == "global":
        jumps = global_jump_set(p)
    else:
        raise ValueError(f"method must be 'local' or 'global', got {method!r}")
    h = qubit_hamiltonian(p)
    rho = steady_state(liouvillian(h, jumps))
    return QubitSteady(method, p, rho,
                       qubit_heat_current(h, jumps, rho, "h"),
                       qubit_heat_current(h, jumps, rho, "c"))
