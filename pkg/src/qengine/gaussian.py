"""Zero-mean Gaussian states of bosonic modes stored as covariance matrices.

Quadratures are ordered ``(x_1, ..., x_M, p_1, ..., p_M)`` with
``x = (a + a^dag) / sqrt(2 w)`` and ``p = i sqrt(w / 2) (a^dag - a)``, where
``w`` is the frequency attached to each mode. The frequencies only fix the
quadrature scaling; they travel with the matrix so that occupations and
coherences can be read back unambiguously.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

PHYSICAL_TOL = 1e-10

__all__ = [
    "CovarianceMatrix",
    "symplectic_form",
    "thermal_covariance",
    "covariance_from_moments",
    "number_moments",
    "mode_occupation",
    "cross_coherence",
    "reduce_to_modes",
    "two_mode_fidelity",
    "NonPhysicalStateError",
]


class NonPhysicalStateError(ValueError):
    """Raised when C + iJ/2 fails to be positive semidefinite."""


def symplectic_form(n_modes: int) -> np.ndarray:
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    data: np.ndarray
    frequencies: tuple

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        freqs = tuple(float(w) for w in self.frequencies)
        m = len(freqs)
        if data.shape != (2 * m, 2 * m) or m == 0:
            raise ValueError(f"covariance of shape {data.shape} does not match {m} modes")
        if any(w <= 0 for w in freqs):
            raise ValueError("mode frequencies must be > 0")
        scale = max(1.0, float(np.max(np.abs(data))))
        if np.max(np.abs(data - data.T)) > 1e-9 * scale:
            raise ValueError("covariance matrix is not symmetric")
        data = 0.5 * (data + data.T)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue of C + iJ/2 (nonnegative for physical states)."""
        mat = self.data + 0.5j * symplectic_form(self.n_modes)
        return float(np.linalg.eigvalsh(mat)[0])

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        return self.min_eigenvalue() >= -tol

    def require_physical(self, tol: float = PHYSICAL_TOL) -> "CovarianceMatrix":
        lam = self.min_eigenvalue()
        if lam < -tol:
            raise NonPhysicalStateError(f"C + iJ/2 has eigenvalue {lam:.3e} < -{tol:g}")
        return self

    def rescaled(self, frequencies: Sequence[float]) -> "CovarianceMatrix":
        """Same state, quadratures re-expressed for new mode frequencies."""
        old = np.asarray(self.frequencies)
        new = np.asarray(frequencies, dtype=float)
        if new.shape != old.shape:
            raise ValueError("frequency list length mismatch")
        s = np.sqrt(old / new)
        d = np.concatenate([s, 1.0 / s])
        return CovarianceMatrix(d[:, None] * self.data * d[None, :], tuple(new))

    def to_json(self) -> str:
        rows = ",".join(
            "[" + ",".join(format(v, ".17g") for v in row) + "]" for row in self.data
        )
        freqs = ",".join(format(w, ".17g") for w in self.frequencies)
        return f'{{"dim":{self.dim},"frequencies":[{freqs}],"rows":[{rows}]}}'

    @classmethod
    def from_json(cls, text: str) -> "CovarianceMatrix":
        obj = json.loads(text)
        cm = cls(np.array(obj["rows"], dtype=float), tuple(obj["frequencies"]))
        if cm.dim != obj["dim"]:
            raise ValueError("dim field does not match rows")
        return cm

    def __eq__(self, other):
        if not isinstance(other, CovarianceMatrix):
            return NotImplemented
        return self.frequencies == other.frequencies and np.array_equal(self.data, other.data)

    __hash__ = None


def _scaling(frequencies) -> np.ndarray:
    w = np.asarray(frequencies, dtype=float)
    return np.concatenate([1 / np.sqrt(w), np.sqrt(w)])


def thermal_covariance(frequencies, occupations) -> CovarianceMatrix:
    freqs = np.atleast_1d(np.asarray(frequencies, dtype=float))
    occ = np.atleast_1d(np.asarray(occupations, dtype=float))
    if freqs.shape != occ.shape:
        raise ValueError("frequencies and occupations differ in length")
    if np.any(freqs <= 0):
        raise ValueError("frequencies must be > 0")
    if np.any(occ < 0):
        raise ValueError("occupations must be >= 0")
    diag = np.concatenate([(occ + 0.5) / freqs, (occ + 0.5) * freqs])
    return CovarianceMatrix(np.diag(diag), tuple(freqs))


def covariance_from_moments(moments, frequencies) -> CovarianceMatrix:
    """Covariance of the zero-mean, unsqueezed Gaussian state with
    ``moments[i, j] = <a_i^dag a_j>`` (and ``<a_i a_j> = 0``)."""
    nm = np.asarray(moments, dtype=complex)
    m = nm.shape[0]
    if nm.shape != (m, m) or not np.allclose(nm, nm.conj().T, atol=1e-12, rtol=0):
        raise ValueError("moment matrix must be square and Hermitian")
    re = nm.real + 0.5 * np.eye(m)
    im = nm.imag
    unit = np.block([[re, im], [im.T, re]])
    d = _scaling(frequencies)
    return CovarianceMatrix(d[:, None] * unit * d[None, :], tuple(frequencies))


def number_moments(cm: CovarianceMatrix) -> np.ndarray:
    """Matrix of ``<a_i^dag a_j>`` for all mode pairs."""
    d = 1.0 / _scaling(cm.frequencies)
    unit = d[:, None] * cm.data * d[None, :]
    m = cm.n_modes
    xx, xp = unit[:m, :m], unit[:m, m:]
    px, pp = unit[m:, :m], unit[m:, m:]
    out = 0.5 * (xx + pp) + 0.5j * (xp - px)
    out[np.diag_indices(m)] -= 0.5
    return out


def _check_index(cm: CovarianceMatrix, i: int):
    if not 0 <= i < cm.n_modes:
        raise IndexError(f"mode index {i} out of range for {cm.n_modes} modes")


def mode_occupation(cm: CovarianceMatrix, mode_index: int) -> float:
    _check_index(cm, mode_index)
    w = cm.frequencies[mode_index]
    m = cm.n_modes
    xx = cm.data[mode_index, mode_index]
    pp = cm.data[m + mode_index, m + mode_index]
    return 0.5 * (w * xx + pp / w - 1.0)


def cross_coherence(cm: CovarianceMatrix, mode_i: int, mode_j: int) -> complex:
    """``<a_i^dag a_j>`` for two distinct modes."""
    _check_index(cm, mode_i)
    _check_index(cm, mode_j)
    if mode_i == mode_j:
        raise ValueError("cross_coherence needs two distinct modes")
    m = cm.n_modes
    wi, wj = cm.frequencies[mode_i], cm.frequencies[mode_j]
    c = cm.data
    xx = c[mode_i, mode_j]
    pp = c[m + mode_i, m + mode_j]
    xp = c[mode_i, m + mode_j]
    px = c[m + mode_i, mode_j]
    real = 0.5 * (np.sqrt(wi * wj) * xx + pp / np.sqrt(wi * wj))
    imag = 0.5 * (np.sqrt(wi / wj) * xp - np.sqrt(wj / wi) * px)
    return complex(real, imag)


def reduce_to_modes(cm: CovarianceMatrix, indices: Sequence[int]) -> CovarianceMatrix:
    idx = [int(i) for i in indices]
    if not idx:
        raise ValueError("need at least one mode")
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate mode indices")
    for i in idx:
        _check_index(cm, i)
    rows = idx + [cm.n_modes + i for i in idx]
    return CovarianceMatrix(cm.data[np.ix_(rows, rows)], tuple(cm.frequencies[i] for i in idx))


def two_mode_fidelity(c1: CovarianceMatrix, c2: CovarianceMatrix) -> float:
    """Fidelity of two zero-mean two-mode Gaussian states.

    Closed form in terms of ``a = det(C1 + C2)``,
    ``b = 16 det(J C1 J C2 - I/4)`` and
    ``c = 16 det(C1 + iJ/2) det(C2 + iJ/2)``. The value returned is the
    squared Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``;
    e.g. vacuum against a thermal state with n photons per mode gives
    ``1 / (n + 1)**2``.
    """
    if c1.n_modes != 2 or c2.n_modes != 2:
        raise ValueError("two_mode_fidelity takes two-mode states")
    if not np.allclose(c1.frequencies, c2.frequencies, rtol=1e-12, atol=0):
        c2 = c2.rescaled(c1.frequencies)
    c1.require_physical()
    c2.require_physical()
    j = symplectic_form(2)
    a1, a2 = c1.data, c2.data
    a = np.linalg.det(a1 + a2)
    b = 16 * np.linalg.det(j @ a1 @ j @ a2 - 0.25 * np.eye(4))
    c = 16 * (np.linalg.det(a1 + 0.5j * j) * np.linalg.det(a2 + 0.5j * j)).real
    # rounding can push the (nonnegative) invariants slightly below zero
    b, c = max(b, 0.0), max(c, 0.0)
    s = np.sqrt(b) + np.sqrt(c)
    # 1 / (s - sqrt(s^2 - a)) rewritten to avoid cancellation
    f = (s + np.sqrt(max(s * s - a, 0.0))) / a
    return float(min(f, 1.0))
