"""Finite-mode symplectic machinery for coherent-state encryption.

Canonical coordinates are ordered ``(q_1, p_1, ..., q_M, p_M)``. A complex
amplitude ``alpha = x + i y`` maps to the mean ``Omega (x, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import ModeAmplitudes, ModeGrid

CONSTRUCT_TOL = 1e-10


def _omegas(grid_or_omegas) -> np.ndarray:
    if isinstance(grid_or_omegas, ModeGrid):
        return grid_or_omegas.omega
    w = np.atleast_1d(np.asarray(grid_or_omegas, dtype=float))
    if np.any(w <= 0):
        raise ValueError("mode frequencies must be positive")
    return w


def form_matrix(M: int) -> np.ndarray:
    """Matrix of the symplectic form, ``Delta(z, z') = z^T J z'`` with hbar = 1."""
    J = np.zeros((2 * M, 2 * M))
    idx = np.arange(M)
    J[2 * idx, 2 * idx + 1] = -1.0
    J[2 * idx + 1, 2 * idx] = 1.0
    return J


def omega_matrix(grid_or_omegas) -> np.ndarray:
    """``Omega_M = diag(sqrt(2/w_j), sqrt(2 w_j))`` per mode."""
    w = _omegas(grid_or_omegas)
    diag = np.empty(2 * w.size)
    diag[0::2] = np.sqrt(2.0 / w)
    diag[1::2] = np.sqrt(2.0 * w)
    return np.diag(diag)


def coherent_covariance(grid_or_omegas) -> np.ndarray:
    om = omega_matrix(grid_or_omegas)
    return om @ om / 4.0


def is_symplectic(L, tol: float = CONSTRUCT_TOL) -> bool:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("expected a square matrix")
    if L.shape[0] % 2:
        raise ValueError("symplectic matrices have even dimension")
    J = form_matrix(L.shape[0] // 2)
    return bool(np.max(np.abs(L @ J @ L.T - J)) <= tol)


@dataclass(frozen=True, eq=False)
class ComplexUnitary:
    entries: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.entries, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValueError("unitary must be a square matrix")
        err = np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0])), initial=0.0)
        if err > CONSTRUCT_TOL:
            raise ValueError(f"matrix is not unitary (max deviation {err:.3g})")
        U.setflags(write=False)
        object.__setattr__(self, "entries", U)

    @classmethod
    def phase_mask(cls, phases) -> "ComplexUnitary":
        return cls(np.diag(np.exp(1j * np.asarray(phases, dtype=float))))

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def is_diagonal(self) -> bool:
        U = self.entries
        return not np.any(U - np.diag(np.diag(U)))

    def dagger(self) -> "ComplexUnitary":
        return ComplexUnitary(self.entries.conj().T)

    def __matmul__(self, other: "ComplexUnitary") -> "ComplexUnitary":
        return ComplexUnitary(self.entries @ other.entries)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=complex)
        if self.is_diagonal:
            return np.diag(self.entries) * vec
        return self.entries @ vec

    def to_json(self) -> dict:
        U = self.entries
        return {"M": self.M, "re": U.real.tolist(), "im": U.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "ComplexUnitary":
        U = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        if U.shape != (obj["M"], obj["M"]):
            raise ValueError("matrix shape does not match M")
        return cls(U)


@dataclass(frozen=True, eq=False)
class RealSymplectic:
    entries: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.entries, dtype=float)
        # physical frequencies make entries span ~30 decades; scale the tolerance
        scale = max(1.0, float(np.max(np.abs(L), initial=0.0)) ** 2)
        if not is_symplectic(L, CONSTRUCT_TOL * scale):
            raise ValueError("matrix does not preserve the symplectic form")
        L.setflags(write=False)
        object.__setattr__(self, "entries", L)

    @property
    def M(self) -> int:
        return self.entries.shape[0] // 2

    def to_json(self) -> dict:
        return {"M": self.M, "entries": self.entries.tolist()}


@dataclass(frozen=True, eq=False)
class GaussianParams:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        n = mean.size
        if n % 2 or cov.shape != (n, n):
            raise ValueError("mean must have length 2M and covariance shape 2M x 2M")
        if not np.allclose(cov, cov.T, rtol=0, atol=CONSTRUCT_TOL * max(1.0, np.max(np.abs(cov)))):
            raise ValueError("covariance is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def coherent(cls, a: ModeAmplitudes) -> "GaussianParams":
        return cls(amplitudes_to_mean(a.amps, a.grid), coherent_covariance(a.grid))


def realify(U) -> np.ndarray:
    """Real ``2M x 2M`` image of a complex matrix: ``r e^{i t}`` becomes ``r [[c, -s], [s, c]]``."""
    U = np.asarray(U, dtype=complex)
    M = U.shape[0]
    O = np.empty((2 * M, 2 * M))
    O[0::2, 0::2] = U.real
    O[0::2, 1::2] = -U.imag
    O[1::2, 0::2] = U.imag
    O[1::2, 1::2] = U.real
    return O


def unitary_to_symplectic(U: ComplexUnitary, grid_or_omegas) -> RealSymplectic:
    """``L = Omega O Omega^{-1}`` with ``O`` the real image of ``U``."""
    w = _omegas(grid_or_omegas)
    if w.size != U.M:
        raise ValueError(f"unitary dimension {U.M} does not match {w.size} modes")
    d = np.diag(omega_matrix(w))
    L = realify(U.entries) * d[:, None] / d[None, :]
    return RealSymplectic(L)


def amplitudes_to_mean(amps, grid_or_omegas) -> np.ndarray:
    amps = np.asarray(amps, dtype=complex)
    xy = np.empty(2 * amps.size)
    xy[0::2] = amps.real
    xy[1::2] = amps.imag
    return np.diag(omega_matrix(grid_or_omegas)) * xy


def mean_to_amplitudes(mean, grid_or_omegas) -> np.ndarray:
    xy = np.asarray(mean, dtype=float) / np.diag(omega_matrix(grid_or_omegas))
    return xy[0::2] + 1j * xy[1::2]


def apply_encryption(U: ComplexUnitary, a: ModeAmplitudes) -> ModeAmplitudes:
    if U.M != a.grid.M:
        raise ValueError(f"unitary dimension {U.M} does not match {a.grid.M} modes")
    return ModeAmplitudes(a.grid, U.apply(a.amps))


def transform_gaussian(L: RealSymplectic | np.ndarray, g: GaussianParams) -> GaussianParams:
    L = L.entries if isinstance(L, RealSymplectic) else np.asarray(L, dtype=float)
    if L.shape != g.cov.shape:
        raise ValueError(f"transform shape {L.shape} does not match state dimension {g.mean.size}")
    cov = L @ g.cov @ L.T
    return GaussianParams(L @ g.mean, (cov + cov.T) / 2)
