"""PPM signals as band-limited quantum Gaussian waveforms.

Units: hbar = 1. Angular frequencies are ``omega_j = 2*pi*j/T`` and only
enter results through ratios ``omega_j / omega_c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModeGrid:
    """Observation interval ``T``, carrier index ``j_c`` and band index set ``J``."""

    T: float
    j_c: int
    J: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.j_c < 1:
            raise ValueError("carrier index j_c must be a positive integer")
        J = np.unique(np.asarray(self.J, dtype=np.int64))
        if J.size == 0:
            raise ValueError("band index set J is empty")
        if J[0] < 1:
            raise ValueError("all mode indices must be positive")
        if self.j_c not in J:
            raise ValueError(f"carrier index {self.j_c} not in J")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @classmethod
    def symmetric(cls, T: float, j_c: int, half_width: int) -> "ModeGrid":
        """Closed band ``|j - j_c| <= half_width`` clipped at ``j >= 1``."""
        lo = max(1, j_c - half_width)
        return cls(T, j_c, np.arange(lo, j_c + half_width + 1))

    @classmethod
    def main_lobe(cls, T: float, j_c: int, N: int) -> "ModeGrid":
        """Default band: the sinc main lobe, ``M = 2N - 1`` modes."""
        return cls.symmetric(T, j_c, N - 1)

    @classmethod
    def from_offsets(cls, T: float, j_c: int, offsets) -> "ModeGrid":
        return cls(T, j_c, j_c + np.asarray(offsets, dtype=np.int64))

    @classmethod
    def from_bandwidth(cls, f_c: float, resolution: float, bandwidth: float) -> "ModeGrid":
        """Grid with ``T = 1/resolution`` and ``bandwidth/resolution`` modes.

        The band is half open, ``-W/2 <= f_j - f_c < W/2``, so a 1 GHz band at
        10 MHz resolution holds exactly 100 modes.
        """
        T = 1.0 / resolution
        j_c = int(round(f_c * T))
        half = int(round(bandwidth / resolution)) // 2
        width = int(round(bandwidth / resolution))
        lo = max(1, j_c - half)
        return cls(T, j_c, np.arange(lo, lo + max(width, 1)))

    @property
    def M(self) -> int:
        return int(self.J.size)

    @property
    def offsets(self) -> np.ndarray:
        return self.J - self.j_c

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.J / self.T

    @property
    def omega_c(self) -> float:
        return 2 * np.pi * self.j_c / self.T

    def same_as(self, other: "ModeGrid") -> bool:
        return self.T == other.T and self.j_c == other.j_c and np.array_equal(self.J, other.J)

    def to_json(self) -> dict:
        return {"T": self.T, "j_c": self.j_c, "J": self.J.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "ModeGrid":
        return cls(float(obj["T"]), int(obj["j_c"]), np.asarray(obj["J"], dtype=np.int64))


@dataclass(frozen=True)
class PpmConfig:
    N: int
    S: float
    ell: int = 1

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if not 1 <= self.ell <= self.N:
            raise ValueError(f"message ell={self.ell} outside [1, {self.N}]")
        if not self.S >= 0:
            raise ValueError("S must be nonnegative")

    def with_message(self, ell: int) -> "PpmConfig":
        return PpmConfig(self.N, self.S, ell)

    def check_divisible(self, grid: ModeGrid) -> None:
        """Raise unless ``2 j_c`` is divisible by ``N`` (exact-energy assumption)."""
        if (2 * grid.j_c) % self.N:
            raise ValueError(f"2*j_c={2 * grid.j_c} is not divisible by N={self.N}")


@dataclass(frozen=True)
class Spectrum:
    offsets: np.ndarray
    coefficients: np.ndarray

    def to_json(self) -> dict:
        return {"amps": [[int(j), float(c.real), float(c.imag)] for j, c in zip(self.offsets, self.coefficients)]}


@dataclass(frozen=True)
class ModeAmplitudes:
    """Complex coherent amplitudes ``alpha_j`` stored in the order of ``grid.J``."""

    grid: ModeGrid
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    def as_dict(self) -> dict[int, complex]:
        return {int(j): complex(a) for j, a in zip(self.grid.J, self.amps)}

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "amps": [[int(j), float(a.real), float(a.imag)] for j, a in zip(self.grid.J, self.amps)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModeAmplitudes":
        grid = ModeGrid.from_json(obj["grid"])
        lookup = {int(j): complex(re, im) for j, re, im in obj["amps"]}
        return cls(grid, np.array([lookup[int(j)] for j in grid.J]))


def sinc(x):
    """``sin(x)/x`` with ``sinc(0) = 1``; short series below ``|x| < 1e-4``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)


def window_coefficients(N: int, ell: int, offsets) -> np.ndarray:
    """Fourier coefficients of the indicator of slot ``ell`` of ``N``."""
    j = np.asarray(offsets, dtype=float)
    phase = np.exp(-1j * np.pi * j * (2 * ell - 1) / N)
    return phase * sinc(j * np.pi / N) / N


def ppm_window_spectrum(cfg: PpmConfig, offsets) -> Spectrum:
    offsets = np.asarray(offsets, dtype=np.int64)
    return Spectrum(offsets, window_coefficients(cfg.N, cfg.ell, offsets))


def build_ppm_signal(cfg: PpmConfig, grid: ModeGrid, narrowband: bool = True) -> ModeAmplitudes:
    """Mode amplitudes of the PPM pulse in slot ``cfg.ell``.

    With ``narrowband`` the image term ``d_{j+j_c}`` is dropped.
    """
    if cfg.N > 2 * grid.j_c:
        raise ValueError(f"N={cfg.N} exceeds 2*j_c={2 * grid.j_c}: slot shorter than a carrier cycle")
    J = grid.J
    d = window_coefficients(cfg.N, cfg.ell, J - grid.j_c)
    if not narrowband:
        d = d + window_coefficients(cfg.N, cfg.ell, J + grid.j_c)
    scale = np.sqrt(grid.j_c / J.astype(float)) * math.sqrt(cfg.N * cfg.S)
    return ModeAmplitudes(grid, scale * np.conj(d))


def time_shift_check(a: ModeAmplitudes, b: ModeAmplitudes, ell_a: int, ell_b: int, N: int,
                     tol: float = 1e-12) -> bool:
    """True iff ``b_j = a_j * exp(i 2 pi j (ell_b - ell_a) / N)`` on every mode.

    The relation is exact for grids whose carrier index is a multiple of N;
    otherwise the two signals also differ by a global carrier phase.
    """
    if not a.grid.same_as(b.grid):
        raise ValueError("amplitudes live on different grids")
    J = a.grid.J
    shift = np.exp(1j * 2 * np.pi * ((J * (ell_b - ell_a)) % N) / N)
    return bool(np.max(np.abs(b.amps - a.amps * shift), initial=0.0) <= tol)


def band_energy(a: ModeAmplitudes) -> float:
    return float(np.sum(a.grid.omega * np.abs(a.amps) ** 2))


def synthesize_envelope(a: ModeAmplitudes, samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Complex baseband envelope on ``t_k = k T / samples`` with the carrier factored out."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    grid = a.grid
    t = np.arange(samples) * grid.T / samples
    weights = a.amps * np.sqrt(grid.J / grid.j_c)
    # baseband frequency of mode j is 2*pi*(j - j_c)/T; work in cycles to keep phases small
    k = np.arange(samples)
    env = np.zeros(samples, dtype=complex)
    for off, w in zip(grid.offsets, weights):
        if w != 0:
            env += w * np.exp(-2j * np.pi * ((off * k) % samples) / samples)
    return t, env


def compute_D(a: ModeAmplitudes) -> float:
    """Noise-bandwidth factor ``sum |a|^2 w^2 / sum |a|^2 w w_c`` over the band."""
    p = np.abs(a.amps) ** 2
    if not np.any(p > 0):
        raise ValueError("D is undefined for an all-zero signal")
    ratio = a.grid.J / a.grid.j_c
    return float(np.sum(p * ratio * ratio) / np.sum(p * ratio))
