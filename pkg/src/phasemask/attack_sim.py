"""Seeded Monte Carlo for Eve's heterodyne attack and Bob's photon counter.

Randomness is counter based: trial ``i`` consumes the SplitMix64 outputs
``i*K .. i*K + K - 1`` of the stream seeded by ``seed``, where ``K`` is the
fixed number of draws per trial for the chosen estimator. Uniforms are
``((z >> 11) + 0.5) / 2**53`` and normals are their inverse-CDF images, so
results do not depend on how trials are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .error_analysis import norm_cdf_power_complement
from .keystream import SecretKey, running_keys_batch, splitmix_block
from .waveform import ModeGrid, PpmConfig, build_ppm_signal, compute_D

MODES = ("reduced", "conditional", "full-pipeline")
CHUNK_DRAWS = 1 << 21
HETERODYNE_VAR = 0.5  # per quadrature, i.e. E|z|^2 = 1


@dataclass(frozen=True)
class TrialConfig:
    trials: int
    seed: int
    N: int
    S: float = 0.0
    D: float = 1.0
    A: float | None = None
    mode: str = "reduced"
    ell: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.ell is not None and not 1 <= self.ell <= self.N:
            raise ValueError(f"fixed message {self.ell} outside [1, {self.N}]")

    @property
    def amplitude(self) -> float:
        if self.A is not None:
            return self.A
        return math.sqrt(2.0 * self.S / self.D)

    def to_json(self) -> dict:
        return {"trials": self.trials, "seed": self.seed, "N": self.N, "S": self.S, "D": self.D,
                "A": self.amplitude, "mode": self.mode, "ell": self.ell}


@dataclass
class TrialResult:
    trials: int
    p_hat: float
    stderr: float
    errors: int | None = None
    histogram: np.ndarray | None = None
    sent: np.ndarray | None = None
    errors_by_message: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def rate_by_message(self) -> np.ndarray:
        return self.errors_by_message / np.maximum(self.sent, 1)

    def to_json(self) -> dict:
        out = {"p_hat": self.p_hat, "stderr": self.stderr, "trials": self.trials, "errors": self.errors}
        if self.histogram is not None:
            out["histogram"] = self.histogram.tolist()
        if self.errors_by_message is not None:
            out["errors_by_message"] = self.errors_by_message.tolist()
            out["sent"] = self.sent.tolist()
        out.update(self.extra)
        return out


# -- random streams --------------------------------------------------------------

def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    z = splitmix_block(seed, start, count)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed: int, start: int, count: int) -> np.ndarray:
    return special.ndtri(uniforms(seed, start, count))


def _chunks(trials: int, per_trial: int):
    size = max(1, CHUNK_DRAWS // per_trial)
    return [(a, min(a + size, trials)) for a in range(0, trials, size)]


def _run_chunks(fn, trials: int, per_trial: int, workers: int):
    chunks = _chunks(trials, per_trial)
    if workers <= 1 or len(chunks) == 1:
        return [fn(a, b) for a, b in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), chunks))


def _messages(u: np.ndarray, N: int, fixed: int | None) -> np.ndarray:
    if fixed is not None:
        return np.full(u.shape, fixed - 1, dtype=np.int64)
    return np.minimum((u * N).astype(np.int64), N - 1)


def _binomial_result(parts, N: int, trials: int) -> TrialResult:
    hist = np.zeros(N, dtype=np.int64)
    sent = np.zeros(N, dtype=np.int64)
    err_by = np.zeros(N, dtype=np.int64)
    for h, s, e in parts:
        hist += h
        sent += s
        err_by += e
    errors = int(err_by.sum())
    p = errors / trials
    return TrialResult(trials, p, math.sqrt(p * (1 - p) / trials), errors, hist, sent, err_by)


def _tally(sent_idx, decoded, N):
    wrong = decoded != sent_idx
    return (np.bincount(decoded, minlength=N), np.bincount(sent_idx, minlength=N),
            np.bincount(sent_idx[wrong], minlength=N))


# -- Eve -------------------------------------------------------------------------

def simulate_eve_reduced(cfg: TrialConfig, workers: int = 1) -> TrialResult:
    """Brute-force argmax over ``(w_1, .., A + w_ell, .., w_N)``."""
    N, A, K = cfg.N, cfg.amplitude, cfg.N + 1

    def run(a, b):
        n = b - a
        draws = uniforms(cfg.seed, a * K, n * K).reshape(n, K)
        sent = _messages(draws[:, 0], N, cfg.ell)
        y = special.ndtri(draws[:, 1:])
        y[np.arange(n), sent] += A
        return _tally(sent, np.argmax(y, axis=1), N)

    return _binomial_result(_run_chunks(run, cfg.trials, K, workers), N, cfg.trials)


def simulate_eve_conditional(cfg: TrialConfig, workers: int = 1, N_real: float | None = None) -> TrialResult:
    """Average ``1 - Phi(A + w)^{N-1}`` over ``w``; ``N_real`` overrides ``cfg.N`` for huge N."""
    n_eff = cfg.N if N_real is None else N_real
    A = cfg.amplitude

    def run(a, b):
        v = norm_cdf_power_complement(A + normals(cfg.seed, a, b - a), n_eff - 1.0)
        return float(np.sum(v)), float(np.sum(v * v))

    parts = _run_chunks(run, cfg.trials, 1, workers)
    n = cfg.trials
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / n
    var = max(0.0, (total_sq - n * mean * mean) / (n - 1)) if n > 1 else 0.0
    return TrialResult(n, mean, math.sqrt(var / n), extra={"estimator": "conditional"})


@dataclass(frozen=True)
class Pipeline:
    """Precomputed pieces of the encrypt -> measure -> decrypt -> project chain."""

    grid: ModeGrid
    signals: np.ndarray   # (N, M) amplitudes alpha^k
    weights: np.ndarray   # (N, M) conj(alpha^k) * (w_j/w_c) / ||alpha^k||
    D: float

    @classmethod
    def build(cls, grid: ModeGrid, ppm: PpmConfig, narrowband: bool = True) -> "Pipeline":
        sig = np.array([build_ppm_signal(ppm.with_message(k), grid, narrowband).amps
                        for k in range(1, ppm.N + 1)])
        ratio = grid.J / grid.j_c
        norms = np.sqrt(np.sum(ratio * np.abs(sig) ** 2, axis=1))
        if not np.all(norms > 0):
            raise ValueError("PPM signal has no energy in the band")
        weights = np.conj(sig) * ratio / norms[:, None]
        D = compute_D(build_ppm_signal(ppm, grid, narrowband))
        return cls(grid, sig, weights, D)

    def project(self, received: np.ndarray) -> np.ndarray:
        """Projections onto ``psi_k`` in units of ``sqrt(hbar w_c)``; rows are trials."""
        return np.real(received @ self.weights.T)


def full_pipeline_projections(cfg: TrialConfig, grid: ModeGrid, ppm: PpmConfig, key: SecretKey,
                              nprime: int, counter: int = 0, noise_scale: float = 1.0,
                              start: int = 0, stop: int | None = None,
                              pipeline: Pipeline | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Run trials ``start..stop`` and return ``(sent_index, projections)``.

    Trial ``i`` uses running key counter ``counter + i*M`` so masks never
    share key entries.
    """
    pipe = pipeline or Pipeline.build(grid, ppm)
    N, M = ppm.N, grid.M
    if pipe.signals.shape != (N, M):
        raise ValueError("pipeline does not match the PPM configuration and grid")
    if nprime % N:
        raise ValueError(f"N'={nprime} is not a multiple of N={N}")
    stop = cfg.trials if stop is None else stop
    n = stop - start
    K = 1 + 2 * M
    draws = uniforms(cfg.seed, start * K, n * K).reshape(n, K)
    sent = _messages(draws[:, 0], N, cfg.ell)
    noise = special.ndtri(draws[:, 1:]) * (math.sqrt(HETERODYNE_VAR) * noise_scale)
    z = noise[:, :M] + 1j * noise[:, M:]
    ks = running_keys_batch(key, M, nprime, counter + M * np.arange(start, stop, dtype=np.uint64))
    mask = np.exp(2j * np.pi * ks / nprime)
    beta = mask * pipe.signals[sent]              # encrypt
    measured = beta + z                           # heterodyne outcome
    decrypted = np.conj(mask) * measured          # key revealed after measurement
    return sent, pipe.project(decrypted)


def simulate_full_pipeline(cfg: TrialConfig, grid: ModeGrid, ppm: PpmConfig, key: SecretKey,
                           nprime: int, counter: int = 0, noise_scale: float = 1.0,
                           workers: int = 1) -> TrialResult:
    if cfg.N != ppm.N:
        raise ValueError("trial config and PPM config disagree on N")
    pipe = Pipeline.build(grid, ppm)
    K = 1 + 2 * grid.M

    def run(a, b):
        sent, proj = full_pipeline_projections(cfg, grid, ppm, key, nprime, counter, noise_scale,
                                               a, b, pipe)
        return _tally(sent, np.argmax(proj, axis=1), ppm.N)

    res = _binomial_result(_run_chunks(run, cfg.trials, K, workers), ppm.N, cfg.trials)
    res.extra["D"] = pipe.D
    return res


# -- Bob -------------------------------------------------------------------------

def poisson_from_uniform(u: np.ndarray, S: float) -> np.ndarray:
    """Inversion for ``S <= 30``, rounded normal approximation above."""
    if S > 30:
        return np.maximum(np.rint(S + math.sqrt(S) * special.ndtri(u)), 0).astype(np.int64)
    counts = np.zeros(u.shape, dtype=np.int64)
    p = math.exp(-S)
    cdf = p
    active = u > cdf
    k, kmax = 0, int(S + 20 * math.sqrt(S) + 40)
    while np.any(active) and k < kmax:
        k += 1
        p *= S / k
        cdf += p
        counts += active
        active &= u > cdf
    return counts


def simulate_bob_photon_count(N: int, S: float, trials: int, seed: int, workers: int = 1) -> TrialResult:
    """Photon counting: errors only when no photon arrives and the random guess misses."""
    if N < 1 or S < 0 or trials < 1:
        raise ValueError("need N >= 1, S >= 0, trials >= 1")
    K = 3

    def run(a, b):
        n = b - a
        draws = uniforms(seed, a * K, n * K).reshape(n, K)
        sent = _messages(draws[:, 0], N, None)
        photons = poisson_from_uniform(draws[:, 1], S)
        guess = _messages(draws[:, 2], N, None)
        decoded = np.where(photons > 0, sent, guess)
        return _tally(sent, decoded, N)

    return _binomial_result(_run_chunks(run, trials, K, workers), N, trials)
