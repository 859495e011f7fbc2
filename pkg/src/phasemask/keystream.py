"""Running-key derivation from a shared secret.

The generator is an FNV-style byte fold followed by a SplitMix64 stream.
It exists so that masks are reproducible bit-for-bit across platforms;
it makes no cryptographic claim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symplectic import ComplexUnitary

MASK64 = (1 << 64) - 1
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


@dataclass(frozen=True)
class SecretKey:
    data: bytes

    def __post_init__(self):
        if not 1 <= len(self.data) <= 64:
            raise ValueError("secret key must be 1 to 64 bytes long")

    @classmethod
    def from_hex(cls, text: str) -> "SecretKey":
        try:
            raw = bytes.fromhex(text)
        except ValueError as exc:
            raise ValueError(f"invalid hex key {text!r}") from exc
        return cls(raw)


@dataclass(frozen=True)
class RunningKey:
    nprime: int
    ks: tuple[int, ...]

    def __post_init__(self):
        if self.nprime < 1:
            raise ValueError("N' must be a positive integer")
        for k in self.ks:
            if not 0 <= k < self.nprime:
                raise ValueError(f"key entry {k} outside [0, {self.nprime})")

    @property
    def M(self) -> int:
        return len(self.ks)

    def to_json(self) -> dict:
        return {"Nprime": self.nprime, "ks": list(self.ks)}


def fold_key(data: bytes) -> int:
    s = FNV_OFFSET
    for b in data:
        s = ((s * FNV_PRIME) & MASK64) ^ b
    return s


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def derive_running_key(key: SecretKey | bytes, M: int, nprime: int, counter: int = 0) -> RunningKey:
    """Derive ``M`` phase integers in ``[0, nprime)``.

    The state starts at the folded key offset by ``counter * GOLDEN_GAMMA``;
    each output advances the state by one gamma and finalizes it. Note that
    consecutive counters therefore yield overlapping streams shifted by one
    entry; callers wanting disjoint masks should step the counter by ``M``.
    """
    if isinstance(key, (bytes, bytearray)):
        key = SecretKey(bytes(key))
    if M < 1:
        raise ValueError("M must be a positive integer")
    if nprime < 1:
        raise ValueError("N' must be a positive integer")
    if counter < 0:
        raise ValueError("counter must be nonnegative")
    s = (fold_key(key.data) + counter * GOLDEN_GAMMA) & MASK64
    ks = []
    for _ in range(M):
        s = (s + GOLDEN_GAMMA) & MASK64
        ks.append(mix64(s) % nprime)
    return RunningKey(nprime, tuple(ks))


def splitmix_block(state: int, start: int, count: int) -> np.ndarray:
    """Stream outputs ``start .. start+count-1`` (0-based) after ``state``.

    Output ``i`` equals ``mix64(state + (i + 1) * GOLDEN_GAMMA)``, so any
    block can be produced independently of the others.
    """
    idx = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(state) + idx * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def running_keys_batch(key: SecretKey | bytes, M: int, nprime: int, counters) -> np.ndarray:
    """Vectorized :func:`derive_running_key` for many counters; shape (len(counters), M)."""
    if isinstance(key, (bytes, bytearray)):
        key = SecretKey(bytes(key))
    if M < 1 or nprime < 1:
        raise ValueError("M and N' must be positive integers")
    counters = np.asarray(counters, dtype=np.uint64)
    base = np.uint64(fold_key(key.data))
    steps = counters[:, None] + np.arange(1, M + 1, dtype=np.uint64)[None, :]
    with np.errstate(over="ignore"):
        z = base + steps * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    z = z ^ (z >> np.uint64(31))
    return (z % np.uint64(nprime)).astype(np.int64)


def phase_mask_from_key(rk: RunningKey, N: int) -> ComplexUnitary:
    if N < 1:
        raise ValueError("N must be a positive integer")
    if rk.nprime % N != 0:
        raise ValueError(f"N'={rk.nprime} is not a multiple of N={N}")
    phases = 2 * np.pi * np.asarray(rk.ks, dtype=float) / rk.nprime
    return ComplexUnitary.phase_mask(phases)
