"""SK spin systems: exact free energy, Gibbs pair expectations, Metropolis.

The Hamiltonian exponent is

    e(sigma) = (beta / sqrt(N)) * sum_{i,j=1}^N h_ij sigma_i sigma_j
               + r * sum_i sigma_i,

summed over ALL ordered pairs including the diagonal (the diagonal adds the
spin-independent shift (beta/sqrt(N)) * trace(H), kept for fidelity to the
all-pairs convention).  The free energy is F_N = log sum_sigma exp(e(sigma)).

Exact enumeration walks a Gray code (N <= N_MAX_EXACT); log_partition_naive
re-sums all configurations independently and exists as the slow reference
oracle for the Gray path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels
from .disorder import stream
from .errors import SizeLimitError

N_MAX_EXACT = 20


@dataclass(frozen=True)
class SpinSystem:
    n: int
    beta: float
    couplings: np.ndarray
    field_r: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        c = np.asarray(self.couplings, dtype=float)
        if c.shape != (self.n, self.n):
            raise ValueError(f"couplings must be {self.n}x{self.n}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("couplings must be finite")

    def interaction_matrix(self) -> np.ndarray:
        """W = (beta/sqrt(N)) (H + H^T)/2, so e(sigma) = sigma^T W sigma + r sum(sigma)."""
        h = np.asarray(self.couplings, dtype=float)
        return (self.beta / math.sqrt(self.n)) * 0.5 * (h + h.T)


@dataclass(frozen=True)
class SpinConfig:
    """A configuration as an N-bit word: bit i set <-> sigma_i = +1."""

    n: int
    bits: int

    def __post_init__(self) -> None:
        if not (0 <= self.bits < (1 << self.n)):
            raise ValueError(f"bits out of range for {self.n} spins")

    def spins(self) -> np.ndarray:
        return np.array([1.0 if (self.bits >> i) & 1 else -1.0
                         for i in range(self.n)])

    @classmethod
    def from_spins(cls, spins) -> "SpinConfig":
        spins = np.asarray(spins)
        bits = 0
        for i, s in enumerate(spins):
            if s > 0:
                bits |= 1 << i
        return cls(n=len(spins), bits=bits)

    def complement(self) -> "SpinConfig":
        return SpinConfig(n=self.n, bits=self.bits ^ ((1 << self.n) - 1))


@dataclass(frozen=True)
class GibbsSummary:
    log_partition: float
    pair_expectations: np.ndarray | None
    method: str
    sweeps: int = 0
    burn_in: int = 0


def energy(system: SpinSystem, config: SpinConfig) -> float:
    """Gibbs exponent e(sigma) of one configuration."""
    if config.n != system.n:
        raise ValueError(f"config has {config.n} spins, system has {system.n}")
    sigma = config.spins()
    h = np.asarray(system.couplings, dtype=float)
    return float((system.beta / math.sqrt(system.n)) * (sigma @ h @ sigma)
                 + system.field_r * sigma.sum())


def _check_exact(n: int) -> None:
    if n > N_MAX_EXACT:
        raise SizeLimitError(
            f"exact enumeration capped at N = {N_MAX_EXACT}, got {n}")


def free_energy_exact(system: SpinSystem, want_pairs: bool = False) -> GibbsSummary:
    """Exact F_N (and optionally all pair expectations) by Gray-code walk."""
    _check_exact(system.n)
    w = system.interaction_matrix()
    if want_pairs:
        logz, pairs = _kernels.gray_pair_expectations(w, system.field_r)
        return GibbsSummary(log_partition=float(logz), pair_expectations=pairs,
                            method="exact_enumeration")
    energies = _kernels.gray_energies(w, system.field_r)
    emax = energies.max()
    logz = emax + math.log(np.exp(energies - emax).sum())
    return GibbsSummary(log_partition=float(logz), pair_expectations=None,
                        method="exact_enumeration")


def log_partition(system: SpinSystem) -> float:
    return free_energy_exact(system).log_partition


def gibbs_pair_expectation(system: SpinSystem, i: int, j: int) -> float:
    """<sigma_i sigma_j> under the exact Gibbs measure."""
    if not (0 <= i < system.n and 0 <= j < system.n):
        raise ValueError(f"pair ({i},{j}) out of range for N={system.n}")
    summary = free_energy_exact(system, want_pairs=True)
    return float(summary.pair_expectations[i, j])


def all_config_spins(n: int) -> np.ndarray:
    """(2^N, N) matrix of all configurations in plain binary order."""
    m = np.arange(1 << n, dtype=np.uint64)[:, None]
    return np.where((m >> np.arange(n, dtype=np.uint64)[None, :]) & 1, 1.0, -1.0)


def config_energies(system: SpinSystem) -> np.ndarray:
    """Gibbs exponents of all configurations in plain binary order (vectorized)."""
    _check_exact(system.n)
    s = all_config_spins(system.n)
    w = system.interaction_matrix()
    return ((s @ w) * s).sum(axis=1) + system.field_r * s.sum(axis=1)


def log_partition_naive(system: SpinSystem) -> float:
    """Slow reference free energy: direct re-summation over all configurations."""
    e = config_energies(system)
    emax = e.max()
    return float(emax + math.log(np.exp(e - emax).sum()))


def flip_acceptance(system: SpinSystem, config: SpinConfig, site: int) -> float:
    """Metropolis acceptance probability for flipping one spin."""
    flipped = SpinConfig(n=config.n, bits=config.bits ^ (1 << site))
    delta = energy(system, flipped) - energy(system, config)
    return math.exp(delta) if delta < 0 else 1.0


_CHUNK_SWEEPS = 4096


def metropolis_sample(system: SpinSystem, sweeps: int, burn_in: int,
                      seed: int) -> Iterator[SpinConfig]:
    """Single-flip Metropolis chain targeting the Gibbs measure.

    Sites are visited in sequential order within each sweep; one configuration
    is emitted per sweep after burn_in.  Deterministic given the seed.
    """
    if sweeps < 1:
        raise ValueError(f"sweeps must be >= 1, got {sweeps}")
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    if system.n > 63:
        raise SizeLimitError("metropolis_sample packs configurations in 64-bit words")
    rng = stream(seed, 0x6D63)
    n = system.n
    w = system.interaction_matrix()
    sigma = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    total = burn_in + sweeps
    done = 0
    while done < total:
        chunk = min(_CHUNK_SWEEPS, total - done)
        uniforms = rng.random(chunk * n)
        out_bits = np.empty(chunk, dtype=np.uint64)
        _kernels.metropolis_chain(w, system.field_r, sigma, uniforms, chunk, out_bits)
        for s in range(chunk):
            if done + s >= burn_in:
                yield SpinConfig(n=n, bits=int(out_bits[s]))
        done += chunk


def metropolis_summary(system: SpinSystem, sweeps: int, burn_in: int,
                       seed: int) -> GibbsSummary:
    """Sampled counterpart of free_energy_exact's pair expectations.

    Averages sigma sigma^T along the chain; log_partition is not estimable
    from Metropolis samples and is reported as nan.
    """
    n = system.n
    pairs = np.zeros((n, n))
    count = 0
    for config in metropolis_sample(system, sweeps, burn_in, seed):
        s = config.spins()
        pairs += np.outer(s, s)
        count += 1
    return GibbsSummary(log_partition=math.nan, pair_expectations=pairs / count,
                        method="metropolis", sweeps=sweeps, burn_in=burn_in)


def overlap(a: SpinConfig, b: SpinConfig) -> float:
    """R(sigma, tau) = (1/N) sum_i sigma_i tau_i via XOR/popcount."""
    if a.n != b.n:
        raise ValueError(f"configs have different sizes: {a.n} vs {b.n}")
    disagree = bin(a.bits ^ b.bits).count("1")
    return 1.0 - 2.0 * disagree / a.n
