"""Constant-accuracy starting estimate from random rank-one measurements.

Haar-random projectors are each measured a fixed number of times, the
Hermitian matrix with unit trace that best fits the observed frequencies is
found by least squares, and its top eigenvector becomes the first base
state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import Environment
from .errors import ConfigError, DimensionError
from .geometry import PureState, haar_state
from .rng import substream


@dataclass(frozen=True)
class WarmupConfig:
    c_w: float = 40.0
    delta_w: float = 1e-4
    directions: int | None = None  # defaults to 3 d^2

    def __post_init__(self):
        if not self.c_w > 0:
            raise ConfigError(f"c_w must be positive, got {self.c_w!r}")
        if not 0 < self.delta_w < 1:
            raise ConfigError(f"delta_w must lie in (0, 1), got {self.delta_w!r}")

    def n_directions(self, d: int) -> int:
        n = 3 * d * d if self.directions is None else int(self.directions)
        if n < d * d:
            raise ConfigError(f"warm-up needs at least d^2 = {d * d} directions, got {n}")
        return n

    def total(self, d: int) -> int:
        """Total copies: ceil(c_w d^2 ln(1/delta_w)) rounded up to whole repetitions."""
        n = self.n_directions(d)
        raw = math.ceil(self.c_w * d * d * math.log(1.0 / self.delta_w))
        return n * max(1, -(-raw // n))

    def reps(self, d: int) -> int:
        return self.total(d) // self.n_directions(d)


def traceless_basis(d: int) -> np.ndarray:
    """Orthonormal traceless Hermitian basis (generalized Gell-Mann), shape (d^2-1, d, d)."""
    mats = []
    s = 1.0 / math.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = s
            mats.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k], m[k, j] = -1j * s, 1j * s
            mats.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -float(l)
        mats.append(m / math.sqrt(l * (l + 1)))
    return np.array(mats)


def plan_directions(seed: int, d: int, n: int) -> np.ndarray:
    """Measurement directions as an (n, d) array of unit vectors."""
    rng = substream(seed, "warmup", "directions")
    return np.array([haar_state(d, rng).amplitudes for _ in range(n)])


def estimate_from_frequencies(directions: np.ndarray, freqs: np.ndarray) -> tuple[PureState, np.ndarray]:
    """Unit-trace least-squares fit and its top eigenvector.

    Returns the state and the fitted Hermitian matrix.
    """
    directions = np.asarray(directions, dtype=complex)
    n, d = directions.shape
    if n < d * d:
        raise ConfigError(f"warm-up needs at least d^2 = {d * d} directions, got {n}")
    G = traceless_basis(d)
    # Tr(G_a P_k) = <psi_k|G_a|psi_k>
    A = np.real(np.einsum("ki,aij,kj->ka", directions.conj(), G, directions))
    b = np.asarray(freqs, dtype=float) - 1.0 / d
    coef, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < d * d - 1:
        raise ConfigError("warm-up design is rank deficient")
    X = np.eye(d) / d + np.einsum("a,aij->ij", coef, G)
    X = 0.5 * (X + X.conj().T)
    _, vecs = np.linalg.eigh(X)
    return PureState.from_vector(vecs[:, -1]), X


def run_warmup(env: Environment, d: int, cfg: WarmupConfig | None = None) -> tuple[PureState, int]:
    """Warm-up phase on ``env``; returns the first base state and copies used."""
    cfg = cfg or WarmupConfig()
    if env.d != d:
        raise DimensionError(f"environment has d={env.d}, warm-up asked for d={d}")
    n, reps = cfg.n_directions(d), cfg.reps(d)
    directions = plan_directions(env.seed, d, n)
    before = env.copies_consumed
    counts = env.measure_counts(directions, reps, ("warmup", "outcomes"))
    state, _ = estimate_from_frequencies(directions, counts / reps)
    return state, env.copies_consumed - before
