"""Simulated pure-state environment with Born-rule binary outcomes.

The learner only sees :class:`Environment`, whose methods return bits. Ground
truth lives behind :class:`Evaluator`, a separate handle used for regret and
infidelity bookkeeping; it never draws from the measurement streams, so a run
with and without evaluator access makes identical decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .geometry import PureState, TangentVector, frobenius_dist2, haar_state
from .rng import substream


@dataclass(frozen=True)
class DifferenceObservation:
    """Half difference y = (x_plus - x_minus) / 2 of a symmetric pair."""

    y: float
    x_plus: int
    x_minus: int
    tangent_dir: TangentVector | None = None
    step_scale: float | None = None


class Environment:
    """Unknown pure state, measured one fresh copy at a time.

    Not safe for concurrent use: every measurement advances a random stream.
    """

    def __init__(self, d: int, seed: int, state: PureState):
        if state.dim != d:
            raise DimensionError(f"state has d={state.dim}, environment d={d}")
        self.d = d
        self.seed = int(seed)
        self._state = state
        self._direct = substream(self.seed, "direct")
        self.copies_consumed = 0

    def _probabilities(self, actions: np.ndarray) -> np.ndarray:
        actions = np.asarray(actions, dtype=complex)
        if actions.shape[-1] != self.d:
            raise DimensionError(f"action has d={actions.shape[-1]}, environment d={self.d}")
        p = np.abs(actions.conj() @ self._state.amplitudes) ** 2
        return np.clip(p, 0.0, 1.0)

    def measure(self, action: PureState) -> int:
        """One copy measured with {A, I - A}; returns 1 on the A outcome."""
        p = self._probabilities(action.amplitudes)
        self.copies_consumed += 1
        return int(self._direct.random() < p)

    def measure_pair(self, a_plus: PureState, a_minus: PureState,
                     direction: TangentVector | None = None,
                     step_scale: float | None = None) -> DifferenceObservation:
        """Two independent copies, one per action of a symmetric pair."""
        xp = self.measure(a_plus)
        xm = self.measure(a_minus)
        return DifferenceObservation((xp - xm) / 2.0, xp, xm, direction, step_scale)

    def measure_pairs(self, plus: np.ndarray, minus: np.ndarray, reps: int,
                      key: tuple, limit: int | None = None) -> np.ndarray:
        """Batch of symmetric-pair measurements drawn from substream ``key``.

        ``plus`` and ``minus`` hold k action amplitude vectors each (shape
        (k, d)). Every pair is measured ``reps`` times. Copies are taken in
        the order (pair ascending, repetition ascending, sign + then -), and
        only the first ``limit`` of them are measured when ``limit`` is set;
        unmeasured slots are returned as -1.

        Returns an int8 array of shape (k, reps, 2).
        """
        plus = np.atleast_2d(plus)
        minus = np.atleast_2d(minus)
        k = plus.shape[0]
        probs = np.stack([self._probabilities(plus), self._probabilities(minus)], axis=1)
        total = 2 * k * reps
        n = total if limit is None else max(0, min(int(limit), total))
        u = substream(self.seed, *key).random(total)
        bits = u < np.repeat(probs[:, None, :], reps, axis=1).reshape(-1)
        out = bits.astype(np.int8)
        out[n:] = -1
        self.copies_consumed += n
        return out.reshape(k, reps, 2)

    def measure_counts(self, actions: np.ndarray, reps: int, key: tuple) -> np.ndarray:
        """Number of A outcomes when each action is measured ``reps`` times."""
        actions = np.atleast_2d(actions)
        probs = self._probabilities(actions)
        counts = substream(self.seed, *key).binomial(reps, probs)
        self.copies_consumed += actions.shape[0] * reps
        return counts


class Evaluator:
    """Ground-truth access for bookkeeping; never used by the learner."""

    def __init__(self, env: Environment):
        self._env = env

    @property
    def hidden_state(self) -> PureState:
        return self._env._state

    def true_expectation(self, action: PureState) -> float:
        """Tr(rho A) without consuming a copy."""
        return float(self._env._probabilities(action.amplitudes))

    def true_expectations(self, actions: np.ndarray) -> np.ndarray:
        return self._env._probabilities(np.atleast_2d(actions))

    def regret_increment(self, action: PureState) -> float:
        """1 - Tr(rho A), the infidelity of the action."""
        return 1.0 - self.true_expectation(action)

    def distance2(self, state: PureState) -> float:
        """Squared Frobenius distance between rho and ``state``."""
        return frobenius_dist2(self._env._state, state)


def new_environment(d: int, seed: int, state: PureState | None = None) -> Environment:
    """Environment with the given hidden state, or a Haar-random one.

    The random state comes from the ``"state"`` substream of ``seed``.
    """
    if d < 2:
        raise DimensionError(f"d must be >= 2, got {d}")
    if state is None:
        state = haar_state(d, substream(seed, "state"))
    return Environment(d, seed, state)
