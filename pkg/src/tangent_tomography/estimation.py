"""Isotropic tangent design, block least squares and median-of-means selection.

Under symmetric exploration of an orthonormal tangent basis the design
superoperator stays a multiple of the identity, so it is carried as a single
scalar ``lam``. The block estimators are then ``sum(omega * y * O) / lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .environment import DifferenceObservation
from .errors import DomainError, ValidationError
from .geometry import PureState, TangentVector

C0_SQ = math.sin(1.0) ** 2


@dataclass(frozen=True)
class DesignState:
    mu_prev: float
    omega: float
    lam: float
    steps: int = 0


def design_init(mu_prev: float, omega: float = 0.0) -> DesignState:
    """Hot start: the design begins at ``mu_prev`` times the identity."""
    if not mu_prev > 0:
        raise DomainError(f"mu_prev must be positive, got {mu_prev!r}")
    if omega < 0:
        raise DomainError(f"omega must be nonnegative, got {omega!r}")
    return DesignState(float(mu_prev), float(omega), float(mu_prev), 0)


def step_size(lam: float) -> float:
    """Exploration radius tau = 1/sqrt(lam)."""
    return 1.0 / math.sqrt(lam)


def step_scale(lam: float) -> float:
    """Coefficient of the observation direction, sin(sqrt(2/lam))/sqrt(2)."""
    return math.sin(math.sqrt(2.0 / lam)) / math.sqrt(2.0)


def design_increment(lam, omega):
    """Per-step growth (omega/2) sin^2(sqrt(2/lam)); works on arrays."""
    return 0.5 * omega * np.sin(np.sqrt(2.0 / lam)) ** 2


def design_step(ds: DesignState) -> DesignState:
    """One full step over every tangent direction."""
    lam = ds.lam + float(design_increment(ds.lam, ds.omega))
    return replace(ds, lam=lam, steps=ds.steps + 1)


def design_advance(lam, omega, steps):
    """Run the scalar recursion elementwise; ``steps`` may vary per entry.

    Returns the final eigenvalues. Entries stop once their own step count
    is reached.
    """
    lam = np.array(lam, dtype=float)
    omega = np.broadcast_to(np.asarray(omega, dtype=float), lam.shape)
    steps = np.broadcast_to(np.asarray(steps, dtype=np.int64), lam.shape)
    for s in range(int(steps.max(initial=0))):
        active = steps > s
        lam = np.where(active, lam + design_increment(lam, omega), lam)
    return lam


@dataclass(frozen=True)
class BlockAccumulator:
    base: PureState
    weighted_sum: TangentVector
    block_index: int = 0

    @classmethod
    def empty(cls, base: PureState, block_index: int = 0) -> BlockAccumulator:
        return cls(base, TangentVector.zero(base), block_index)

    def accumulate(self, obs: DifferenceObservation, direction: TangentVector,
                   omega: float) -> BlockAccumulator:
        """Add omega * y * scale * direction to the running sum."""
        if obs.step_scale is None:
            raise ValidationError("observation carries no step scale")
        phi = direction.phi_at(self.base)
        if abs(np.linalg.norm(phi) - 1.0) > 1e-10:
            raise ValidationError("direction must be a unit tangent vector")
        coef = omega * obs.y * obs.step_scale
        return replace(self, weighted_sum=TangentVector(self.base, self.weighted_sum.phi + coef * phi))

    def solve(self, final_lambda: float) -> TangentVector:
        return solve_block(self, final_lambda)


def solve_block(acc: BlockAccumulator, final_lambda: float) -> TangentVector:
    """Isotropic least-squares solution weighted_sum / lam."""
    if not final_lambda > 0:
        raise DomainError(f"final_lambda must be positive, got {final_lambda!r}")
    return acc.weighted_sum / final_lambda


def weighted_norm(v: TangentVector, lam: float) -> float:
    """Design-weighted norm sqrt(<v, lam v>)."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    return math.sqrt(lam) * v.norm()


def bias_vector(delta_star: TangentVector, mu_prev: float, final_lambda: float) -> TangentVector:
    """Regularization bias (mu_prev / lam) * delta_star left by the hot start."""
    if not final_lambda > 0:
        raise DomainError(f"final_lambda must be positive, got {final_lambda!r}")
    return delta_star * (mu_prev / final_lambda)


@dataclass(frozen=True)
class MoMResult:
    selected_index: int
    estimate: TangentVector
    median_distances: np.ndarray


def lower_median(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Middle order statistic; for even counts the lower of the two."""
    values = np.sort(values, axis=axis)
    k = (values.shape[axis] - 1) // 2
    return np.take(values, k, axis=axis)


def median_distances(phis: np.ndarray, lam: float) -> np.ndarray:
    """For each row j, lower median over l != j of sqrt(lam) |phi_j - phi_l|."""
    n = phis.shape[0]
    diff = phis[:, None, :] - phis[None, :, :]
    dist = math.sqrt(lam) * np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1))
    off = ~np.eye(n, dtype=bool)
    others = dist[off].reshape(n, n - 1)
    return lower_median(others, axis=1)


def mom_select_phis(phis: np.ndarray, lam: float) -> tuple[int, np.ndarray]:
    """Array form of :func:`mom_select`: returns (index, median distances)."""
    if phis.shape[0] < 2:
        raise ValidationError(f"median of means needs at least 2 blocks, got {phis.shape[0]}")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    y = median_distances(phis, lam)
    return int(np.argmin(y)), y  # argmin keeps the lowest index on ties


def mom_select(estimates, lam: float) -> MoMResult:
    """Select the block estimate with the smallest median weighted distance."""
    estimates = list(estimates)
    if len(estimates) < 2:
        raise ValidationError(f"median of means needs at least 2 blocks, got {len(estimates)}")
    base = estimates[0].base
    phis = np.array([e.phi_at(base) for e in estimates])
    j, y = mom_select_phis(phis, lam)
    return MoMResult(j, estimates[j], y)


def accumulate_many(sums: np.ndarray, ys: np.ndarray, phis: np.ndarray,
                    scale: float, omega: float) -> np.ndarray:
    """Lockstep update of N block sums for one step.

    ``sums`` has shape (N, d), ``ys`` (d_tan, N) holds the half differences
    and ``phis`` (d_tan, d) the basis directions.
    """
    return sums + (omega * scale) * (ys.T @ phis)
