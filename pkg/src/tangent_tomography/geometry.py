"""Pure states, tangent spaces and retractions on CP^(d-1).

A pure state is stored as a unit amplitude vector ``psi``; the physical
object is the rank-one projector ``|psi><psi|`` so every comparison below is
made at projector level (overlap moduli), never on raw amplitudes.

A tangent vector at ``C = |psi><psi|`` is stored through the complex vector
``phi`` orthogonal to ``psi``; it encodes the Hermitian matrix

    V = (|phi><psi| + |psi><phi|) / sqrt(2),

whose Frobenius norm equals the Euclidean norm of ``phi``. Dense d x d
matrices are only built on request (``to_matrix``) and in test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BaseMismatchError, DimensionError, DomainError, ValidationError

NORM_TOL = 1e-10
SQRT2 = math.sqrt(2.0)
# Largest tangent norm for which the inverse retraction is stable.
UPDATE_DOMAIN = math.sqrt(3.0 / 8.0)
ZERO_TANGENT = 1e-14


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector in C^d standing for the projector |psi><psi|."""

    amplitudes: np.ndarray

    def __post_init__(self):
        psi = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if psi.size < 2:
            raise DimensionError(f"pure states need d >= 2, got d={psi.size}")
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"amplitudes have norm {norm!r}, expected 1")
        psi.setflags(write=False)
        object.__setattr__(self, "amplitudes", psi)

    @classmethod
    def from_vector(cls, vec) -> PureState:
        """Normalize an arbitrary nonzero vector into a pure state."""
        v = np.asarray(vec, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(v / norm)

    @classmethod
    def basis(cls, d: int, k: int) -> PureState:
        e = np.zeros(d, dtype=complex)
        e[k] = 1.0
        return cls(e)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def overlap(self, other: PureState) -> complex:
        """<self|other>."""
        _check_dims(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def same_projector(self, other: PureState, tol: float = NORM_TOL) -> bool:
        if self.dim != other.dim:
            return False
        return abs(self.overlap(other)) ** 2 >= 1.0 - tol

    def __repr__(self):
        return f"PureState(d={self.dim}, amplitudes={np.array2string(self.amplitudes, precision=4)})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Element of the tangent space at ``base``, stored through ``phi``.

    Sums and real multiples of vectors sharing a base projector are again
    tangent vectors; complex scalars are rejected because the tangent space
    is a real vector space.
    """

    base: PureState
    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=complex).reshape(-1)
        if phi.size != self.base.dim:
            raise DimensionError(f"phi has length {phi.size}, base has d={self.base.dim}")
        residual = abs(np.vdot(phi, self.base.amplitudes))
        if residual > NORM_TOL * max(1.0, float(np.linalg.norm(phi))):
            raise ValidationError(f"phi is not orthogonal to the base (|<phi|psi>| = {residual:.3e})")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def zero(cls, base: PureState) -> TangentVector:
        return cls(base, np.zeros(base.dim, dtype=complex))

    @property
    def dim(self) -> int:
        return self.base.dim

    def norm(self) -> float:
        """Frobenius norm of the encoded matrix."""
        return float(np.linalg.norm(self.phi))

    def to_matrix(self) -> np.ndarray:
        psi = self.base.amplitudes
        m = np.outer(self.phi, psi.conj())
        return (m + m.conj().T) / SQRT2

    def phi_at(self, base: PureState) -> np.ndarray:
        """Coordinates of the same matrix relative to the amplitudes of ``base``.

        ``base`` must be the same projector as ``self.base``; if it carries a
        different global phase, ``phi`` picks up that phase.
        """
        if base is self.base:
            return self.phi
        _check_dims(self.base, base)
        ov = np.vdot(self.base.amplitudes, base.amplitudes)
        if abs(ov) ** 2 < 1.0 - NORM_TOL:
            raise BaseMismatchError("tangent vectors are anchored at different base states")
        return self.phi * (ov / abs(ov))

    def _coerce(self, other: TangentVector) -> np.ndarray:
        if not isinstance(other, TangentVector):
            return NotImplemented
        return other.phi_at(self.base)

    def __add__(self, other):
        phi = self._coerce(other)
        if phi is NotImplemented:
            return NotImplemented
        return TangentVector(self.base, self.phi + phi)

    def __sub__(self, other):
        phi = self._coerce(other)
        if phi is NotImplemented:
            return NotImplemented
        return TangentVector(self.base, self.phi - phi)

    def __neg__(self):
        return TangentVector(self.base, -self.phi)

    def __mul__(self, c):
        if isinstance(c, (complex, np.complexfloating)) and complex(c).imag != 0:
            raise ValidationError("tangent spaces are real vector spaces; got a complex scalar")
        return TangentVector(self.base, self.phi * float(np.real(c)))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def __repr__(self):
        return f"TangentVector(d={self.dim}, norm={self.norm():.6g})"


@dataclass(frozen=True, eq=False)
class TangentBasis:
    """Frobenius-orthonormal basis of the tangent space at ``base``."""

    base: PureState
    vectors: tuple[TangentVector, ...]

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, i):
        return self.vectors[i]

    def phis(self) -> np.ndarray:
        """Stacked coordinate vectors, shape (d_tan, d)."""
        return np.array([v.phi for v in self.vectors])

    def coordinates(self, v: TangentVector) -> np.ndarray:
        """Real coordinates of ``v`` in this basis."""
        phi = v.phi_at(self.base)
        return np.real(self.phis().conj() @ phi)

    def from_coordinates(self, coords) -> TangentVector:
        coords = np.asarray(coords, dtype=float)
        return TangentVector(self.base, coords @ self.phis())


def _check_dims(p: PureState, q: PureState):
    if p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")


def tangent_dim(d: int) -> int:
    """Real dimension 2(d-1) of the tangent space of CP^(d-1)."""
    if d < 2:
        raise DimensionError(f"d must be >= 2, got {d}")
    return 2 * (d - 1)


def tangent_inner(v1: TangentVector, v2: TangentVector) -> float:
    """Frobenius inner product Tr(V1 V2) = Re<phi1|phi2>."""
    if v1.dim != v2.dim:
        raise DimensionError(f"dimension mismatch: {v1.dim} vs {v2.dim}")
    return float(np.real(np.vdot(v1.phi, v2.phi_at(v1.base))))


def complete_tangent_basis(base: PureState) -> TangentBasis:
    """Deterministic orthonormal tangent basis at ``base``.

    ``psi`` is completed to an orthonormal basis of C^d by Gram-Schmidt over
    the canonical vectors, picking at every step the canonical vector with
    the largest residual (lowest index on ties). Each completion vector
    ``e_k`` then yields the two tangent directions ``e_k`` and ``i e_k``.
    """
    d = base.dim
    q = [base.amplitudes]
    eye = np.eye(d, dtype=complex)
    for _ in range(d - 1):
        Q = np.array(q).T
        # two passes of classical Gram-Schmidt keep the residuals orthogonal
        resid = eye - Q @ (Q.conj().T @ eye)
        resid = resid - Q @ (Q.conj().T @ resid)
        norms = np.linalg.norm(resid, axis=0)
        k = int(np.argmax(norms))
        q.append(resid[:, k] / norms[k])
    vectors = []
    for e in q[1:]:
        vectors.append(TangentVector(base, e))
        vectors.append(TangentVector(base, 1j * e))
    return TangentBasis(base, tuple(vectors))


def _check_hermitian(X: np.ndarray, d: int) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.shape != (d, d):
        raise DimensionError(f"expected a {d}x{d} matrix, got shape {X.shape}")
    if np.max(np.abs(X - X.conj().T)) > NORM_TOL:
        raise ValidationError("matrix is not Hermitian")
    return X


def project_to_tangent(base: PureState, X) -> TangentVector:
    """Orthogonal projection C X (I-C) + (I-C) X C onto the tangent space.

    The result has ``phi = sqrt(2) (I - C) X |psi>``.
    """
    X = _check_hermitian(X, base.dim)
    psi = base.amplitudes
    x_psi = X @ psi
    phi = SQRT2 * (x_psi - psi * np.vdot(psi, x_psi))
    return TangentVector(base, phi)


def tangent_displacement(base: PureState, target: PureState) -> TangentVector:
    """Tangent target P_C(rho - C) for rho = |target><target|, in O(d).

    Equal to ``project_to_tangent(base, rho - C)`` without forming matrices.
    """
    _check_dims(base, target)
    psi, chi = base.amplitudes, target.amplitudes
    a = np.vdot(psi, chi)
    phi = SQRT2 * np.conj(a) * (chi - psi * a)
    return TangentVector(base, phi)


def retract(base: PureState, v: TangentVector, tau: float) -> PureState:
    """Move from ``base`` along the unit tangent direction ``v`` by ``tau``.

    Returns cos(tau/sqrt2)|psi> + sin(tau/sqrt2)|phi>; its projector is the
    geodesic retraction of ``tau * V``. ``tau`` may be negative.
    """
    phi = v.phi_at(base)
    n = np.linalg.norm(phi)
    if abs(n - 1.0) > NORM_TOL:
        raise ValidationError(f"retraction needs a unit tangent direction, got norm {n!r}")
    half = tau / SQRT2
    return PureState(math.cos(half) * base.amplitudes + math.sin(half) * phi)


def fidelity(p: PureState, q: PureState) -> float:
    """|<p|q>|^2, clipped to [0, 1]."""
    f = abs(p.overlap(q)) ** 2
    return min(1.0, max(0.0, f))


def frobenius_dist2(p: PureState, q: PureState) -> float:
    """Squared Frobenius distance of the projectors, 2(1 - |<p|q>|^2)."""
    return 2.0 * (1.0 - fidelity(p, q))


def secant_tangent_norm2(x: float) -> float:
    """Squared tangent-target norm for a squared distance ``x``: x(1 - x/2)."""
    if not 0.0 <= x <= 2.0:
        raise DomainError(f"squared distance must lie in [0, 2], got {x!r}")
    return x * (1.0 - x / 2.0)


def gamma_hat(norm: float) -> float:
    """Recovered geodesic angle (1/2) arcsin(min(1, sqrt2 * norm)), in [0, pi/4]."""
    if norm < 0:
        raise DomainError(f"norm must be nonnegative, got {norm!r}")
    return 0.5 * math.asin(min(1.0, SQRT2 * norm))


def update_base(base: PureState, delta_hat: TangentVector) -> PureState:
    """Inverse-retraction update of the base state from a tangent estimate.

    For the exact tangent target of a state within squared distance 1/2 the
    update lands on that state.
    """
    phi = delta_hat.phi_at(base)
    n = float(np.linalg.norm(phi))
    if n <= ZERO_TANGENT:
        return base
    psi = base.amplitudes
    u = phi - psi * np.vdot(psi, phi)  # drop rounding leakage before normalizing
    direction = TangentVector(base, u / np.linalg.norm(u))
    return retract(base, direction, SQRT2 * gamma_hat(n))


def update_lipschitz_bound(x: float) -> float:
    """Analytic bound on the derivative of ``update_base`` at tangent norm ``x``.

    Valid for 0 <= x <= sqrt(3/8); increasing in ``x``.
    """
    if not 0.0 <= x <= UPDATE_DOMAIN + 1e-15:
        raise DomainError(f"x must lie in [0, sqrt(3/8)], got {x!r}")
    w = math.sqrt(max(0.0, 1.0 - 2.0 * x * x))
    return (1.0 + 2.0 * x / w
            + 2.0 * SQRT2 * x ** 3 / (w * (1.0 + w) ** 2)
            + 2.0 * SQRT2 * x / (1.0 + w))


def haar_state(d: int, rng: np.random.Generator) -> PureState:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    if d < 2:
        raise DimensionError(f"d must be >= 2, got {d}")
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState.from_vector(z)
