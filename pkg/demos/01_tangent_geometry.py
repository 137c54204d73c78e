"""
Tangent-space geometry of pure states
=====================================

Walk through the local coordinates the learner works in: the tangent space
at a base state, the retraction back onto the manifold, and the closed-form
update that inverts it.
"""

import numpy as np

from tangent_tomography.geometry import (complete_tangent_basis, fidelity, frobenius_dist2,
                                         haar_state, project_to_tangent, retract,
                                         secant_tangent_norm2, tangent_displacement, update_base)

rng = np.random.default_rng(0)
d = 3

# a base state and a hidden target close to it; the update is only exact
# while the squared distance stays at most 1/2
C = haar_state(d, rng)
w = complete_tangent_basis(C).from_coordinates(rng.standard_normal(2 * (d - 1)))
rho = retract(C, w * (1 / w.norm()), 0.5)
print("squared distance |rho - C|^2:", frobenius_dist2(rho, C))

# the tangent space has real dimension 2(d-1)
basis = complete_tangent_basis(C)
print("tangent dimension:", len(basis))

# projecting rho - C gives the target the learner estimates; its norm is a
# function of the distance alone
delta = tangent_displacement(C, rho)
x = frobenius_dist2(rho, C)
print("|P(rho - C)|^2 =", delta.norm() ** 2, " x(1 - x/2) =", secant_tangent_norm2(x))

# retracting along a basis direction stays on the manifold
v = basis[0]
for tau in (0.0, 0.3, 1.0):
    A = retract(C, v, tau)
    print(f"tau={tau:.1f}  purity error={abs(np.trace(A.projector() @ A.projector()) - 1):.1e}")

# the update maps the exact displacement back to rho
new = update_base(C, delta)
print("infidelity after exact update:", 1 - fidelity(new, rho))

# a noisy displacement lands nearby
noisy = delta + basis.from_coordinates(1e-2 * rng.standard_normal(len(basis)))
print("infidelity after noisy update:", 1 - fidelity(update_base(C, noisy), rho))

# the projector is idempotent
X = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
X = X + X.conj().T
PX = project_to_tangent(C, X).to_matrix()
print("idempotence error:", np.abs(project_to_tangent(C, PX).to_matrix() - PX).max())
