"""Synthetic linear-model experiments shared by unit and acceptance tests."""

import math

import numpy as np

from tangent_tomography.estimation import design_init, design_step, mom_select_phis, step_scale


def mom_failure_trials(d, N, trials, seed, mu=16.0, beta_var=4.0, alpha=8, target_norm=0.3):
    """Count MoM failures of the 72(d-1) weighted ball on a synthetic tangent model.

    Observations follow Y = <delta*, O> + eps with eps = +-1/sqrt(omega), so
    omega * Var(eps) = 1 exactly. Work is done in tangent coordinates of an
    orthonormal basis, where the weighted norm is sqrt(lam) times the
    Euclidean norm. All trials run in lockstep.
    """
    rng = np.random.default_rng(seed)
    d_tan = 2 * (d - 1)
    omega = mu / beta_var
    sigma = 1.0 / math.sqrt(omega)
    target = rng.standard_normal((trials, d_tan))
    target *= target_norm / np.linalg.norm(target, axis=1, keepdims=True)
    sums = np.zeros((trials, N, d_tan))
    ds = design_init(mu, omega)
    for _ in range(math.ceil(alpha * mu)):
        sc = step_scale(ds.lam)
        eps = sigma * rng.choice([-1.0, 1.0], size=(trials, N, d_tan))
        y = sc * target[:, None, :] + eps
        sums += omega * sc * y
        ds = design_step(ds)
    lam = ds.lam
    biased_target = (1.0 - mu / lam) * target
    fails = 0
    for k in range(trials):
        j, _ = mom_select_phis(sums[k] / lam, lam)
        err = sums[k, j] / lam - biased_target[k]
        fails += lam * float(err @ err) > 72 * (d - 1)
    return fails, trials
