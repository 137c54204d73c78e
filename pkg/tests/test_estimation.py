import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import design_matrix_dense, lower_median, tangent_orthonormal_basis
from tangent_tomography.environment import DifferenceObservation
from tangent_tomography.errors import BaseMismatchError, DomainError, ValidationError
from tangent_tomography.estimation import (C0_SQ, BlockAccumulator, accumulate_many, bias_vector,
                                           design_advance, design_init, design_step, mom_select,
                                           mom_select_phis, solve_block, step_scale, step_size,
                                           weighted_norm)
from tangent_tomography.geometry import (PureState, TangentVector, complete_tangent_basis,
                                         haar_state)


def test_design_init():
    ds = design_init(2.0)
    assert (ds.lam, ds.steps) == (2.0, 0)
    assert design_init(41472.0).lam == 41472.0
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            design_init(bad)


def test_design_step_values():
    ds = design_step(design_init(2.0, omega=2.0))
    assert ds.lam == pytest.approx(2 + math.sin(1.0) ** 2, abs=1e-15)
    assert ds.lam == pytest.approx(2.70807, abs=1e-5)
    assert ds.steps == 1
    lo, hi = 4 + 2 * C0_SQ * 2, 4 + 3 * 2
    assert lo <= ds.lam ** 2 <= hi
    assert ds.lam ** 2 == pytest.approx(7.3336, abs=1e-4)
    assert design_step(design_init(3.0, omega=0.0)).lam == 3.0


def test_step_helpers():
    assert step_size(4.0) == 0.5
    assert step_scale(2.0) == pytest.approx(math.sin(1.0) / math.sqrt(2))


def test_design_advance_matches_scalar_loop():
    mu = np.array([2.0, 5.0, 30.0])
    omega = mu / np.array([1.0, 2.0, 4.0])
    steps = np.array([0, 7, 40])
    got = design_advance(mu, omega, steps)
    for k in range(3):
        ds = design_init(mu[k], omega[k])
        for _ in range(steps[k]):
            ds = design_step(ds)
        assert got[k] == ds.lam


@settings(max_examples=100, deadline=None)
@given(st.floats(2.0, 1e3), st.floats(1.0, 50.0), st.integers(0, 300))
def test_growth_bounds(mu, beta_var, s):
    omega = mu / beta_var
    ds = design_init(mu, omega)
    prev = ds.lam
    for _ in range(s):
        ds = design_step(ds)
        assert ds.lam >= prev
        prev = ds.lam
    assert ds.lam >= mu
    lam2 = ds.lam ** 2
    assert mu ** 2 + 2 * C0_SQ * omega * s <= lam2 * (1 + 1e-12)
    assert lam2 <= (mu ** 2 + 3 * omega * s) * (1 + 1e-12)


# --- accumulators ----------------------------------------------------------

def setup(d=3, seed=0):
    rng = np.random.default_rng(seed)
    base = haar_state(d, rng)
    return rng, base, complete_tangent_basis(base)


def test_accumulate_trivial():
    rng, base, basis = setup()
    acc = BlockAccumulator.empty(base)
    obs0 = DifferenceObservation(0.0, 1, 1, step_scale=0.3)
    assert acc.accumulate(obs0, basis[0], 2.0).weighted_sum.norm() == 0.0
    obs = DifferenceObservation(0.5, 1, 0, step_scale=0.3)
    out = acc.accumulate(obs, basis[1], 2.0)
    np.testing.assert_allclose(out.weighted_sum.phi, 2.0 * 0.3 / 2 * basis[1].phi, atol=1e-15)


def test_accumulate_errors():
    rng, base, basis = setup()
    acc = BlockAccumulator.empty(base)
    other = complete_tangent_basis(haar_state(3, rng))
    obs = DifferenceObservation(0.5, 1, 0, step_scale=0.3)
    with pytest.raises(BaseMismatchError):
        acc.accumulate(obs, other[0], 1.0)
    with pytest.raises(ValidationError):
        acc.accumulate(DifferenceObservation(0.5, 1, 0), basis[0], 1.0)
    with pytest.raises(ValidationError):
        acc.accumulate(obs, basis[0] * 2.0, 1.0)


def test_accumulate_matches_dense_sum():
    rng, base, basis = setup(4, 1)
    acc = BlockAccumulator.empty(base)
    dense = np.zeros((4, 4), dtype=complex)
    omega = 1.7
    for _ in range(60):
        i = int(rng.integers(len(basis)))
        y = float(rng.choice([-0.5, 0.0, 0.5]))
        c = float(rng.uniform(0.05, 0.7))
        acc = acc.accumulate(DifferenceObservation(y, 0, 0, basis[i], c), basis[i], omega)
        dense += omega * y * c * basis[i].to_matrix()
    np.testing.assert_allclose(acc.weighted_sum.to_matrix(), dense, atol=1e-12)


def test_accumulate_many_matches_sequential():
    rng, base, basis = setup(3, 2)
    N, phis = 5, basis.phis()
    sums = np.zeros((N, 3), dtype=complex)
    accs = [BlockAccumulator.empty(base, j) for j in range(N)]
    omega = 0.8
    for lam in (4.0, 4.5, 5.2):
        ys = rng.choice([-0.5, 0.0, 0.5], size=(len(basis), N))
        sc = step_scale(lam)
        sums = accumulate_many(sums, ys, phis, sc, omega)
        for i in range(len(basis)):
            for j in range(N):
                obs = DifferenceObservation(float(ys[i, j]), 0, 0, basis[i], sc)
                accs[j] = accs[j].accumulate(obs, basis[i], omega)
    for j in range(N):
        np.testing.assert_allclose(sums[j], accs[j].weighted_sum.phi, atol=1e-13)


def test_solve_block():
    rng, base, basis = setup()
    assert solve_block(BlockAccumulator.empty(base), 3.0).norm() == 0.0
    acc = BlockAccumulator(base, basis[0] * 2.0)
    np.testing.assert_allclose(solve_block(acc, 4.0).phi, 0.5 * basis[0].phi)
    np.testing.assert_allclose(acc.solve(4.0).phi, 0.5 * basis[0].phi)
    with pytest.raises(DomainError):
        solve_block(acc, 0.0)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_solve_block_matches_dense_system(d):
    rng, base, basis = setup(d, d)
    mu, omega = 3.0, 1.2
    ds = design_init(mu, omega)
    acc = BlockAccumulator.empty(base)
    obs_mats = []
    for _ in range(25):
        sc = step_scale(ds.lam)
        for v in basis:
            y = float(rng.choice([-0.5, 0.0, 0.5]))
            acc = acc.accumulate(DifferenceObservation(y, 0, 0, v, sc), v, omega)
            obs_mats.append(sc * v.to_matrix())
        ds = design_step(ds)
    ref = tangent_orthonormal_basis(base.amplitudes)
    V = design_matrix_dense(ref, obs_mats, mu, omega)
    rhs = np.array([np.real(np.trace(b @ acc.weighted_sum.to_matrix())) for b in ref])
    x = np.linalg.solve(V, rhs)
    want = sum(c * b for c, b in zip(x, ref))
    np.testing.assert_allclose(solve_block(acc, ds.lam).to_matrix(), want, atol=1e-10)


@pytest.mark.parametrize("d", [2, 4, 6])
def test_design_isotropy_dense(d):
    rng, base, basis = setup(d, 10 + d)
    mu, omega = 4.0, 2.5
    ds = design_init(mu, omega)
    obs_mats = []
    for _ in range(200):
        sc = step_scale(ds.lam)
        obs_mats.extend(sc * v.to_matrix() for v in basis)
        ds = design_step(ds)
    V = design_matrix_dense(tangent_orthonormal_basis(base.amplitudes), obs_mats, mu, omega)
    np.testing.assert_allclose(V, ds.lam * np.eye(len(basis)), rtol=0, atol=1e-8 * ds.lam)


def test_weighted_norm():
    rng, base, basis = setup()
    assert weighted_norm(TangentVector.zero(base), 3.0) == 0.0
    assert weighted_norm(basis[0], 4.0) == 2.0
    v = basis.from_coordinates(rng.standard_normal(len(basis)))
    lam = 7.3
    dense = math.sqrt(np.real(np.trace(v.to_matrix() @ (lam * v.to_matrix()))))
    assert abs(weighted_norm(v, lam) - dense) <= 1e-12
    with pytest.raises(DomainError):
        weighted_norm(v, -1.0)


def test_bias_vector():
    rng, base, basis = setup()
    assert bias_vector(TangentVector.zero(base), 2.0, 5.0).norm() == 0.0
    v = basis.from_coordinates(rng.standard_normal(len(basis)))
    np.testing.assert_allclose(bias_vector(v, 5.0, 5.0).phi, v.phi)
    mu, lam = 3.0, 11.0
    B = bias_vector(v, mu, lam)
    dense = lam * np.real(np.trace(B.to_matrix() @ B.to_matrix()))
    assert abs(dense - mu ** 2 / lam * v.norm() ** 2) <= 1e-12
    with pytest.raises(DomainError):
        bias_vector(v, mu, 0.0)


# --- median of means -------------------------------------------------------

def test_mom_picks_majority():
    rng, base, basis = setup()
    v, w = basis[0] * 0.1, basis[1] * 5.0
    res = mom_select([v, v, w], 4.0)
    assert res.selected_index == 0
    assert res.median_distances[0] == 0.0
    same = mom_select([v] * 4, 2.0)
    assert same.selected_index == 0
    assert np.all(same.median_distances == 0)


def test_mom_brute_force_1d():
    rng, base, basis = setup()
    vals = [0, 0.1, 0.2, 5, 9]
    ests = [basis[0] * x for x in vals]
    lam = 2.0
    res = mom_select(ests, lam)
    med = [lower_median([math.sqrt(lam) * abs(a - b) for k, b in enumerate(vals) if k != j])
           for j, a in enumerate(vals)]
    np.testing.assert_allclose(res.median_distances, med, atol=1e-12)
    assert res.selected_index == int(np.argmin(med)) == 1


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_mom_matches_enumeration(seed, n):
    rng = np.random.default_rng(seed)
    base = haar_state(3, rng)
    basis = complete_tangent_basis(base)
    ests = [basis.from_coordinates(rng.standard_normal(len(basis))) for _ in range(n)]
    lam = float(rng.uniform(1, 10))
    res = mom_select(ests, lam)
    med = []
    for j in range(n):
        dists = [weighted_norm(ests[j] - ests[l], lam) for l in range(n) if l != j]
        med.append(lower_median(dists))
    best = min(range(n), key=lambda j: (med[j], j))
    np.testing.assert_allclose(res.median_distances, med, atol=1e-12)
    assert res.selected_index == best
    # lower median keeps at least half of the blocks within y_j* of the choice
    close = sum(weighted_norm(ests[res.selected_index] - e, lam) <= med[best] + 1e-12 for e in ests)
    assert close >= n / 2


def test_mom_errors():
    rng, base, basis = setup()
    with pytest.raises(ValidationError):
        mom_select([basis[0]], 1.0)
    other = complete_tangent_basis(haar_state(3, rng))
    with pytest.raises(BaseMismatchError):
        mom_select([basis[0], other[0]], 1.0)
    with pytest.raises(DomainError):
        mom_select_phis(basis.phis(), 0.0)


def test_mom_tie_break_lowest_index():
    phis = np.array([[0, 1], [0, -1], [0, 1], [0, -1]], dtype=complex)
    j, y = mom_select_phis(phis, 1.0)
    assert j == 0 and len(set(np.round(y, 12))) == 1


def test_unweighted_error_transfer():
    rng, base, basis = setup(3, 5)
    for _ in range(200):
        beta = float(rng.uniform(0.1, 10))
        lam = float(rng.uniform(2, 100))
        err = basis.from_coordinates(rng.standard_normal(len(basis)))
        err = err * (rng.uniform(0, 1) * math.sqrt(beta) / weighted_norm(err, lam))
        assert err.norm() ** 2 <= beta / lam * (1 + 1e-12)


def test_mom_concentration_small():
    from synthetic import mom_failure_trials
    fails, trials = mom_failure_trials(d=3, N=8, trials=200, seed=1)
    assert fails / trials <= math.exp(-8 / 8) + 3 * math.sqrt(math.exp(-1) / trials)
