"""Epoch-based adaptive tomography with symmetric-pair tangent exploration.

Each epoch fixes a base state, probes every tangent basis direction with the
pair of actions retract(C, v, +tau) and retract(C, v, -tau) for N independent
blocks, shrinks tau as the isotropic design grows, and finally moves the base
along the median-of-means tangent estimate. The design precision reached at
the end of an epoch hot-starts the next one.

Regret and infidelity bookkeeping goes through an optional
:class:`~.environment.Evaluator`; the learner never reads it, so decisions
are the same with or without accounting.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .environment import Environment, Evaluator
from .errors import ConfigError, DimensionError
from .estimation import (C0_SQ, DesignState, accumulate_many, design_init, design_step,
                         mom_select_phis, step_scale, step_size)
from .geometry import (SQRT2, UPDATE_DOMAIN, PureState, TangentBasis, TangentVector,
                       complete_tangent_basis, fidelity, frobenius_dist2, tangent_dim,
                       update_base)
from .warmup import WarmupConfig, plan_directions, run_warmup

PRESETS = ("paper", "practical")


@dataclass(frozen=True)
class AlgorithmConstants:
    d: int
    T_total: int
    preset: str
    d_tan: int
    N: int
    c0_sq: float
    beta_stat: float
    beta_max: float
    L_r: float
    beta_var: float
    alpha: int
    mu_0: float
    delta: float
    delta_w: float
    overrides: dict = field(default_factory=dict)

    def epoch_length(self, mu_prev: float) -> int:
        return math.ceil(self.alpha * mu_prev)

    def epoch_weight(self, mu_prev: float) -> float:
        return mu_prev / self.beta_var

    def epoch_cost(self, mu_prev: float) -> int:
        """Copies used by a full epoch started at precision ``mu_prev``."""
        return 2 * self.N * self.d_tan * self.epoch_length(mu_prev)

    def growth_factor(self) -> float:
        """Guaranteed per-epoch precision ratio sqrt(1 + 16 L_r^4)."""
        return math.sqrt(1.0 + 16.0 * self.L_r ** 4)


_OVERRIDABLE = ("d_tan", "N", "c0_sq", "beta_stat", "beta_max", "L_r",
                "beta_var", "alpha", "mu_0", "delta", "delta_w")
_INTEGER_KEYS = ("d_tan", "N", "alpha")


def derive_constants(d: int, T_total: int, preset: str = "practical",
                     overrides: dict | None = None) -> AlgorithmConstants:
    """Algorithm constants for dimension ``d`` and horizon ``T_total``.

    Fields are derived in dependency order and every override replaces its
    field before the fields that depend on it are computed.
    """
    if d < 2:
        raise DimensionError(f"d must be >= 2, got {d}")
    if T_total < 1:
        raise ConfigError(f"T_total must be >= 1, got {T_total}")
    if preset not in PRESETS:
        raise ConfigError(f"preset must be one of {PRESETS}, got {preset!r}")
    overrides = dict(overrides or {})
    for key in overrides:
        if key not in _OVERRIDABLE:
            raise ConfigError(f"unknown override key {key!r}")
    paper = preset == "paper"
    v: dict = {}

    def put(key, default):
        val = overrides.get(key, default)
        v[key] = int(val) if key in _INTEGER_KEYS else float(val)

    put("d_tan", tangent_dim(d))
    put("delta", 1.0 / T_total ** 2)
    put("delta_w", 1.0 / T_total ** 2)
    put("c0_sq", C0_SQ)
    put("beta_stat", 72.0 * (d - 1) if paper else 2.0 * (d - 1))
    put("beta_max", 4.0 * v["beta_stat"])
    put("L_r", 6.0)
    put("beta_var", v["L_r"] ** 2 * v["beta_max"] + 1.0 if paper else 4.0)
    put("alpha", math.ceil(8.0 * v["L_r"] ** 4 * v["beta_var"] / v["c0_sq"]) if paper else 8)
    put("mu_0", 4.0 * v["L_r"] ** 2 * v["beta_max"] if paper else 16.0)
    if not 0 < v["delta"] < 1 or not 0 < v["delta_w"] < 1:
        raise ConfigError("delta and delta_w must lie in (0, 1)")
    log_term = math.log(T_total / v["delta"])
    put("N", 2 * math.ceil((12.0 if paper else 3.0) * log_term))

    if v["beta_var"] < 1:
        raise ConfigError(f"beta_var must be >= 1, got {v['beta_var']}")
    if v["mu_0"] < 2:
        raise ConfigError(f"mu_0 must be >= 2, got {v['mu_0']}")
    if v["N"] < 2 or v["N"] % 2:
        raise ConfigError(f"N must be even and >= 2, got {v['N']}")
    if v["alpha"] < 1:
        raise ConfigError(f"alpha must be >= 1, got {v['alpha']}")
    if v["d_tan"] != tangent_dim(d):
        raise ConfigError(f"d_tan is fixed at 2(d-1) = {tangent_dim(d)}")
    return AlgorithmConstants(d=d, T_total=int(T_total), preset=preset, overrides=overrides, **v)


def epoch_count_bound(consts: AlgorithmConstants, mu_0: float, T_total: int,
                      q: float | Sequence[float] | None = None) -> int:
    """Smallest M whose first M epochs cost at least ``T_total`` copies.

    Epoch m is started at precision mu_0 * q_1 * ... * q_(m-1). ``q`` is the
    guaranteed growth factor by default, a constant ratio if a float, or a
    sequence of per-epoch ratios (the last one repeats).
    """
    if q is None:
        ratios: Sequence[float] = [consts.growth_factor()]
    elif isinstance(q, (int, float)):
        ratios = [float(q)]
    else:
        ratios = [float(x) for x in q] or [consts.growth_factor()]
    if min(ratios) <= 1.0:
        raise ConfigError("epoch growth ratios must exceed 1")
    mu, spent, m = float(mu_0), 0, 0
    while True:
        m += 1
        spent += consts.epoch_cost(mu)
        if spent >= T_total:
            return m
        mu = mu * ratios[min(m - 1, len(ratios) - 1)]


@dataclass(frozen=True)
class Checkpoint:
    """State in effect when copy ``t`` was measured.

    ``epoch`` 0 and ``step`` 0 denote the warm-up; ``lam`` is the design
    eigenvalue that set the step size of copy ``t``.
    """

    t: int
    epoch: int
    step: int
    lam: float | None
    cumulative_regret: float | None
    online_infidelity: float | None


@dataclass(frozen=True)
class EpochSummary:
    m: int
    mu_prev: float
    omega: float
    T_m: int
    steps: int
    copies: int
    truncated: bool
    mu: float | None = None
    delta_norm: float | None = None
    selected_index: int | None = None
    clamped: bool = False
    # evaluator diagnostics, None when accounting is off
    base_dist2: float | None = None
    precondition: bool | None = None
    max_weighted_variance: float | None = None
    envelope_violations: int | None = None


@dataclass(frozen=True)
class EpochState:
    m: int
    base: PureState
    mu_prev: float
    omega: float
    T_m: int
    design: DesignState
    basis: TangentBasis
    sums: np.ndarray  # (N, d) block sums of omega * y * O


def start_epoch(m: int, base: PureState, mu_prev: float, consts: AlgorithmConstants) -> EpochState:
    """Fresh epoch hot-started at ``mu_prev``; no tangent data carries over."""
    omega = consts.epoch_weight(mu_prev)
    return EpochState(m=m, base=base, mu_prev=mu_prev, omega=omega,
                      T_m=consts.epoch_length(mu_prev), design=design_init(mu_prev, omega),
                      basis=complete_tangent_basis(base),
                      sums=np.zeros((consts.N, base.dim), dtype=complex))


def step_actions(base: PureState, phis: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Amplitudes of the plus and minus actions for every basis direction."""
    half = step_size(lam) / SQRT2
    c, s = math.cos(half), math.sin(half)
    centre = c * base.amplitudes
    return centre + s * phis, centre - s * phis


class RegretAccountant:
    """Cumulative regret over copies with exact prefix values at checkpoints.

    Block sums are kept as correctly rounded ``math.fsum`` partials so the
    running total is the correctly rounded sum of per-block sums, and
    recorded values are non-decreasing.
    """

    def __init__(self, evaluator: Evaluator | None, T_total: int, every: int):
        self.evaluator = evaluator
        self.T_total = T_total
        self.every = max(1, int(every))
        self.t = 0
        self._partials: list[float] = []
        self.checkpoints: list[Checkpoint] = []
        self._last_t = 0

    @property
    def total(self) -> float | None:
        if self.evaluator is None:
            return None
        return math.fsum(self._partials)

    def _prefix(self, incr: np.ndarray | None, k: int) -> float | None:
        if incr is None:
            return None
        return math.fsum(self._partials + [math.fsum(incr[:k])])

    def advance(self, n: int, incr: np.ndarray | None, epoch: int, step: int,
                lam: float | None, infidelity: float | None, boundary: bool = False):
        """Record ``n`` copies with per-copy regrets ``incr`` (or None)."""
        if n <= 0:
            return
        start = self.t
        end = start + n
        t = (start // self.every + 1) * self.every
        marks = list(range(t, end + 1, self.every))
        if (boundary or end == self.T_total) and (not marks or marks[-1] != end):
            marks.append(end)
        for mark in marks:
            self.checkpoints.append(Checkpoint(mark, epoch, step, lam,
                                               self._prefix(incr, mark - start), infidelity))
        if incr is not None:
            self._partials.append(math.fsum(incr[:n]))
        self.t = end


def _pair_regrets(evaluator: Evaluator, plus: np.ndarray, minus: np.ndarray, N: int) -> np.ndarray:
    """Per-copy regrets in measurement order (direction, block, sign)."""
    rp = 1.0 - evaluator.true_expectations(plus)
    rm = 1.0 - evaluator.true_expectations(minus)
    pair = np.stack([rp, rm], axis=1)  # (d_tan, 2)
    return np.repeat(pair[:, None, :], N, axis=1).reshape(-1)


def run_epoch(env: Environment, es: EpochState, consts: AlgorithmConstants, budget_remaining: int,
              accountant: RegretAccountant | None = None, evaluator: Evaluator | None = None
              ) -> tuple[EpochState | None, EpochSummary, int]:
    """Run one epoch within ``budget_remaining`` copies.

    Returns the next epoch state (None if the epoch was cut short by the
    budget), a summary and the number of copies used.
    """
    if budget_remaining < 0:
        raise ConfigError("budget_remaining must be nonnegative")
    if evaluator is None and accountant is not None:
        evaluator = accountant.evaluator
    N, d_tan = consts.N, consts.d_tan
    per_step = 2 * N * d_tan
    phis = es.basis.phis()
    design, sums = es.design, es.sums
    used = 0
    diag = None
    if evaluator is not None:
        x = evaluator.distance2(es.base)
        infid = x / 2.0
        diag = dict(base_dist2=x, precondition=x <= consts.L_r ** 2 * consts.beta_max / es.mu_prev,
                    max_weighted_variance=0.0, envelope_violations=0)
    else:
        infid = None

    steps_done = 0
    truncated = False
    for s in range(1, es.T_m + 1):
        remaining = budget_remaining - used
        if remaining <= 0:
            truncated = True
            break
        lam = design.lam
        plus, minus = step_actions(es.base, phis, lam)
        n = min(per_step, remaining)
        bits = env.measure_pairs(plus, minus, N, ("epoch", es.m, "step", s),
                                 limit=None if n == per_step else n)
        incr = None
        if evaluator is not None:
            incr = _pair_regrets(evaluator, plus, minus, N)
            pp = evaluator.true_expectations(plus)
            pm = evaluator.true_expectations(minus)
            var = (pp * (1 - pp) + pm * (1 - pm)) / 4.0
            diag["max_weighted_variance"] = max(diag["max_weighted_variance"],
                                                float(np.max(es.omega * var)))
            env2 = 2.0 * math.sin(step_size(lam) / SQRT2) ** 2
            bound = diag["base_dist2"] + env2
            viol = int(np.sum(1.0 - pp > bound + 1e-12) + np.sum(1.0 - pm > bound + 1e-12))
            diag["envelope_violations"] += viol
        last = n < per_step or s == es.T_m
        if accountant is not None:
            accountant.advance(n, incr, es.m, s, lam, infid, boundary=last)
        used += n
        if n < per_step:
            truncated = True
            break
        ys = (bits[:, :, 0].astype(float) - bits[:, :, 1]) / 2.0
        sums = accumulate_many(sums, ys, phis, step_scale(lam), es.omega)
        design = design_step(design)
        steps_done = s

    summary = EpochSummary(m=es.m, mu_prev=es.mu_prev, omega=es.omega, T_m=es.T_m,
                           steps=steps_done, copies=used, truncated=truncated,
                           **(diag or {}))
    if truncated:
        return None, summary, used

    mu = design.lam
    estimates = sums / mu
    j, _ = mom_select_phis(estimates, mu)
    delta = TangentVector(es.base, estimates[j])
    norm = delta.norm()
    new_base = update_base(es.base, delta)
    summary = replace(summary, mu=mu, delta_norm=norm, selected_index=j,
                      clamped=norm > UPDATE_DOMAIN)
    return start_epoch(es.m + 1, new_base, mu, consts), summary, used


@dataclass
class RunRecord:
    config: dict
    constants: AlgorithmConstants
    seed: int
    warmup_copies: int
    trace: list[Checkpoint]
    epochs: list[EpochSummary]
    final_estimate: PureState
    total_copies: int
    initial_estimate: PureState
    # evaluator-only: squared distance of the warm-up estimate and whether it
    # met the 1/4 closeness target; the run never branches on either
    warmup_distance2: float | None = None
    warmup_ok: bool | None = None

    @property
    def cumulative_regret(self) -> float | None:
        return self.trace[-1].cumulative_regret if self.trace else None

    def realized_ratios(self) -> list[float]:
        return [e.mu / e.mu_prev for e in self.epochs if e.mu is not None]


def default_checkpoint_every(T_total: int) -> int:
    return max(1, math.ceil(T_total / 1000))


def run(env: Environment, d: int, T_total: int, preset: str = "practical",
        overrides: dict | None = None, checkpoint_every: int | None = None,
        c_w: float = 40.0, evaluate: bool = True) -> RunRecord:
    """Warm-up followed by epochs until exactly ``T_total`` copies are used."""
    if env.d != d:
        raise DimensionError(f"environment has d={env.d}, run asked for d={d}")
    consts = derive_constants(d, T_total, preset, overrides)
    wcfg = WarmupConfig(c_w=c_w, delta_w=consts.delta_w)
    T0 = wcfg.total(d)
    if T_total < T0:
        raise ConfigError(f"horizon {T_total} is below the warm-up cost {T0}")
    every = checkpoint_every or default_checkpoint_every(T_total)
    evaluator = Evaluator(env) if evaluate else None
    acct = RegretAccountant(evaluator, T_total, every)

    start = env.copies_consumed
    base, used0 = run_warmup(env, d, wcfg)
    incr = None
    if evaluator is not None:
        dirs = plan_directions(env.seed, d, wcfg.n_directions(d))
        incr = np.repeat(1.0 - evaluator.true_expectations(dirs), wcfg.reps(d))
    acct.advance(used0, incr, 0, 0, None, None, boundary=True)

    initial = base
    w_dist = evaluator.distance2(base) if evaluator is not None else None
    epochs: list[EpochSummary] = []
    es = start_epoch(1, base, consts.mu_0, consts)
    remaining = T_total - used0
    while remaining > 0:
        nxt, summary, used = run_epoch(env, es, consts, remaining, acct, evaluator)
        epochs.append(summary)
        remaining -= used
        if nxt is None:
            break
        es = nxt
    final = es.base
    total = env.copies_consumed - start
    config = dict(d=d, T_total=T_total, preset=preset, overrides=dict(overrides or {}),
                  checkpoint_every=every, c_w=c_w)
    return RunRecord(config=config, constants=consts, seed=env.seed, warmup_copies=used0,
                     trace=acct.checkpoints, epochs=epochs, final_estimate=final,
                     total_copies=total, initial_estimate=initial, warmup_distance2=w_dist,
                     warmup_ok=None if w_dist is None else w_dist <= 0.25)


def constants_dict(consts: AlgorithmConstants) -> dict:
    out = asdict(consts)
    out["overrides"] = dict(consts.overrides)
    return out


__all__ = ["AlgorithmConstants", "Checkpoint", "EpochState", "EpochSummary", "RegretAccountant",
           "RunRecord", "derive_constants", "epoch_count_bound", "run", "run_epoch", "start_epoch",
           "step_actions", "default_checkpoint_every", "constants_dict"]
