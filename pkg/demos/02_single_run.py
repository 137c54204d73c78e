"""
One learning run
================

Run the full learner against a random hidden state and look at how regret
accumulates and how close the final estimate is.
"""

import numpy as np

from tangent_tomography.engine import run
from tangent_tomography.environment import Evaluator, new_environment

d, T, seed = 2, 1_000_000, 0
env = new_environment(d, seed)
rec = run(env, d, T)

print("warm-up copies:", rec.warmup_copies)
print("epochs:", len(rec.epochs))
for e in rec.epochs:
    if e.truncated:
        print(f"  epoch {e.m}: steps={e.steps:6d}  budget ran out mid-epoch")
    else:
        print(f"  epoch {e.m}: steps={e.steps:6d}  mu {e.mu_prev:9.1f} -> {e.mu:9.1f}  "
              f"|delta|={e.delta_norm:.4f}")

# regret grows much slower than the horizon
for c in rec.trace:
    if c.t in (10_000, 100_000, T):
        print(f"t={c.t:7d}  regret={c.cumulative_regret:8.2f}  regret/t={c.cumulative_regret / c.t:.2e}")

ev = Evaluator(env)
print("final infidelity:", ev.distance2(rec.final_estimate) / 2)
print("copies used:", rec.total_copies)
