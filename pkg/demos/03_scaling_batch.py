"""
Scaling across dimensions
=========================

Drive a small batch through the experiment harness, then read the summary it
writes. The same batch can be launched from the shell with

    tangent-tomography --dimension 2 3 --horizon 100000 --seeds 0..4 --out results
"""

import json
from pathlib import Path

from tangent_tomography.experiment import ExperimentConfig, run_batch

out = Path("results_demo")
cfg = ExperimentConfig(dimensions=(2, 3), horizon=100_000, seeds=tuple(range(4)), out=str(out))
results, summary = run_batch(cfg)

print("files:", sorted(p.name for p in out.iterdir()))
for d, rep in summary["scaling"].items():
    print(f"d={d}: mean final regret={rep['final_regret']['mean']:.2f}  "
          f"polylog exponent p in regret ~ (log t)^p: {rep['regret_loglog_exponent']:.2f}")

print(json.dumps(summary["scaling"]["2"]["final_regret"], indent=2))
