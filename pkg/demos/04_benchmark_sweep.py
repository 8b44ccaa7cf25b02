"""Benchmark the learners across criteria, sample sizes, and bootstrap
pruning; this is a scaled-down version of the full evaluation grid."""

import json

from sbcn import SweepConfig, run_sweep

config = SweepConfig.from_json(json.dumps({
    "generator": {"mode": "famafrench"},
    "sample_sizes": [250, 1000],
    "criteria": ["bic", "aic"],
    "bootstrap": [False, True],
    "bootstrap_replicates": 25,
    "learners": ["sbcn", "bn"],
    "repetitions": 5,
    "seed": 30,
    "max_iterations": 2000,
}))

report = run_sweep(config, threads=None, log=print)
print()
print(report.to_text())

# the CSV form carries standard errors for every rate
print(report.to_csv().splitlines()[0])
